#include "cfanet/stack_io.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "cfanet/errors.hpp"

namespace cfanet {
namespace {

constexpr char kMagic[8] = {'C', 'F', 'A', 'S', 'T', 'A', 'C', 'K'};
constexpr std::uint32_t kVersion = 1;

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

void put_f64(std::string& out, double v) {
  const auto bits = std::bit_cast<std::uint64_t>(v);
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((bits >> (8 * i)) & 0xFF));
}

class Cursor {
 public:
  Cursor(const std::string& data, std::string source) : data_(data), source_(std::move(source)) {}
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= std::uint32_t(static_cast<unsigned char>(data_[pos_ + i])) << (8 * i);
    pos_ += 4;
    return v;
  }
  double f64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= std::uint64_t(static_cast<unsigned char>(data_[pos_ + i])) << (8 * i);
    pos_ += 8;
    return std::bit_cast<double>(v);
  }
  std::string text(std::size_t len) {
    need(len);
    std::string s = data_.substr(pos_, len);
    pos_ += len;
    return s;
  }
  void need(std::size_t n) const {
    if (n > data_.size() - pos_) {
      throw TruncatedFileError("mosaic file " + source_ + " is truncated at byte " +
                               std::to_string(pos_));
    }
  }
  bool at_end() const { return pos_ == data_.size(); }

 private:
  const std::string& data_;
  std::string source_;
  std::size_t pos_ = 0;
};

}  // namespace

void write_mosaic_file(const MosaicFile& file, const std::filesystem::path& path) {
  const Tensor& planes = file.stack.planes;
  if (planes.n() != 1) throw ShapeError("mosaic file holds a single image, got " + planes.shape().str());
  std::string out(kMagic, sizeof kMagic);
  put_u32(out, kVersion);
  put_u32(out, static_cast<std::uint32_t>(planes.h()));
  put_u32(out, static_cast<std::uint32_t>(planes.w()));
  put_u32(out, static_cast<std::uint32_t>(planes.c()));
  put_u32(out, static_cast<std::uint32_t>(file.phase_y));
  put_u32(out, static_cast<std::uint32_t>(file.phase_x));
  const CfaPattern& p = file.pattern;
  put_u32(out, static_cast<std::uint32_t>(p.name().size()));
  out += p.name();
  put_u32(out, static_cast<std::uint32_t>(p.tile_h()));
  put_u32(out, static_cast<std::uint32_t>(p.tile_w()));
  put_u32(out, p.grouping() == PlaneGrouping::per_cell ? 1 : 0);
  for (const CfaCell& cell : p.cells()) {
    for (Real v : cell.filter) put_f64(out, static_cast<double>(v));
    put_f64(out, static_cast<double>(cell.exposure));
  }
  for (Real v : planes.values()) put_f64(out, static_cast<double>(v));

  std::ofstream stream(path, std::ios::binary | std::ios::trunc);
  if (!stream) throw IoError("cannot write " + path.string());
  stream.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!stream) throw IoError("failed writing " + path.string());
}

MosaicFile read_mosaic_file(const std::filesystem::path& path) {
  std::ifstream stream(path, std::ios::binary);
  if (!stream) throw IoError("cannot open " + path.string());
  const std::string data(std::istreambuf_iterator<char>(stream), {});
  const std::string source = path.string();
  Cursor in(data, source);
  if (in.text(sizeof kMagic) != std::string(kMagic, sizeof kMagic)) {
    throw FormatError(source + " is not a mosaic file (bad magic)");
  }
  const std::uint32_t version = in.u32();
  if (version != kVersion) {
    throw VersionError("mosaic file " + source + " has version " + std::to_string(version));
  }
  const std::size_t h = in.u32();
  const std::size_t w = in.u32();
  const std::size_t k = in.u32();
  MosaicFile file;
  file.phase_y = in.u32();
  file.phase_x = in.u32();
  const std::uint32_t name_len = in.u32();
  if (name_len > 4096) throw FormatError("mosaic file " + source + ": implausible name length");
  const std::string name = in.text(name_len);
  const std::size_t th = in.u32();
  const std::size_t tw = in.u32();
  const std::uint32_t grouping = in.u32();
  if (th == 0 || tw == 0 || th * tw > 4096 || grouping > 1 || h == 0 || w == 0 ||
      h > (1u << 16) || w > (1u << 16)) {
    throw FormatError("mosaic file " + source + ": invalid header");
  }
  std::vector<CfaCell> cells(th * tw);
  for (CfaCell& cell : cells) {
    for (Real& v : cell.filter) v = static_cast<Real>(in.f64());
    cell.exposure = static_cast<Real>(in.f64());
  }
  try {
    file.pattern = CfaPattern(name, th, tw, std::move(cells),
                              grouping == 1 ? PlaneGrouping::per_cell : PlaneGrouping::merge_identical);
  } catch (const ConfigError& e) {
    throw FormatError("mosaic file " + source + ": " + e.what());
  }
  if (file.pattern.plane_count() != k) {
    throw FormatError("mosaic file " + source + ": header says " + std::to_string(k) +
                      " planes, pattern has " + std::to_string(file.pattern.plane_count()));
  }
  in.need(k * h * w * 8);
  PlaneStack& stack = file.stack;
  stack.planes = Tensor({1, k, h, w});
  for (Real& v : stack.planes.values()) v = static_cast<Real>(in.f64());
  if (!in.at_end()) throw FormatError("mosaic file " + source + " has trailing bytes");
  stack.mask = sample_mask(file.pattern, h, w, file.phase_y, file.phase_x);
  stack.tile_h = th;
  stack.tile_w = tw;
  stack.plane_cells.assign(file.pattern.planes().begin(), file.pattern.planes().end());
  return file;
}

Tensor mosaic_preview(const PlaneStack& stack) {
  const Tensor& p = stack.planes;
  Tensor out({1, 3, p.h(), p.w()});
  for (std::size_t y = 0; y < p.h(); ++y) {
    for (std::size_t x = 0; x < p.w(); ++x) {
      const auto k = static_cast<std::size_t>(stack.mask_at(y, x));
      const CfaCell& cell = stack.plane_cells[k];
      const Real v = p(0, k, y, x) / cell.exposure;
      for (std::size_t c = 0; c < 3; ++c) {
        out(0, c, y, x) = std::clamp(v * cell.filter[c], Real{0}, Real{1});
      }
    }
  }
  return out;
}

}  // namespace cfanet
