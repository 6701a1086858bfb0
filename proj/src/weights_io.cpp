// Weight file layout (all integers and reals little-endian):
//
//   magic            8 bytes  "CFANETWT"
//   version          u32      1
//   arch             u32 length + UTF-8 bytes
//   input_channels   u32
//   output_channels  u32
//   baseline         u32      0 none, 1 bilinear-bayer, 2 lsq-pattern
//   encoding         u32      0 sparse, 1 filled
//   layer_count      u32
//   layers           layer_count records, each: u32 type tag, then
//     1 conv         u32 out, in, kh, kw, padding; f64 lr_scale;
//                    f64[out*in*kh*kw] kernel; f64[out] bias
//     2 batchnorm    u32 channels; f64 epsilon, momentum;
//                    f64[c] gamma, beta, running_mean, running_var
//     3 relu, 4 selu, 6 residual-add   (no payload)
//     5 pattern      u32 tile_h, tile_w; f64[tile_h*tile_w*3] weights
//   has_state        u32      0 or 1; when 1:
//     u64 iteration; u64 optimizer step; u32 kind (0 sgd-clip, 1 adam);
//     f64 learning_rate, clip_threshold, beta1, beta2, adam_epsilon;
//     u32 moment_count; per moment: u64 length, f64[length] m, f64[length] v
//   end marker       4 bytes  "DONE"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "cfanet/errors.hpp"
#include "cfanet/models.hpp"

namespace cfanet {
namespace {

constexpr char kMagic[8] = {'C', 'F', 'A', 'N', 'E', 'T', 'W', 'T'};
constexpr char kEndMarker[4] = {'D', 'O', 'N', 'E'};
constexpr std::uint32_t kVersion = 1;
// Guards allocations driven by corrupt headers.
constexpr std::uint64_t kMaxElements = std::uint64_t{1} << 32;

enum Tag : std::uint32_t {
  kConv = 1,
  kBatchNorm = 2,
  kRelu = 3,
  kSelu = 4,
  kPattern = 5,
  kResidual = 6,
};

class Writer {
 public:
  void bytes(const void* data, std::size_t size) {
    buffer_.append(static_cast<const char*>(data), size);
  }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) buffer_.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) buffer_.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
  }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void reals(std::span<const Real> values) {
    for (Real v : values) f64(static_cast<double>(v));
  }
  void text(const std::string& s) {
    u32(static_cast<std::uint32_t>(s.size()));
    bytes(s.data(), s.size());
  }
  const std::string& str() const { return buffer_; }

 private:
  std::string buffer_;
};

class Reader {
 public:
  Reader(std::string data, std::string source) : data_(std::move(data)), source_(std::move(source)) {}

  void bytes(void* out, std::size_t size) {
    need(size);
    std::memcpy(out, data_.data() + pos_, size);
    pos_ += size;
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= std::uint32_t(static_cast<unsigned char>(data_[pos_ + i])) << (8 * i);
    pos_ += 4;
    return v;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= std::uint64_t(static_cast<unsigned char>(data_[pos_ + i])) << (8 * i);
    pos_ += 8;
    return v;
  }
  double f64() { return std::bit_cast<double>(u64()); }
  void reals(std::span<Real> out) {
    for (Real& v : out) v = static_cast<Real>(f64());
  }
  std::vector<Real> reals(std::uint64_t count) {
    if (count > kMaxElements) fail("implausible element count " + std::to_string(count));
    need(count * 8);
    std::vector<Real> out(count);
    reals(out);
    return out;
  }
  std::string text() {
    const std::uint32_t len = u32();
    need(len);
    std::string s = data_.substr(pos_, len);
    pos_ += len;
    return s;
  }
  [[noreturn]] void fail(const std::string& what) const {
    throw FormatError("weight file " + source_ + ": " + what);
  }

 private:
  void need(std::uint64_t size) const {
    if (size > data_.size() - pos_) {
      throw TruncatedFileError("weight file " + source_ + " is truncated at byte " +
                               std::to_string(pos_));
    }
  }
  std::string data_;
  std::string source_;
  std::size_t pos_ = 0;
};

void write_layer(Writer& out, const Layer& layer) {
  if (const auto* conv = std::get_if<ConvLayer>(&layer)) {
    out.u32(kConv);
    out.u32(static_cast<std::uint32_t>(conv->out_channels()));
    out.u32(static_cast<std::uint32_t>(conv->in_channels()));
    out.u32(static_cast<std::uint32_t>(conv->kernel_h()));
    out.u32(static_cast<std::uint32_t>(conv->kernel_w()));
    out.u32(static_cast<std::uint32_t>(conv->padding));
    out.f64(static_cast<double>(conv->lr_scale));
    out.reals(conv->kernel.values());
    out.reals(conv->bias);
  } else if (const auto* bn = std::get_if<BatchNormLayer>(&layer)) {
    out.u32(kBatchNorm);
    out.u32(static_cast<std::uint32_t>(bn->channels()));
    out.f64(static_cast<double>(bn->epsilon));
    out.f64(static_cast<double>(bn->momentum));
    out.reals(bn->gamma);
    out.reals(bn->beta);
    out.reals(bn->running_mean);
    out.reals(bn->running_var);
  } else if (std::holds_alternative<ReluLayer>(layer)) {
    out.u32(kRelu);
  } else if (std::holds_alternative<SeluLayer>(layer)) {
    out.u32(kSelu);
  } else if (const auto* pat = std::get_if<PatternLayer>(&layer)) {
    out.u32(kPattern);
    out.u32(static_cast<std::uint32_t>(pat->tile_h));
    out.u32(static_cast<std::uint32_t>(pat->tile_w));
    out.reals(pat->weights);
  } else {
    out.u32(kResidual);
  }
}

Layer read_layer(Reader& in, std::size_t index) {
  const std::uint32_t tag = in.u32();
  switch (tag) {
    case kConv: {
      const std::uint64_t out_c = in.u32(), in_c = in.u32(), kh = in.u32(), kw = in.u32();
      const std::uint32_t pad = in.u32();
      if (out_c == 0 || in_c == 0 || kh == 0 || kw == 0) {
        in.fail("layer " + std::to_string(index) + " has an empty conv kernel");
      }
      ConvLayer conv;
      conv.padding = pad;
      conv.lr_scale = static_cast<Real>(in.f64());
      const std::uint64_t count = out_c * in_c * kh * kw;
      conv.kernel = Tensor({out_c, in_c, kh, kw}, in.reals(count));
      conv.bias = in.reals(out_c);
      return conv;
    }
    case kBatchNorm: {
      const std::uint32_t c = in.u32();
      BatchNormLayer bn;
      bn.epsilon = static_cast<Real>(in.f64());
      bn.momentum = static_cast<Real>(in.f64());
      bn.gamma = in.reals(c);
      bn.beta = in.reals(c);
      bn.running_mean = in.reals(c);
      bn.running_var = in.reals(c);
      return bn;
    }
    case kRelu:
      return ReluLayer{};
    case kSelu:
      return SeluLayer{};
    case kPattern: {
      PatternLayer pat;
      pat.tile_h = in.u32();
      pat.tile_w = in.u32();
      pat.weights = in.reals(std::uint64_t{pat.tile_h} * pat.tile_w * 3);
      return pat;
    }
    case kResidual:
      return ResidualAdd{};
    default:
      in.fail("layer " + std::to_string(index) + " has unknown type tag " + std::to_string(tag));
  }
}

void write_state(Writer& out, const TrainingState& state) {
  const OptimizerState& opt = state.optimizer;
  out.u64(state.iteration);
  out.u64(opt.step);
  out.u32(opt.config.kind == OptimizerKind::adam ? 1 : 0);
  out.f64(static_cast<double>(opt.config.learning_rate));
  out.f64(static_cast<double>(opt.config.clip_threshold));
  out.f64(static_cast<double>(opt.config.beta1));
  out.f64(static_cast<double>(opt.config.beta2));
  out.f64(static_cast<double>(opt.config.adam_epsilon));
  out.u32(static_cast<std::uint32_t>(opt.first_moment.size()));
  for (std::size_t i = 0; i < opt.first_moment.size(); ++i) {
    out.u64(opt.first_moment[i].size());
    out.reals(opt.first_moment[i]);
    out.reals(opt.second_moment[i]);
  }
}

TrainingState read_state(Reader& in) {
  TrainingState state;
  state.iteration = in.u64();
  OptimizerState& opt = state.optimizer;
  opt.step = in.u64();
  const std::uint32_t kind = in.u32();
  if (kind > 1) in.fail("unknown optimizer kind " + std::to_string(kind));
  opt.config.kind = kind == 1 ? OptimizerKind::adam : OptimizerKind::sgd_clip;
  opt.config.learning_rate = static_cast<Real>(in.f64());
  opt.config.clip_threshold = static_cast<Real>(in.f64());
  opt.config.beta1 = static_cast<Real>(in.f64());
  opt.config.beta2 = static_cast<Real>(in.f64());
  opt.config.adam_epsilon = static_cast<Real>(in.f64());
  const std::uint32_t moments = in.u32();
  for (std::uint32_t i = 0; i < moments; ++i) {
    const std::uint64_t len = in.u64();
    opt.first_moment.push_back(in.reals(len));
    opt.second_moment.push_back(in.reals(len));
  }
  return state;
}

std::string describe(const Layer& layer) {
  std::ostringstream os;
  if (const auto* conv = std::get_if<ConvLayer>(&layer)) {
    os << "conv kernel " << conv->kernel.shape().str() << " pad " << conv->padding;
  } else if (const auto* bn = std::get_if<BatchNormLayer>(&layer)) {
    os << "batchnorm channels " << bn->channels();
  } else if (const auto* pat = std::get_if<PatternLayer>(&layer)) {
    os << "pattern tile " << pat->tile_h << "x" << pat->tile_w;
  } else if (std::holds_alternative<ReluLayer>(layer)) {
    os << "relu";
  } else if (std::holds_alternative<SeluLayer>(layer)) {
    os << "selu";
  } else {
    os << "residual-add";
  }
  return os.str();
}

}  // namespace

void save_weights(const ModelGraph& model, const std::filesystem::path& path,
                  const TrainingState* state) {
  model.validate();
  Writer out;
  out.bytes(kMagic, sizeof kMagic);
  out.u32(kVersion);
  out.text(model.arch);
  out.u32(static_cast<std::uint32_t>(model.input_channels));
  out.u32(static_cast<std::uint32_t>(model.output_channels));
  out.u32(static_cast<std::uint32_t>(model.residual_baseline));
  out.u32(model.input_encoding == InputEncoding::sparse ? 0 : 1);
  out.u32(static_cast<std::uint32_t>(model.layers.size()));
  for (const Layer& layer : model.layers) write_layer(out, layer);
  out.u32(state != nullptr ? 1 : 0);
  if (state != nullptr) write_state(out, *state);
  out.bytes(kEndMarker, sizeof kEndMarker);

  std::ofstream file(path, std::ios::binary | std::ios::trunc);
  if (!file) throw IoError("cannot write weight file " + path.string());
  file.write(out.str().data(), static_cast<std::streamsize>(out.str().size()));
  if (!file) throw IoError("failed writing weight file " + path.string());
}

ModelGraph load_weights(const std::filesystem::path& path, TrainingState* state) {
  std::ifstream file(path, std::ios::binary);
  if (!file) throw IoError("cannot open weight file " + path.string());
  std::ostringstream buffer;
  buffer << file.rdbuf();
  Reader in(buffer.str(), path.string());

  char magic[8];
  in.bytes(magic, sizeof magic);
  if (std::memcmp(magic, kMagic, sizeof magic) != 0) in.fail("bad magic bytes");
  const std::uint32_t version = in.u32();
  if (version != kVersion) {
    throw VersionError("weight file " + path.string() + " has format version " +
                       std::to_string(version) + ", this build reads version " +
                       std::to_string(kVersion));
  }
  ModelGraph model;
  model.arch = in.text();
  model.input_channels = in.u32();
  model.output_channels = in.u32();
  const std::uint32_t baseline = in.u32();
  if (baseline > 2) in.fail("unknown baseline kind " + std::to_string(baseline));
  model.residual_baseline = static_cast<BaselineKind>(baseline);
  const std::uint32_t encoding = in.u32();
  if (encoding > 1) in.fail("unknown input encoding " + std::to_string(encoding));
  model.input_encoding = encoding == 0 ? InputEncoding::sparse : InputEncoding::filled;
  const std::uint32_t layer_count = in.u32();
  if (layer_count > 100000) in.fail("implausible layer count " + std::to_string(layer_count));
  for (std::uint32_t i = 0; i < layer_count; ++i) model.layers.push_back(read_layer(in, i));
  const std::uint32_t has_state = in.u32();
  if (has_state > 1) in.fail("bad training-state flag");
  TrainingState loaded;
  if (has_state == 1) loaded = read_state(in);
  char end[4];
  in.bytes(end, sizeof end);
  if (std::memcmp(end, kEndMarker, sizeof end) != 0) in.fail("missing end marker");
  try {
    model.validate();
  } catch (const Error& e) {
    in.fail(std::string("inconsistent model: ") + e.what());
  }
  if (state != nullptr) *state = std::move(loaded);
  return model;
}

void load_weights_into(ModelGraph& model, const std::filesystem::path& path, TrainingState* state) {
  ModelGraph loaded = load_weights(path, state);
  if (loaded.layers.size() != model.layers.size()) {
    throw ShapeError("weight file " + path.string() + " has " +
                     std::to_string(loaded.layers.size()) + " layers, model '" + model.arch +
                     "' has " + std::to_string(model.layers.size()));
  }
  for (std::size_t i = 0; i < model.layers.size(); ++i) {
    const std::string want = describe(model.layers[i]);
    const std::string got = describe(loaded.layers[i]);
    if (want != got) {
      throw ShapeError("weight file " + path.string() + ": layer " + std::to_string(i) +
                       " is '" + got + "' but the model expects '" + want + "'");
    }
  }
  if (loaded.input_channels != model.input_channels ||
      loaded.residual_baseline != model.residual_baseline) {
    throw ShapeError("weight file " + path.string() + " describes a " +
                     std::to_string(loaded.input_channels) + "-plane model with baseline " +
                     to_string(loaded.residual_baseline) + ", expected " +
                     std::to_string(model.input_channels) + " planes with baseline " +
                     to_string(model.residual_baseline));
  }
  model = std::move(loaded);
}

}  // namespace cfanet
