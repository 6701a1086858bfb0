#include "cfanet/cfa.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "cfanet/errors.hpp"
#include "cfanet/svec.hpp"

namespace cfanet {
namespace {

constexpr Filter kRed{1, 0, 0};
constexpr Filter kGreen{0, 1, 0};
constexpr Filter kBlue{0, 0, 1};

std::vector<CfaCell> unit_exposure(std::initializer_list<Filter> filters) {
  std::vector<CfaCell> cells;
  for (const Filter& f : filters) cells.push_back({f, 1});
  return cells;
}

}  // namespace

// --- CfaPattern ----------------------------------------------------------------

CfaPattern::CfaPattern(std::string name, std::size_t tile_h, std::size_t tile_w,
                       std::vector<CfaCell> cells, PlaneGrouping grouping)
    : name_(std::move(name)),
      tile_h_(tile_h),
      tile_w_(tile_w),
      grouping_(grouping),
      cells_(std::move(cells)) {
  if (tile_h_ == 0 || tile_w_ == 0) {
    throw ConfigError("pattern '" + name_ + "': tile dimensions must be at least 1x1");
  }
  if (cells_.size() != tile_h_ * tile_w_) {
    throw ConfigError("pattern '" + name_ + "': expected " + std::to_string(tile_h_ * tile_w_) +
                      " cells, got " + std::to_string(cells_.size()));
  }
  for (std::size_t i = 0; i < cells_.size(); ++i) {
    for (Real v : cells_[i].filter) {
      if (!(v >= 0 && v <= 1)) {
        throw ConfigError("pattern '" + name_ + "': cell " + std::to_string(i) +
                          " has filter weight outside [0,1]");
      }
    }
    if (!(cells_[i].exposure > 0) || !std::isfinite(cells_[i].exposure)) {
      throw ConfigError("pattern '" + name_ + "': cell " + std::to_string(i) +
                        " has non-positive exposure");
    }
  }
  cell_plane_.resize(cells_.size());
  for (std::size_t i = 0; i < cells_.size(); ++i) {
    if (grouping_ == PlaneGrouping::merge_identical) {
      auto it = std::find(planes_.begin(), planes_.end(), cells_[i]);
      if (it != planes_.end()) {
        cell_plane_[i] = static_cast<int>(it - planes_.begin());
        continue;
      }
    }
    cell_plane_[i] = static_cast<int>(planes_.size());
    planes_.push_back(cells_[i]);
  }
}

CfaPattern CfaPattern::shifted(std::size_t dy, std::size_t dx) const {
  std::vector<CfaCell> rolled(cells_.size());
  for (std::size_t y = 0; y < tile_h_; ++y) {
    for (std::size_t x = 0; x < tile_w_; ++x) rolled[y * tile_w_ + x] = cell_at(y + dy, x + dx);
  }
  return CfaPattern(name_, tile_h_, tile_w_, std::move(rolled), grouping_);
}

CfaPattern builtin_pattern(const std::string& name) {
  if (name == "bayer") {
    return CfaPattern("bayer", 2, 2, unit_exposure({kGreen, kRed, kBlue, kGreen}));
  }
  if (name == "diagonal_stripe") {
    // Row r, column c holds primary (c - r) mod 3.
    const Filter primaries[3] = {kRed, kGreen, kBlue};
    std::vector<CfaCell> cells;
    for (int r = 0; r < 3; ++r) {
      for (int c = 0; c < 3; ++c) cells.push_back({primaries[((c - r) % 3 + 3) % 3], 1});
    }
    return CfaPattern("diagonal_stripe", 3, 3, std::move(cells));
  }
  if (name == "cygm") {
    return CfaPattern("cygm", 2, 2,
                      unit_exposure({{0, 1, 1}, {1, 1, 0}, {0, 1, 0}, {1, 0, 1}}));
  }
  if (name == "hirakawa") {
    // CSS colors: deep pink, spring green, slate blue, chartreuse. Four rows,
    // two columns; the second column is the first rotated by two cells.
    const Filter deep_pink{1.0, 20.0 / 255.0, 147.0 / 255.0};
    const Filter spring_green{0.0, 1.0, 127.0 / 255.0};
    const Filter slate_blue{106.0 / 255.0, 90.0 / 255.0, 205.0 / 255.0};
    const Filter chartreuse{127.0 / 255.0, 1.0, 0.0};
    return CfaPattern("hirakawa", 4, 2,
                      unit_exposure({deep_pink, slate_blue, spring_green, chartreuse, slate_blue,
                                     deep_pink, chartreuse, spring_green}));
  }
  if (name == "svec") return svec_pattern(SvecConfig{});
  throw ConfigError("unknown pattern '" + name +
                    "' (expected bayer, diagonal_stripe, cygm, hirakawa, svec or a pattern file)");
}

std::vector<std::string> builtin_pattern_names() {
  return {"bayer", "diagonal_stripe", "cygm", "hirakawa", "svec"};
}

bool is_rgb_identity_basis(const CfaPattern& pattern) {
  if (pattern.plane_count() != 3) return false;
  bool seen[3] = {false, false, false};
  for (const CfaCell& p : pattern.planes()) {
    if (p.exposure != 1) return false;
    int hot = -1;
    for (int c = 0; c < 3; ++c) {
      if (p.filter[c] == 1) {
        if (hot >= 0) return false;
        hot = c;
      } else if (p.filter[c] != 0) {
        return false;
      }
    }
    if (hot < 0 || seen[hot]) return false;
    seen[hot] = true;
  }
  return true;
}

// --- mosaic ----------------------------------------------------------------------

std::vector<int> sample_mask(const CfaPattern& pattern, std::size_t h, std::size_t w,
                             std::size_t phase_y, std::size_t phase_x) {
  std::vector<int> mask(h * w);
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) mask[y * w + x] = pattern.plane_at(y + phase_y, x + phase_x);
  }
  return mask;
}

PlaneStack mosaic(const Tensor& image, const CfaPattern& pattern, std::size_t phase_y,
                  std::size_t phase_x) {
  if (image.c() != 3) {
    throw ShapeError("mosaic: expected an RGB image, got shape " + image.shape().str());
  }
  const std::size_t h = image.h();
  const std::size_t w = image.w();
  PlaneStack stack;
  stack.planes = Tensor({image.n(), pattern.plane_count(), h, w});
  stack.mask = sample_mask(pattern, h, w, phase_y, phase_x);
  stack.tile_h = pattern.tile_h();
  stack.tile_w = pattern.tile_w();
  stack.plane_cells.assign(pattern.planes().begin(), pattern.planes().end());
  for (std::size_t n = 0; n < image.n(); ++n) {
    for (std::size_t y = 0; y < h; ++y) {
      for (std::size_t x = 0; x < w; ++x) {
        const CfaCell& cell = pattern.cell_at(y + phase_y, x + phase_x);
        const Real v = cell.filter[0] * image(n, 0, y, x) + cell.filter[1] * image(n, 1, y, x) +
                       cell.filter[2] * image(n, 2, y, x);
        stack.planes(n, static_cast<std::size_t>(stack.mask[y * w + x]), y, x) = v * cell.exposure;
      }
    }
  }
  return stack;
}

Tensor sampled_values(const PlaneStack& stack) {
  const Tensor& p = stack.planes;
  Tensor out({p.n(), 1, p.h(), p.w()});
  for (std::size_t n = 0; n < p.n(); ++n) {
    for (std::size_t y = 0; y < p.h(); ++y) {
      for (std::size_t x = 0; x < p.w(); ++x) {
        out(n, 0, y, x) = p(n, static_cast<std::size_t>(stack.mask_at(y, x)), y, x);
      }
    }
  }
  return out;
}

// --- bilinear fill -------------------------------------------------------------------

BilinearFill::BilinearFill(std::span<const int> mask, std::size_t h, std::size_t w,
                           std::size_t planes, std::size_t tile_h, std::size_t tile_w)
    : h_(h), w_(w), planes_(planes) {
  if (mask.size() != h * w) throw ShapeError("bilinear fill: mask size does not match image");
  std::vector<std::size_t> counts(planes, 0);
  for (int m : mask) {
    if (m < 0 || static_cast<std::size_t>(m) >= planes) {
      throw ShapeError("bilinear fill: mask references plane " + std::to_string(m) + " of " +
                       std::to_string(planes));
    }
    ++counts[static_cast<std::size_t>(m)];
  }
  for (std::size_t k = 0; k < planes; ++k) {
    if (counts[k] == 0) {
      throw EmptyPlaneError("bilinear fill: plane " + std::to_string(k) +
                            " has no sample sites in a " + std::to_string(h) + "x" +
                            std::to_string(w) + " image");
    }
  }

  const auto ry = static_cast<std::ptrdiff_t>(tile_h);
  const auto rx = static_cast<std::ptrdiff_t>(tile_w);
  stencils_.resize(planes * h * w);
  for (std::size_t k = 0; k < planes; ++k) {
    for (std::size_t y = 0; y < h; ++y) {
      for (std::size_t x = 0; x < w; ++x) {
        Stencil& s = stencils_[(k * h + y) * w + x];
        s.begin = static_cast<std::uint32_t>(taps_.size());
        s.total_weight = 0;
        if (mask[y * w + x] != static_cast<int>(k)) {
          for (std::ptrdiff_t dy = -ry + 1; dy < ry; ++dy) {
            const std::ptrdiff_t sy = static_cast<std::ptrdiff_t>(y) + dy;
            if (sy < 0 || sy >= static_cast<std::ptrdiff_t>(h)) continue;
            for (std::ptrdiff_t dx = -rx + 1; dx < rx; ++dx) {
              const std::ptrdiff_t sx = static_cast<std::ptrdiff_t>(x) + dx;
              if (sx < 0 || sx >= static_cast<std::ptrdiff_t>(w)) continue;
              const auto src = static_cast<std::size_t>(sy) * w + static_cast<std::size_t>(sx);
              if (mask[src] != static_cast<int>(k)) continue;
              const auto weight = static_cast<std::uint32_t>((ry - std::abs(dy)) * (rx - std::abs(dx)));
              taps_.push_back({static_cast<std::uint32_t>(src), weight});
              s.total_weight += weight;
            }
          }
          if (s.total_weight == 0) {
            throw EmptyPlaneError("bilinear fill: plane " + std::to_string(k) +
                                  " has no sample within one tile period of pixel (" +
                                  std::to_string(y) + ", " + std::to_string(x) + ")");
          }
        }
        s.end = static_cast<std::uint32_t>(taps_.size());
      }
    }
  }
}

Tensor BilinearFill::apply(const Tensor& sparse) const {
  if (sparse.c() != planes_ || sparse.h() != h_ || sparse.w() != w_) {
    throw ShapeError("bilinear fill: stack shape " + sparse.shape().str() +
                     " does not match the fill plan");
  }
  Tensor dense(sparse.shape());
  for (std::size_t n = 0; n < sparse.n(); ++n) {
    for (std::size_t k = 0; k < planes_; ++k) {
      auto src = sparse.plane(n, k);
      auto dst = dense.plane(n, k);
      const Stencil* st = &stencils_[k * h_ * w_];
      for (std::size_t i = 0; i < h_ * w_; ++i) {
        const Stencil& s = st[i];
        if (s.total_weight == 0) {
          dst[i] = src[i];
          continue;
        }
        // Centered on the first tap so constant neighbourhoods reproduce
        // their value bit-exactly.
        const Real ref = src[taps_[s.begin].src];
        Real acc = 0;
        for (std::uint32_t t = s.begin; t < s.end; ++t) {
          acc += static_cast<Real>(taps_[t].weight) * (src[taps_[t].src] - ref);
        }
        dst[i] = ref + acc / static_cast<Real>(s.total_weight);
      }
    }
  }
  return dense;
}

Tensor BilinearFill::backward(const Tensor& grad_dense) const {
  if (grad_dense.c() != planes_ || grad_dense.h() != h_ || grad_dense.w() != w_) {
    throw ShapeError("bilinear fill backward: gradient shape " + grad_dense.shape().str() +
                     " does not match the fill plan");
  }
  Tensor grad(grad_dense.shape());
  for (std::size_t n = 0; n < grad_dense.n(); ++n) {
    for (std::size_t k = 0; k < planes_; ++k) {
      auto g_in = grad_dense.plane(n, k);
      auto g_out = grad.plane(n, k);
      const Stencil* st = &stencils_[k * h_ * w_];
      for (std::size_t i = 0; i < h_ * w_; ++i) {
        const Stencil& s = st[i];
        if (s.total_weight == 0) {
          g_out[i] += g_in[i];
          continue;
        }
        const Real scale = g_in[i] / static_cast<Real>(s.total_weight);
        for (std::uint32_t t = s.begin; t < s.end; ++t) {
          g_out[taps_[t].src] += static_cast<Real>(taps_[t].weight) * scale;
        }
      }
    }
  }
  return grad;
}

Tensor bilinear_fill(const PlaneStack& stack, const CfaPattern& pattern) {
  if (stack.plane_count() != pattern.plane_count()) {
    throw ShapeError("bilinear fill: stack has " + std::to_string(stack.plane_count()) +
                     " planes but pattern '" + pattern.name() + "' has " +
                     std::to_string(pattern.plane_count()));
  }
  BilinearFill plan(stack.mask, stack.planes.h(), stack.planes.w(), stack.plane_count(),
                    pattern.tile_h(), pattern.tile_w());
  return plan.apply(stack.planes);
}

Tensor bilinear_demosaic_bayer(const PlaneStack& stack) {
  std::vector<CfaCell> cells = stack.plane_cells;
  if (cells.size() != 3) {
    throw ConfigError("bilinear_demosaic_bayer: expected 3 planes, stack has " +
                      std::to_string(cells.size()));
  }
  const CfaPattern planes_only("stack", 1, 3, cells);
  if (!is_rgb_identity_basis(planes_only)) {
    throw ConfigError("bilinear_demosaic_bayer: stack planes are not the RGB one-hot filters");
  }
  BilinearFill plan(stack.mask, stack.planes.h(), stack.planes.w(), 3, stack.tile_h, stack.tile_w);
  const Tensor filled = plan.apply(stack.planes);
  Tensor rgb(filled.shape());
  for (std::size_t k = 0; k < 3; ++k) {
    const auto channel = static_cast<std::size_t>(
        std::find(cells[k].filter.begin(), cells[k].filter.end(), Real(1)) - cells[k].filter.begin());
    for (std::size_t n = 0; n < filled.n(); ++n) {
      auto src = filled.plane(n, k);
      std::copy(src.begin(), src.end(), rgb.plane(n, channel).begin());
    }
  }
  return rgb;
}

// --- least-squares color recovery --------------------------------------------------------

LsqColorSolver::LsqColorSolver(std::span<const CfaCell> planes, const std::string& label) {
  const std::size_t k = planes.size();
  if (k < 3) {
    throw DegeneratePatternError("pattern '" + label + "' has " + std::to_string(k) +
                                 " planes; color recovery needs at least 3");
  }
  a_.resize(k * 3);
  exposure_.resize(k);
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = 0; j < 3; ++j) a_[i * 3 + j] = planes[i].filter[j];
    exposure_[i] = planes[i].exposure;
  }
  std::array<Real, 9> gram{};
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t r = 0; r < 3; ++r) {
      for (std::size_t c = 0; c < 3; ++c) gram[r * 3 + c] += a_[i * 3 + r] * a_[i * 3 + c];
    }
  }
  const auto g = [&](std::size_t r, std::size_t c) { return gram[r * 3 + c]; };
  const Real cof00 = g(1, 1) * g(2, 2) - g(1, 2) * g(2, 1);
  const Real cof01 = g(1, 2) * g(2, 0) - g(1, 0) * g(2, 2);
  const Real cof02 = g(1, 0) * g(2, 1) - g(1, 1) * g(2, 0);
  const Real det = g(0, 0) * cof00 + g(0, 1) * cof01 + g(0, 2) * cof02;
  const Real trace = g(0, 0) + g(1, 1) + g(2, 2);
  const Real scale = trace / 3;
  if (!(trace > 0) || !(std::abs(det) > 1e-10 * scale * scale * scale)) {
    throw DegeneratePatternError("pattern '" + label +
                                 "' is degenerate: its filters do not span RGB (rank < 3)");
  }
  // Symmetric adjugate / det.
  gram_inv_[0] = cof00 / det;
  gram_inv_[1] = (g(0, 2) * g(2, 1) - g(0, 1) * g(2, 2)) / det;
  gram_inv_[2] = (g(0, 1) * g(1, 2) - g(0, 2) * g(1, 1)) / det;
  gram_inv_[3] = cof01 / det;
  gram_inv_[4] = (g(0, 0) * g(2, 2) - g(0, 2) * g(2, 0)) / det;
  gram_inv_[5] = (g(0, 2) * g(1, 0) - g(0, 0) * g(1, 2)) / det;
  gram_inv_[6] = cof02 / det;
  gram_inv_[7] = (g(0, 1) * g(2, 0) - g(0, 0) * g(2, 1)) / det;
  gram_inv_[8] = (g(0, 0) * g(1, 1) - g(0, 1) * g(1, 0)) / det;

  pinv_.assign(3 * k, Real(0));
  for (std::size_t r = 0; r < 3; ++r) {
    for (std::size_t i = 0; i < k; ++i) {
      Real acc = 0;
      for (std::size_t c = 0; c < 3; ++c) acc += gram_inv_[r * 3 + c] * a_[i * 3 + c];
      pinv_[r * k + i] = acc / exposure_[i];
    }
  }
}

Tensor LsqColorSolver::solve(const Tensor& filled) const {
  const std::size_t k = plane_count();
  if (filled.c() != k) {
    throw ShapeError("least-squares color: expected " + std::to_string(k) + " planes, got " +
                     filled.shape().str());
  }
  const std::size_t hw = filled.h() * filled.w();
  Tensor rgb({filled.n(), 3, filled.h(), filled.w()});
  for (std::size_t n = 0; n < filled.n(); ++n) {
    for (std::size_t r = 0; r < 3; ++r) {
      auto dst = rgb.plane(n, r);
      for (std::size_t i = 0; i < k; ++i) {
        const Real coef = pinv_[r * k + i];
        auto src = filled.plane(n, i);
        for (std::size_t p = 0; p < hw; ++p) dst[p] += coef * src[p];
      }
    }
  }
  return rgb;
}

LsqColorSolver::Grads LsqColorSolver::backward(const Tensor& filled, const Tensor& solution,
                                               const Tensor& grad_rgb) const {
  // c = P A^T b', b' = b / e, P = (A^T A)^-1. With u = P g and r = b' - A c:
  // dL/db' = A u, dL/dA = r u^T - (A u) c^T.
  const std::size_t k = plane_count();
  require_same_shape(solution, grad_rgb, "least-squares color backward");
  Grads grads{Tensor(filled.shape()), std::vector<Real>(k * 3, Real(0))};
  const std::size_t hw = filled.h() * filled.w();
  std::vector<Real> b(k), au(k);
  for (std::size_t n = 0; n < filled.n(); ++n) {
    for (std::size_t p = 0; p < hw; ++p) {
      Real gvec[3], cvec[3], u[3];
      for (std::size_t r = 0; r < 3; ++r) {
        gvec[r] = grad_rgb.plane(n, r)[p];
        cvec[r] = solution.plane(n, r)[p];
      }
      for (std::size_t r = 0; r < 3; ++r) {
        u[r] = gram_inv_[r * 3 + 0] * gvec[0] + gram_inv_[r * 3 + 1] * gvec[1] +
               gram_inv_[r * 3 + 2] * gvec[2];
      }
      for (std::size_t i = 0; i < k; ++i) {
        const Real* row = &a_[i * 3];
        b[i] = filled.plane(n, i)[p] / exposure_[i];
        au[i] = row[0] * u[0] + row[1] * u[1] + row[2] * u[2];
        const Real resid = b[i] - (row[0] * cvec[0] + row[1] * cvec[1] + row[2] * cvec[2]);
        grads.filled.plane(n, i)[p] = au[i] / exposure_[i];
        for (std::size_t j = 0; j < 3; ++j) {
          grads.filters[i * 3 + j] += resid * u[j] - au[i] * cvec[j];
        }
      }
    }
  }
  return grads;
}

Tensor lsq_color_baseline(const Tensor& filled, const CfaPattern& pattern, bool clamp) {
  const LsqColorSolver solver(pattern.planes(), pattern.name());
  Tensor rgb = solver.solve(filled);
  if (clamp) {
    for (Real& v : rgb.values()) v = std::clamp(v, Real(0), Real(1));
  }
  return rgb;
}

// --- pattern text files -----------------------------------------------------------------

namespace {

Real parse_real(const std::string& token, std::size_t line_no) {
  double value = 0;
  const char* first = token.data();
  const char* last = token.data() + token.size();
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last || !std::isfinite(value)) {
    throw ConfigError("pattern file line " + std::to_string(line_no) + ": '" + token +
                      "' is not a finite decimal number");
  }
  return static_cast<Real>(value);
}

std::size_t parse_count(const std::string& token, std::size_t line_no) {
  std::size_t value = 0;
  auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
  if (ec != std::errc() || ptr != token.data() + token.size() || value == 0) {
    throw ConfigError("pattern file line " + std::to_string(line_no) + ": '" + token +
                      "' is not a positive integer");
  }
  return value;
}

}  // namespace

std::string format_pattern(const CfaPattern& pattern) {
  std::ostringstream os;
  os.precision(std::numeric_limits<double>::max_digits10);
  os << "# cfanet pattern\n";
  os << "name " << (pattern.name().empty() ? "unnamed" : pattern.name()) << "\n";
  os << "tile " << pattern.tile_h() << " " << pattern.tile_w() << "\n";
  os << "planes "
     << (pattern.grouping() == PlaneGrouping::per_cell ? "per_cell" : "merged") << "\n";
  for (const CfaCell& cell : pattern.cells()) {
    os << static_cast<double>(cell.filter[0]) << " " << static_cast<double>(cell.filter[1]) << " "
       << static_cast<double>(cell.filter[2]);
    if (cell.exposure != 1) os << " " << static_cast<double>(cell.exposure);
    os << "\n";
  }
  return os.str();
}

CfaPattern parse_pattern(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::string name = "custom";
  std::size_t tile_h = 0;
  std::size_t tile_w = 0;
  PlaneGrouping grouping = PlaneGrouping::merge_identical;
  std::vector<CfaCell> cells;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream fields(line);
    std::vector<std::string> tokens;
    for (std::string t; fields >> t;) tokens.push_back(t);
    if (tokens.empty()) continue;
    const std::string& head = tokens.front();
    if (head == "name") {
      if (tokens.size() != 2) throw ConfigError("pattern file line " + std::to_string(line_no) + ": expected 'name <label>'");
      name = tokens[1];
    } else if (head == "tile") {
      if (tokens.size() != 3) throw ConfigError("pattern file line " + std::to_string(line_no) + ": expected 'tile <rows> <cols>'");
      tile_h = parse_count(tokens[1], line_no);
      tile_w = parse_count(tokens[2], line_no);
    } else if (head == "planes") {
      if (tokens.size() != 2 || (tokens[1] != "merged" && tokens[1] != "per_cell")) {
        throw ConfigError("pattern file line " + std::to_string(line_no) + ": expected 'planes merged|per_cell'");
      }
      grouping = tokens[1] == "per_cell" ? PlaneGrouping::per_cell : PlaneGrouping::merge_identical;
    } else {
      if (tile_h == 0) {
        throw ConfigError("pattern file line " + std::to_string(line_no) +
                          ": cell given before 'tile <rows> <cols>'");
      }
      if (tokens.size() != 3 && tokens.size() != 4) {
        throw ConfigError("pattern file line " + std::to_string(line_no) +
                          ": expected '<r> <g> <b> [exposure]'");
      }
      CfaCell cell;
      for (std::size_t c = 0; c < 3; ++c) cell.filter[c] = parse_real(tokens[c], line_no);
      if (tokens.size() == 4) cell.exposure = parse_real(tokens[3], line_no);
      cells.push_back(cell);
    }
  }
  if (tile_h == 0) throw ConfigError("pattern file: missing 'tile <rows> <cols>' line");
  return CfaPattern(name, tile_h, tile_w, std::move(cells), grouping);
}

CfaPattern load_pattern_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open pattern file " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_pattern(buffer.str());
}

void save_pattern_file(const CfaPattern& pattern, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write pattern file " + path.string());
  out << format_pattern(pattern);
  if (!out) throw IoError("failed writing pattern file " + path.string());
}

CfaPattern resolve_pattern(const std::string& name_or_path) {
  const auto names = builtin_pattern_names();
  if (std::find(names.begin(), names.end(), name_or_path) != names.end()) {
    return builtin_pattern(name_or_path);
  }
  if (std::filesystem::exists(name_or_path)) return load_pattern_file(name_or_path);
  return builtin_pattern(name_or_path);  // throws the unknown-name error
}

}  // namespace cfanet
