#include "cfanet/models.hpp"

#include <random>
#include <string>

#include "cfanet/errors.hpp"

namespace cfanet {
namespace {

template <class... Fs>
struct Overloaded : Fs... {
  using Fs::operator()...;
};
template <class... Fs>
Overloaded(Fs...) -> Overloaded<Fs...>;

// Decorrelates per-layer seeds derived from one model seed.
std::uint64_t layer_seed(std::uint64_t seed, std::uint64_t index) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

std::string layer_label(std::size_t index, const Layer& layer) {
  static const char* names[] = {"conv", "batchnorm", "relu", "selu", "pattern", "residual-add"};
  return "layer " + std::to_string(index) + " (" + names[layer.index()] + ")";
}

// Maps filled one-hot planes to R, G, B order.
Tensor planes_to_rgb(const Tensor& filled, std::span<const CfaCell> planes) {
  Tensor rgb({filled.n(), 3, filled.h(), filled.w()});
  for (std::size_t k = 0; k < planes.size(); ++k) {
    std::size_t channel = 0;
    while (channel < 3 && planes[k].filter[channel] != 1) ++channel;
    if (channel == 3) throw ConfigError("bilinear baseline requires one-hot RGB planes");
    for (std::size_t n = 0; n < filled.n(); ++n) {
      auto src = filled.plane(n, k);
      std::copy(src.begin(), src.end(), rgb.plane(n, channel).begin());
    }
  }
  return rgb;
}

}  // namespace

// --- pattern layer --------------------------------------------------------------

std::vector<CfaCell> PatternLayer::cells() const {
  std::vector<CfaCell> out(cell_count());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i].filter = {weights[i * 3], weights[i * 3 + 1], weights[i * 3 + 2]};
  }
  return out;
}

CfaPattern PatternLayer::as_pattern(const std::string& name) const {
  return CfaPattern(name, tile_h, tile_w, cells(), PlaneGrouping::per_cell);
}

PlaneStack pattern_forward(const Tensor& image, const PatternLayer& layer) {
  if (image.c() != 3) {
    throw ShapeError("pattern layer: expected an RGB image, got shape " + image.shape().str());
  }
  const std::size_t h = image.h();
  const std::size_t w = image.w();
  PlaneStack stack;
  stack.planes = Tensor({image.n(), layer.cell_count(), h, w});
  stack.mask.resize(h * w);
  stack.tile_h = layer.tile_h;
  stack.tile_w = layer.tile_w;
  stack.plane_cells = layer.cells();
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      stack.mask[y * w + x] = static_cast<int>((y % layer.tile_h) * layer.tile_w + x % layer.tile_w);
    }
  }
  for (std::size_t n = 0; n < image.n(); ++n) {
    for (std::size_t y = 0; y < h; ++y) {
      for (std::size_t x = 0; x < w; ++x) {
        const auto cell = static_cast<std::size_t>(stack.mask[y * w + x]);
        const Real* f = &layer.weights[cell * 3];
        stack.planes(n, cell, y, x) =
            f[0] * image(n, 0, y, x) + f[1] * image(n, 1, y, x) + f[2] * image(n, 2, y, x);
      }
    }
  }
  return stack;
}

std::vector<Real> pattern_backward(const Tensor& image, const PatternLayer& layer,
                                   const Tensor& grad_planes) {
  const Shape expected{image.n(), layer.cell_count(), image.h(), image.w()};
  if (image.c() != 3 || grad_planes.shape() != expected) {
    throw ShapeError("pattern_backward: image " + image.shape().str() + " and gradient " +
                     grad_planes.shape().str() + " are inconsistent with a " +
                     std::to_string(layer.tile_h) + "x" + std::to_string(layer.tile_w) + " tile");
  }
  std::vector<Real> grad(layer.weights.size(), Real(0));
  for (std::size_t n = 0; n < image.n(); ++n) {
    for (std::size_t y = 0; y < image.h(); ++y) {
      for (std::size_t x = 0; x < image.w(); ++x) {
        const std::size_t cell = (y % layer.tile_h) * layer.tile_w + x % layer.tile_w;
        const Real g = grad_planes(n, cell, y, x);
        for (std::size_t c = 0; c < 3; ++c) grad[cell * 3 + c] += image(n, c, y, x) * g;
      }
    }
  }
  return grad;
}

void project_pattern_weights(PatternLayer& layer) {
  for (Real& w : layer.weights) {
    if (w < 0) {
      w = 0;
    } else if (w > 1) {
      w = 1;
    }
  }
}

// --- graph ---------------------------------------------------------------------------

const char* to_string(BaselineKind kind) {
  switch (kind) {
    case BaselineKind::none: return "none";
    case BaselineKind::bilinear_bayer: return "bilinear-bayer";
    case BaselineKind::lsq_pattern: return "lsq-pattern";
  }
  return "?";
}

const char* to_string(InputEncoding encoding) {
  return encoding == InputEncoding::sparse ? "sparse" : "filled";
}

void ModelGraph::validate() const {
  if (layers.empty()) throw ConfigError("model '" + arch + "' has no layers");
  std::size_t channels = input_channels;
  std::size_t residual_adds = 0;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const Layer& layer = layers[i];
    std::visit(Overloaded{
                   [&](const ConvLayer& conv) {
                     conv.validate();
                     if (conv.in_channels() != channels) {
                       throw ShapeError(layer_label(i, layer) + " expects " +
                                        std::to_string(conv.in_channels()) +
                                        " input channels, previous layer gives " +
                                        std::to_string(channels));
                     }
                     channels = conv.out_channels();
                   },
                   [&](const BatchNormLayer& bn) {
                     bn.validate();
                     if (bn.channels() != channels) {
                       throw ShapeError(layer_label(i, layer) + " has " +
                                        std::to_string(bn.channels()) + " channels, expected " +
                                        std::to_string(channels));
                     }
                   },
                   [](const ReluLayer&) {},
                   [](const SeluLayer&) {},
                   [&](const PatternLayer& pattern) {
                     if (i != 0) throw ConfigError(layer_label(i, layer) + " must be the first layer");
                     if (pattern.tile_h == 0 || pattern.tile_w == 0 ||
                         pattern.weights.size() != pattern.cell_count() * 3) {
                       throw ShapeError(layer_label(i, layer) + " has inconsistent weights");
                     }
                     if (input_channels != pattern.cell_count()) {
                       throw ShapeError(layer_label(i, layer) + " produces " +
                                        std::to_string(pattern.cell_count()) +
                                        " planes but model input_channels is " +
                                        std::to_string(input_channels));
                     }
                   },
                   [&](const ResidualAdd&) {
                     if (i + 1 != layers.size()) {
                       throw ConfigError(layer_label(i, layer) + " must be the last layer");
                     }
                     ++residual_adds;
                   },
               },
               layer);
  }
  if (channels != output_channels) {
    throw ShapeError("model '" + arch + "' ends with " + std::to_string(channels) +
                     " channels but declares " + std::to_string(output_channels) + " outputs");
  }
  const std::size_t expected_adds = residual_baseline == BaselineKind::none ? 0 : 1;
  if (residual_adds != expected_adds) {
    throw ConfigError("model '" + arch + "' needs exactly " + std::to_string(expected_adds) +
                      " residual-add layer(s) for baseline " + to_string(residual_baseline));
  }
  if (residual_baseline != BaselineKind::none && output_channels != 3) {
    throw ConfigError("residual models must emit 3 channels");
  }
}

PatternLayer* ModelGraph::pattern_layer() {
  if (layers.empty()) return nullptr;
  return std::get_if<PatternLayer>(&layers.front());
}

const PatternLayer* ModelGraph::pattern_layer() const {
  if (layers.empty()) return nullptr;
  return std::get_if<PatternLayer>(&layers.front());
}

std::size_t ModelGraph::conv_count() const {
  std::size_t count = 0;
  for (const Layer& layer : layers) count += std::holds_alternative<ConvLayer>(layer) ? 1 : 0;
  return count;
}

std::size_t ModelGraph::parameter_count() const {
  std::size_t count = 0;
  for (const Layer& layer : layers) {
    if (const auto* conv = std::get_if<ConvLayer>(&layer)) count += conv->parameter_count();
    if (const auto* bn = std::get_if<BatchNormLayer>(&layer)) count += bn->parameter_count();
    if (const auto* pat = std::get_if<PatternLayer>(&layer)) count += pat->weights.size();
  }
  return count;
}

std::size_t ModelGraph::shrink() const {
  std::size_t total = 0;
  for (const Layer& layer : layers) {
    if (const auto* conv = std::get_if<ConvLayer>(&layer)) {
      total += conv->kernel_h() - 1 - 2 * conv->padding;
    }
  }
  return total;
}

void ModelGraph::set_mode(NormMode mode) {
  for (Layer& layer : layers) {
    if (auto* bn = std::get_if<BatchNormLayer>(&layer)) bn->mode = mode;
  }
}

// --- builders -------------------------------------------------------------------------

ModelGraph build_dmcnn(std::uint64_t seed, std::size_t input_channels, Real init_stddev) {
  ModelGraph model;
  model.arch = "dmcnn";
  model.input_channels = input_channels;
  model.output_channels = 3;
  model.residual_baseline = BaselineKind::none;
  model.input_encoding = InputEncoding::sparse;

  ConvLayer extract(128, input_channels, 9, 0);
  init_gaussian(extract, init_stddev, layer_seed(seed, 0));
  ConvLayer mapping(64, 128, 1, 0);
  init_gaussian(mapping, init_stddev, layer_seed(seed, 1));
  ConvLayer reconstruct(3, 64, 5, 0);
  init_gaussian(reconstruct, init_stddev, layer_seed(seed, 2));
  reconstruct.lr_scale = 0.1;

  model.layers = {std::move(extract), ReluLayer{}, std::move(mapping), ReluLayer{},
                  std::move(reconstruct)};
  model.validate();
  return model;
}

ModelGraph build_dmcnn_vd(const VdOptions& options, std::uint64_t seed) {
  if (options.depth < 2) {
    throw ConfigError("DMCNN-VD depth must be at least 2, got " + std::to_string(options.depth));
  }
  if (options.kernel % 2 == 0) {
    throw ConfigError("DMCNN-VD kernel size must be odd for size-preserving padding, got " +
                      std::to_string(options.kernel));
  }
  if (options.width == 0) throw ConfigError("DMCNN-VD width must be positive");
  ModelGraph model;
  model.arch = "dmcnn_vd";
  model.input_channels = options.input_channels;
  model.output_channels = options.output_channels;
  model.residual_baseline = options.baseline;
  model.input_encoding = options.encoding;

  const std::size_t pad = (options.kernel - 1) / 2;
  std::size_t channels = options.input_channels;
  for (std::size_t i = 0; i + 1 < options.depth; ++i) {
    ConvLayer conv(options.width, channels, options.kernel, pad);
    init_msra(conv, options.msra_factor, layer_seed(seed, i), options.msra_scale);
    model.layers.emplace_back(std::move(conv));
    model.layers.emplace_back(BatchNormLayer(options.width));
    model.layers.emplace_back(SeluLayer{});
    channels = options.width;
  }
  ConvLayer last(options.output_channels, channels, options.kernel, pad);
  init_msra(last, options.msra_factor, layer_seed(seed, options.depth - 1), options.msra_scale);
  model.layers.emplace_back(std::move(last));
  if (options.baseline != BaselineKind::none) model.layers.emplace_back(ResidualAdd{});
  model.validate();
  return model;
}

ModelGraph build_dmcnn_vd_for_pattern(const CfaPattern& pattern, std::uint64_t seed,
                                      VdOptions options) {
  options.input_channels = pattern.plane_count();
  options.output_channels = 3;
  options.baseline = is_rgb_identity_basis(pattern) ? BaselineKind::bilinear_bayer
                                                    : BaselineKind::lsq_pattern;
  if (options.baseline == BaselineKind::lsq_pattern) {
    LsqColorSolver check(pattern.planes(), pattern.name());
  }
  return build_dmcnn_vd(options, seed);
}

ModelGraph build_dmcnn_vd_pa(std::uint64_t seed, std::size_t tile_h, std::size_t tile_w,
                             VdOptions body) {
  if (tile_h == 0 || tile_w == 0) throw ConfigError("pattern tile must be at least 1x1");
  if (tile_h * tile_w < 3) {
    throw ConfigError("pattern tile needs at least 3 cells to recover RGB");
  }
  PatternLayer pattern;
  pattern.tile_h = tile_h;
  pattern.tile_w = tile_w;
  pattern.weights.resize(tile_h * tile_w * 3);
  std::mt19937_64 rng(layer_seed(seed, 1000));
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (Real& w : pattern.weights) w = static_cast<Real>(unit(rng));

  body.input_channels = tile_h * tile_w;
  body.output_channels = 3;
  body.baseline = BaselineKind::lsq_pattern;
  ModelGraph model = build_dmcnn_vd(body, seed);
  model.arch = "dmcnn_vd_pa";
  model.layers.insert(model.layers.begin(), std::move(pattern));
  model.validate();
  return model;
}

void zero_final_conv(ModelGraph& model) {
  for (auto it = model.layers.rbegin(); it != model.layers.rend(); ++it) {
    if (auto* conv = std::get_if<ConvLayer>(&*it)) {
      conv->kernel.fill(0);
      std::fill(conv->bias.begin(), conv->bias.end(), Real(0));
      return;
    }
  }
}

// --- execution -----------------------------------------------------------------------------

namespace {

ForwardPass forward_impl(ModelGraph& model, const CfaPattern& pattern, const PlaneStack* stack,
                         const Tensor* rgb, bool keep) {
  ForwardPass pass;
  PatternLayer* pattern_layer = model.pattern_layer();
  if (pattern_layer != nullptr) {
    if (rgb == nullptr) throw ConfigError("model '" + model.arch + "' needs an RGB input");
    pass.stack = pattern_forward(*rgb, *pattern_layer);
  } else {
    if (stack == nullptr) throw ConfigError("model '" + model.arch + "' needs a plane stack");
    if (stack->plane_count() != model.input_channels) {
      throw ShapeError("channel mismatch: model '" + model.arch + "' expects " +
                       std::to_string(model.input_channels) + " input planes, mosaic has " +
                       std::to_string(stack->plane_count()));
    }
    if (pattern.plane_count() != stack->plane_count()) {
      throw ShapeError("channel mismatch: pattern '" + pattern.name() + "' has " +
                       std::to_string(pattern.plane_count()) + " planes, mosaic has " +
                       std::to_string(stack->plane_count()));
    }
    pass.stack = *stack;
  }

  const Tensor& sparse = pass.stack.planes;
  const bool needs_fill =
      model.input_encoding == InputEncoding::filled || model.residual_baseline != BaselineKind::none;
  if (needs_fill) {
    pass.fill.emplace(pass.stack.mask, sparse.h(), sparse.w(), sparse.c(), pass.stack.tile_h,
                      pass.stack.tile_w);
    pass.filled = pass.fill->apply(sparse);
  }
  switch (model.residual_baseline) {
    case BaselineKind::none:
      break;
    case BaselineKind::bilinear_bayer:
      pass.baseline = planes_to_rgb(pass.filled, pass.stack.plane_cells);
      break;
    case BaselineKind::lsq_pattern:
      pass.solver.emplace(pass.stack.plane_cells, pattern_layer ? model.arch : pattern.name());
      pass.baseline = pass.solver->solve(pass.filled);
      break;
  }

  Tensor x = model.input_encoding == InputEncoding::filled ? pass.filled : sparse;
  if (keep) {
    pass.layer_inputs.resize(model.layers.size());
    pass.norm_caches.resize(model.layers.size());
  }
  for (std::size_t i = 0; i < model.layers.size(); ++i) {
    Layer& layer = model.layers[i];
    if (std::holds_alternative<PatternLayer>(layer)) continue;
    if (std::holds_alternative<ResidualAdd>(layer)) {
      pass.body_output = x;
      x = x + pass.baseline;
      continue;
    }
    Tensor input = std::move(x);
    if (auto* conv = std::get_if<ConvLayer>(&layer)) {
      x = conv2d_forward(input, *conv);
    } else if (auto* bn = std::get_if<BatchNormLayer>(&layer)) {
      x = batchnorm_forward(input, *bn, keep ? &pass.norm_caches[i] : nullptr);
    } else if (std::holds_alternative<ReluLayer>(layer)) {
      x = relu(input);
    } else if (std::holds_alternative<SeluLayer>(layer)) {
      x = selu(input);
    }
    if (keep) pass.layer_inputs[i] = std::move(input);
  }
  if (model.residual_baseline == BaselineKind::none) pass.body_output = x;
  pass.output = std::move(x);
  return pass;
}

}  // namespace

ForwardPass run_forward(ModelGraph& model, const CfaPattern& pattern, const PlaneStack* stack,
                        const Tensor* rgb) {
  return forward_impl(model, pattern, stack, rgb, true);
}

ModelGrads run_backward(const ModelGraph& model, const ForwardPass& pass, const Tensor& grad_output,
                        const Tensor* rgb) {
  require_same_shape(grad_output, pass.output, "model backward");
  if (pass.layer_inputs.size() != model.layers.size()) {
    throw ConfigError("model backward: forward pass did not keep activations");
  }
  ModelGrads grads;
  grads.layers.resize(model.layers.size());
  Tensor g = grad_output;
  Tensor grad_baseline;
  for (std::size_t idx = model.layers.size(); idx-- > 0;) {
    const Layer& layer = model.layers[idx];
    if (std::holds_alternative<PatternLayer>(layer)) continue;
    if (std::holds_alternative<ResidualAdd>(layer)) {
      grad_baseline = g;
      continue;
    }
    const Tensor& input = pass.layer_inputs[idx];
    if (const auto* conv = std::get_if<ConvLayer>(&layer)) {
      ConvGrads cg = conv2d_backward(input, *conv, g);
      grads.layers[idx] = {std::vector<Real>(cg.kernel.values().begin(), cg.kernel.values().end()),
                           std::move(cg.bias)};
      g = std::move(cg.input);
    } else if (const auto* bn = std::get_if<BatchNormLayer>(&layer)) {
      BatchNormGrads bg = batchnorm_backward(g, *bn, pass.norm_caches[idx]);
      grads.layers[idx] = {std::move(bg.gamma), std::move(bg.beta)};
      g = std::move(bg.input);
    } else if (std::holds_alternative<ReluLayer>(layer)) {
      g = relu_backward(input, g);
    } else if (std::holds_alternative<SeluLayer>(layer)) {
      g = selu_backward(input, g);
    }
  }

  const PatternLayer* pattern_layer = model.pattern_layer();
  if (pattern_layer == nullptr) return grads;
  if (rgb == nullptr) throw ConfigError("model backward: pattern layer needs the RGB input");

  // g is d loss / d body input. Route it back to the sparse planes.
  Tensor grad_sparse(pass.stack.planes.shape());
  Tensor grad_filled(pass.stack.planes.shape());
  if (model.input_encoding == InputEncoding::filled) {
    grad_filled = std::move(g);
  } else {
    grad_sparse = std::move(g);
  }
  std::vector<Real> filter_grads;
  if (pass.solver) {
    LsqColorSolver::Grads lg = pass.solver->backward(pass.filled, pass.baseline, grad_baseline);
    for (std::size_t i = 0; i < grad_filled.size(); ++i) grad_filled[i] += lg.filled[i];
    filter_grads = std::move(lg.filters);
  }
  if (pass.fill) {
    const Tensor back = pass.fill->backward(grad_filled);
    for (std::size_t i = 0; i < grad_sparse.size(); ++i) grad_sparse[i] += back[i];
  }
  std::vector<Real> weight_grads = pattern_backward(*rgb, *pattern_layer, grad_sparse);
  for (std::size_t i = 0; i < filter_grads.size(); ++i) weight_grads[i] += filter_grads[i];
  grads.layers[0] = {std::move(weight_grads)};
  return grads;
}

std::vector<std::span<Real>> parameter_views(ModelGraph& model) {
  std::vector<std::span<Real>> views;
  for (Layer& layer : model.layers) {
    if (auto* conv = std::get_if<ConvLayer>(&layer)) {
      views.emplace_back(conv->kernel.values());
      views.emplace_back(conv->bias);
    } else if (auto* bn = std::get_if<BatchNormLayer>(&layer)) {
      views.emplace_back(bn->gamma);
      views.emplace_back(bn->beta);
    } else if (auto* pat = std::get_if<PatternLayer>(&layer)) {
      views.emplace_back(pat->weights);
    }
  }
  return views;
}

std::vector<ParamRef> parameter_refs(ModelGraph& model, const ModelGrads& grads) {
  if (grads.layers.size() != model.layers.size()) {
    throw ShapeError("parameter_refs: gradients cover " + std::to_string(grads.layers.size()) +
                     " layers, model has " + std::to_string(model.layers.size()));
  }
  std::vector<ParamRef> refs;
  for (std::size_t i = 0; i < model.layers.size(); ++i) {
    const auto& g = grads.layers[i];
    const std::string prefix = "layer" + std::to_string(i);
    auto need = [&](std::size_t count) {
      if (g.size() != count) {
        throw ShapeError("parameter_refs: missing gradients for " + layer_label(i, model.layers[i]));
      }
    };
    if (auto* conv = std::get_if<ConvLayer>(&model.layers[i])) {
      need(2);
      refs.push_back({prefix + ".kernel", conv->kernel.values(), g[0], conv->lr_scale});
      refs.push_back({prefix + ".bias", conv->bias, g[1], conv->lr_scale});
    } else if (auto* bn = std::get_if<BatchNormLayer>(&model.layers[i])) {
      need(2);
      refs.push_back({prefix + ".gamma", bn->gamma, g[0], 1});
      refs.push_back({prefix + ".beta", bn->beta, g[1], 1});
    } else if (auto* pat = std::get_if<PatternLayer>(&model.layers[i])) {
      need(1);
      refs.push_back({prefix + ".pattern", pat->weights, g[0], 1});
    }
  }
  return refs;
}

Tensor forward_demosaic(ModelGraph& model, const PlaneStack& stack, const CfaPattern& pattern) {
  if (const PatternLayer* layer = model.pattern_layer()) {
    // The pattern layer is the sensor: run the body on the given mosaic.
    if (stack.plane_count() != layer->cell_count()) {
      throw ShapeError("channel mismatch: model '" + model.arch + "' expects " +
                       std::to_string(layer->cell_count()) + " input planes, mosaic has " +
                       std::to_string(stack.plane_count()));
    }
    ModelGraph body = model;
    body.layers.erase(body.layers.begin());
    return forward_impl(body, layer->as_pattern(), &stack, nullptr, false).output;
  }
  return forward_impl(model, pattern, &stack, nullptr, false).output;
}

Tensor baseline_demosaic(const PlaneStack& stack, const CfaPattern& pattern) {
  if (is_rgb_identity_basis(pattern)) return bilinear_demosaic_bayer(stack);
  return lsq_color_baseline(bilinear_fill(stack, pattern), pattern, false);
}

CfaPattern effective_pattern(const ModelGraph& model, const CfaPattern& fallback) {
  if (const PatternLayer* layer = model.pattern_layer()) return layer->as_pattern();
  return fallback;
}

LossResult demosaic_loss(const Tensor& output, const Tensor& truth) {
  if (truth.h() == output.h() && truth.w() == output.w()) return l2_loss(output, truth);
  return l2_loss(output, truth.center_crop(output.h(), output.w()));
}

}  // namespace cfanet
