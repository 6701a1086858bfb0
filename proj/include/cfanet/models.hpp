#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "cfanet/cfa.hpp"
#include "cfanet/layers.hpp"
#include "cfanet/optimizer.hpp"
#include "cfanet/tensor.hpp"

namespace cfanet {

struct ReluLayer {};
struct SeluLayer {};
/// Adds the model's baseline reconstruction to the body output. Always last.
struct ResidualAdd {};

/// Trainable CFA: one 1x1x3 filter per tile cell, every cell its own plane.
/// Weights stay inside [0,1] through project_pattern_weights().
struct PatternLayer {
  std::size_t tile_h = 3;
  std::size_t tile_w = 3;
  std::vector<Real> weights;  // tile_h * tile_w cells, 3 values each, row-major

  std::size_t cell_count() const { return tile_h * tile_w; }
  std::vector<CfaCell> cells() const;
  /// Current filters as a per-cell pattern (requires weights in [0,1]).
  CfaPattern as_pattern(const std::string& name = "learned") const;
};

using Layer = std::variant<ConvLayer, BatchNormLayer, ReluLayer, SeluLayer, PatternLayer,
                           ResidualAdd>;

enum class BaselineKind { none, bilinear_bayer, lsq_pattern };
enum class InputEncoding {
  sparse,  // zero-filled plane stack
  filled,  // bilinear-filled planes
};

/// Ordered layer list plus the wiring around it. An optional PatternLayer
/// comes first, an optional ResidualAdd last; everything in between is the
/// body.
struct ModelGraph {
  std::string arch;
  std::vector<Layer> layers;
  std::size_t input_channels = 3;
  std::size_t output_channels = 3;
  BaselineKind residual_baseline = BaselineKind::none;
  InputEncoding input_encoding = InputEncoding::filled;

  void validate() const;
  PatternLayer* pattern_layer();
  const PatternLayer* pattern_layer() const;
  std::size_t conv_count() const;
  std::size_t parameter_count() const;
  /// Pixels lost per spatial axis by unpadded convolutions.
  std::size_t shrink() const;
  void set_mode(NormMode mode);
};

const char* to_string(BaselineKind kind);
const char* to_string(InputEncoding encoding);

// --- builders -------------------------------------------------------------------

/// Three-layer network: 9x9 (128) -> 1x1 (64) -> 5x5 (3), no padding, ReLU,
/// Gaussian init, learning-rate scales 1, 1, 0.1. Sparse plane input.
ModelGraph build_dmcnn(std::uint64_t seed, std::size_t input_channels = 3,
                       Real init_stddev = 0.001);

struct VdOptions {
  std::size_t depth = 20;
  std::size_t width = 64;
  std::size_t kernel = 3;
  std::size_t input_channels = 3;
  std::size_t output_channels = 3;
  BaselineKind baseline = BaselineKind::bilinear_bayer;
  InputEncoding encoding = InputEncoding::filled;
  Real msra_factor = 0.001;
  MsraScale msra_scale = MsraScale::multiplier;
};

/// (depth - 1) x [conv -> batchnorm -> SELU], then a plain conv, with
/// size-preserving padding and MSRA init. Throws ConfigError for depth < 2
/// or an even kernel.
ModelGraph build_dmcnn_vd(const VdOptions& options, std::uint64_t seed);

/// DMCNN-VD sized for a CFA: K input planes, bilinear baseline for the RGB
/// one-hot basis and least-squares baseline otherwise.
ModelGraph build_dmcnn_vd_for_pattern(const CfaPattern& pattern, std::uint64_t seed,
                                      VdOptions options = {});

/// Pattern layer (weights uniform in [0,1]) feeding a DMCNN-VD body with
/// tile_h * tile_w input planes and the least-squares baseline.
ModelGraph build_dmcnn_vd_pa(std::uint64_t seed, std::size_t tile_h = 3, std::size_t tile_w = 3,
                             VdOptions body = {});

/// Zeroes the last convolution (kernel and bias).
void zero_final_conv(ModelGraph& model);

// --- pattern layer ----------------------------------------------------------------

/// Per-cell mosaic of an RGB image: K = tile cells planes, no merging.
PlaneStack pattern_forward(const Tensor& image, const PatternLayer& layer);

/// d loss / d weights given the gradient w.r.t. the plane stack values.
std::vector<Real> pattern_backward(const Tensor& image, const PatternLayer& layer,
                                   const Tensor& grad_planes);

/// Clamps every weight into [0, 1].
void project_pattern_weights(PatternLayer& layer);

// --- execution --------------------------------------------------------------------

/// Everything the backward pass needs from a forward pass.
struct ForwardPass {
  PlaneStack stack;
  std::optional<BilinearFill> fill;
  Tensor filled;
  std::optional<LsqColorSolver> solver;
  Tensor baseline;
  std::vector<Tensor> layer_inputs;  // indexed like model.layers
  std::vector<BatchNormCache> norm_caches;
  Tensor body_output;
  Tensor output;
};

/// Runs the model. Models with a pattern layer sample `rgb` themselves;
/// other models consume `stack`, which must have been produced with
/// `pattern`.
ForwardPass run_forward(ModelGraph& model, const CfaPattern& pattern, const PlaneStack* stack,
                        const Tensor* rgb);

/// Gradients per layer, one vector per parameter tensor (conv: kernel, bias;
/// batchnorm: gamma, beta; pattern: weights).
struct ModelGrads {
  std::vector<std::vector<std::vector<Real>>> layers;
};

ModelGrads run_backward(const ModelGraph& model, const ForwardPass& pass, const Tensor& grad_output,
                        const Tensor* rgb);

/// Parameter/gradient pairs for the optimizer, with per-layer lr scales.
std::vector<ParamRef> parameter_refs(ModelGraph& model, const ModelGrads& grads);
/// Mutable views of every parameter tensor, same order as parameter_refs.
std::vector<std::span<Real>> parameter_views(ModelGraph& model);

/// Network reconstruction of a mosaic. Residual models add their baseline.
/// Output is not clamped.
Tensor forward_demosaic(ModelGraph& model, const PlaneStack& stack, const CfaPattern& pattern);

/// Baseline reconstruction alone (bilinear or least squares).
Tensor baseline_demosaic(const PlaneStack& stack, const CfaPattern& pattern);

/// Pattern a model expects its mosaics to be sampled with: the learned tile
/// for pattern-layer models, otherwise `fallback`.
CfaPattern effective_pattern(const ModelGraph& model, const CfaPattern& fallback);

/// L2 loss of output against the truth, center-cropped to the output size.
LossResult demosaic_loss(const Tensor& output, const Tensor& truth);

// --- weight files -----------------------------------------------------------------

/// Optimizer progress stored alongside weights in checkpoints.
struct TrainingState {
  std::uint64_t iteration = 0;
  OptimizerState optimizer;
};

void save_weights(const ModelGraph& model, const std::filesystem::path& path,
                  const TrainingState* state = nullptr);
/// Rebuilds the model described by the file. Throws FormatError (bad magic
/// or structure), VersionError, TruncatedFileError.
ModelGraph load_weights(const std::filesystem::path& path, TrainingState* state = nullptr);
/// Loads into an existing architecture; throws ShapeError naming the first
/// mismatching layer.
void load_weights_into(ModelGraph& model, const std::filesystem::path& path,
                       TrainingState* state = nullptr);

}  // namespace cfanet
