#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cfanet/cfa.hpp"
#include "cfanet/models.hpp"
#include "cfanet/optimizer.hpp"
#include "cfanet/svec.hpp"
#include "cfanet/tensor.hpp"

namespace cfanet {

// --- augmentation -----------------------------------------------------------------

enum class AugmentOp { identity, rot90, rot180, rot270, flip_h, flip_v };

/// Lossless pixel permutation of every sample and channel. rot90 turns the
/// image counter-clockwise; flip_h mirrors left-right, flip_v top-bottom.
Tensor augment(const Tensor& image, AugmentOp op);
AugmentOp inverse(AugmentOp op);
const char* to_string(AugmentOp op);
/// identity followed by the five non-trivial ops.
std::span<const AugmentOp> all_augment_ops();

// --- dataset layout ---------------------------------------------------------------

/// Image files (.png, .ppm) directly inside dir, sorted by filename.
std::vector<std::filesystem::path> list_images(const std::filesystem::path& dir);

struct DatasetSplit {
  std::vector<std::filesystem::path> train;
  std::vector<std::filesystem::path> val;
};

/// Deterministic split: a file goes to validation when the FNV-1a hash of
/// its filename is below val_percent modulo 100.
DatasetSplit split_by_hash(const std::vector<std::filesystem::path>& files, unsigned val_percent = 5);

/// Manifest lines "train <file>" or "val <file>" (relative to base_dir);
/// '#' starts a comment.
DatasetSplit read_manifest(const std::filesystem::path& manifest,
                           const std::filesystem::path& base_dir);

// --- patches ----------------------------------------------------------------------

struct PatchSampler {
  std::size_t patch_size = 33;
  std::size_t stride = 0;         // 0 means patch_size
  std::size_t max_per_image = 0;  // 0 keeps every position
  bool augment = false;           // add all five rotations/flips of each image
  Real noise_sigma = 0;           // additive Gaussian on mosaic samples, [0,1] units
  std::uint64_t seed = 0;
};

struct Patch {
  Tensor truth;  // 1 x 3 x P x P
  std::size_t image = 0;
  std::size_t y = 0;
  std::size_t x = 0;
  AugmentOp op = AugmentOp::identity;
};

/// Grid patches whose offsets are snapped down to multiples of the tile
/// dims, so every patch starts on tile cell (0, 0). The result is shuffled
/// deterministically by sampler.seed. Images smaller than the patch are
/// skipped with a message in warnings.
std::vector<Patch> extract_patches(std::span<const Tensor> images, const PatchSampler& sampler,
                                   std::size_t tile_h, std::size_t tile_w,
                                   std::vector<std::string>* warnings = nullptr);

/// How ground truth becomes network input: a CFA, or the SVEC sensor (truth
/// then holds normalized radiance divided by r_max).
struct Sensor {
  CfaPattern pattern;
  std::optional<SvecConfig> svec;

  std::size_t tile_h() const { return pattern.tile_h(); }
  std::size_t tile_w() const { return pattern.tile_w(); }
};

Sensor cfa_sensor(const CfaPattern& pattern);
Sensor svec_sensor(const SvecConfig& cfg);

/// Mosaic of a truth batch at tile phase (0, 0). With noise_sigma > 0 each
/// sample gets N(0, sigma^2) added and is clamped to [0,1]; the noise stream
/// of sample n is seeded by noise_seeds[n].
PlaneStack sense(const Tensor& truth, const Sensor& sensor, Real noise_sigma = 0,
                 std::span<const std::uint64_t> noise_seeds = {});

struct Batch {
  Tensor truth;  // N x 3 x P x P
  PlaneStack stack;
};

/// Stacks the chosen patches and senses them.
Batch make_batch(std::span<const Patch> patches, std::span<const std::size_t> indices,
                 const Sensor& sensor, Real noise_sigma, std::uint64_t seed);

/// Indices of the patches drawn at a training iteration: a pure function of
/// (seed, iteration), walking a fresh permutation of the patch set every
/// epoch.
class BatchSchedule {
 public:
  BatchSchedule(std::size_t patch_count, std::size_t batch_size, std::uint64_t seed);
  std::vector<std::size_t> indices(std::uint64_t iteration);

 private:
  const std::vector<std::size_t>& permutation(std::uint64_t epoch);
  std::size_t count_;
  std::size_t batch_;
  std::uint64_t seed_;
  std::uint64_t cached_epoch_ = UINT64_MAX;
  std::vector<std::size_t> perm_;
};

// --- training ---------------------------------------------------------------------

struct TrainConfig {
  std::uint64_t iterations = 1000;
  std::size_t batch_size = 64;
  OptimizerConfig optimizer;
  std::uint64_t seed = 0;
  Real noise_sigma = 0;
  std::size_t log_interval = 10;
  std::size_t val_interval = 100;        // 0 disables validation
  std::size_t checkpoint_interval = 0;   // 0 writes only at the end
  std::filesystem::path checkpoint_path;  // empty disables checkpoints
  std::filesystem::path log_path;         // empty disables the CSV log
};

struct LogEntry {
  std::uint64_t iteration = 0;  // steps completed
  Real loss = 0;                // batch loss before the step
  std::optional<Real> val_cpsnr;
};

/// "iteration,loss,val_cpsnr"
std::string log_csv_header();
std::string log_csv_row(const LogEntry& entry);

struct TrainingData {
  std::vector<Patch> train;
  std::vector<Patch> val;
  Sensor sensor;
};

/// Called after every optimizer step (and projection) with the step count.
using StepCallback = std::function<void(std::uint64_t iteration, const ModelGraph& model, Real loss)>;

/// Minibatch L2 training. Residual models are scored on baseline plus body
/// output. Pattern-layer models sample the RGB truth themselves and have
/// their weights projected onto [0,1] after each step. Continues from
/// state.iteration; the caller restores weights and state when resuming.
/// A non-finite loss or gradient writes <checkpoint>.diverged and throws
/// NumericError.
std::vector<LogEntry> train(ModelGraph& model, const TrainingData& data, const TrainConfig& config,
                            TrainingState& state, const StepCallback& on_step = {});

/// Mean CPSNR (max value 1, output clamped to [0,1]) over patches, in eval
/// mode. The model's mode is restored afterwards.
Real validation_cpsnr(ModelGraph& model, std::span<const Patch> patches, const Sensor& sensor,
                      std::size_t batch_size = 16);

}  // namespace cfanet
