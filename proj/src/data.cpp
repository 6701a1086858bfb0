#include "cfanet/data.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

#include "cfanet/errors.hpp"
#include "cfanet/image_io.hpp"
#include "cfanet/metrics.hpp"

namespace cfanet {
namespace {

std::uint64_t mix(std::uint64_t a, std::uint64_t b) {
  std::uint64_t z = a * 0x9E3779B97F4A7C15ULL + b + 0x632BE59BD9B4E019ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

void shuffle(std::vector<std::size_t>& v, std::uint64_t seed) {
  // Fisher-Yates with explicit draws: std::shuffle's algorithm is not
  // pinned down by the standard, so outputs would differ across libraries.
  std::mt19937_64 rng(seed);
  for (std::size_t i = v.size(); i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(rng() % i);
    std::swap(v[i - 1], v[j]);
  }
}

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::vector<std::size_t> grid_offsets(std::size_t extent, std::size_t patch, std::size_t stride,
                                      std::size_t tile) {
  std::vector<std::size_t> out;
  for (std::size_t p = 0; p + patch <= extent; p += stride) {
    const std::size_t snapped = p - p % tile;
    if (out.empty() || out.back() != snapped) out.push_back(snapped);
  }
  return out;
}

NormMode current_mode(const ModelGraph& model) {
  for (const Layer& layer : model.layers) {
    if (const auto* bn = std::get_if<BatchNormLayer>(&layer)) return bn->mode;
  }
  return NormMode::train;
}

}  // namespace

// --- augmentation -----------------------------------------------------------------

Tensor augment(const Tensor& image, AugmentOp op) {
  const std::size_t h = image.h();
  const std::size_t w = image.w();
  const bool swap = op == AugmentOp::rot90 || op == AugmentOp::rot270;
  Tensor out({image.n(), image.c(), swap ? w : h, swap ? h : w});
  for (std::size_t n = 0; n < image.n(); ++n) {
    for (std::size_t c = 0; c < image.c(); ++c) {
      for (std::size_t y = 0; y < h; ++y) {
        for (std::size_t x = 0; x < w; ++x) {
          std::size_t oy = y;
          std::size_t ox = x;
          switch (op) {
            case AugmentOp::identity:
              break;
            case AugmentOp::rot90:
              oy = w - 1 - x;
              ox = y;
              break;
            case AugmentOp::rot180:
              oy = h - 1 - y;
              ox = w - 1 - x;
              break;
            case AugmentOp::rot270:
              oy = x;
              ox = h - 1 - y;
              break;
            case AugmentOp::flip_h:
              ox = w - 1 - x;
              break;
            case AugmentOp::flip_v:
              oy = h - 1 - y;
              break;
          }
          out(n, c, oy, ox) = image(n, c, y, x);
        }
      }
    }
  }
  return out;
}

AugmentOp inverse(AugmentOp op) {
  if (op == AugmentOp::rot90) return AugmentOp::rot270;
  if (op == AugmentOp::rot270) return AugmentOp::rot90;
  return op;
}

const char* to_string(AugmentOp op) {
  switch (op) {
    case AugmentOp::identity: return "identity";
    case AugmentOp::rot90: return "rot90";
    case AugmentOp::rot180: return "rot180";
    case AugmentOp::rot270: return "rot270";
    case AugmentOp::flip_h: return "flip_h";
    case AugmentOp::flip_v: return "flip_v";
  }
  return "?";
}

std::span<const AugmentOp> all_augment_ops() {
  static constexpr std::array<AugmentOp, 6> ops = {AugmentOp::identity, AugmentOp::rot90,
                                                   AugmentOp::rot180,   AugmentOp::rot270,
                                                   AugmentOp::flip_h,   AugmentOp::flip_v};
  return ops;
}

// --- dataset layout ---------------------------------------------------------------

std::vector<std::filesystem::path> list_images(const std::filesystem::path& dir) {
  std::error_code ec;
  if (!std::filesystem::is_directory(dir, ec)) throw IoError(dir.string() + " is not a directory");
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.is_regular_file() && is_image_file(entry.path())) files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end(), [](const auto& a, const auto& b) {
    return a.filename().string() < b.filename().string();
  });
  return files;
}

DatasetSplit split_by_hash(const std::vector<std::filesystem::path>& files, unsigned val_percent) {
  DatasetSplit split;
  for (const auto& file : files) {
    if (fnv1a(file.filename().string()) % 100 < val_percent) {
      split.val.push_back(file);
    } else {
      split.train.push_back(file);
    }
  }
  return split;
}

DatasetSplit read_manifest(const std::filesystem::path& manifest,
                           const std::filesystem::path& base_dir) {
  std::ifstream in(manifest);
  if (!in) throw IoError("cannot open manifest " + manifest.string());
  DatasetSplit split;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream fields(line);
    std::string role;
    std::string file;
    if (!(fields >> role)) continue;
    if (!(fields >> file) || (role != "train" && role != "val")) {
      throw ConfigError("manifest " + manifest.string() + " line " + std::to_string(line_no) +
                        ": expected 'train <file>' or 'val <file>'");
    }
    (role == "train" ? split.train : split.val).push_back(base_dir / file);
  }
  return split;
}

// --- patches ----------------------------------------------------------------------

std::vector<Patch> extract_patches(std::span<const Tensor> images, const PatchSampler& sampler,
                                   std::size_t tile_h, std::size_t tile_w,
                                   std::vector<std::string>* warnings) {
  if (sampler.patch_size == 0) throw ConfigError("patch size must be positive");
  if (tile_h == 0 || tile_w == 0) throw ConfigError("tile dims must be positive");
  const std::size_t p = sampler.patch_size;
  const std::size_t stride = sampler.stride == 0 ? p : sampler.stride;
  std::vector<Patch> patches;
  for (std::size_t i = 0; i < images.size(); ++i) {
    std::vector<AugmentOp> ops = {AugmentOp::identity};
    if (sampler.augment) {
      const auto all = all_augment_ops();
      ops.assign(all.begin(), all.end());
    }
    for (AugmentOp op : ops) {
      const Tensor image = augment(images[i], op);
      if (image.h() < p || image.w() < p) {
        if (warnings != nullptr && op == AugmentOp::identity) {
          warnings->push_back("image " + std::to_string(i) + " (" + std::to_string(image.h()) +
                              "x" + std::to_string(image.w()) + ") is smaller than the " +
                              std::to_string(p) + "-pixel patch; skipped");
        }
        continue;
      }
      std::vector<Patch> local;
      for (std::size_t y : grid_offsets(image.h(), p, stride, tile_h)) {
        for (std::size_t x : grid_offsets(image.w(), p, stride, tile_w)) {
          local.push_back({image.crop(y, x, p, p), i, y, x, op});
        }
      }
      if (sampler.max_per_image != 0 && local.size() > sampler.max_per_image) {
        std::vector<std::size_t> order(local.size());
        std::iota(order.begin(), order.end(), 0);
        shuffle(order, mix(sampler.seed, i * 8 + static_cast<std::size_t>(op) + 1));
        order.resize(sampler.max_per_image);
        std::sort(order.begin(), order.end());
        std::vector<Patch> kept;
        for (std::size_t k : order) kept.push_back(std::move(local[k]));
        local = std::move(kept);
      }
      for (Patch& patch : local) patches.push_back(std::move(patch));
    }
  }
  std::vector<std::size_t> order(patches.size());
  std::iota(order.begin(), order.end(), 0);
  shuffle(order, mix(sampler.seed, 0));
  std::vector<Patch> shuffled;
  shuffled.reserve(patches.size());
  for (std::size_t k : order) shuffled.push_back(std::move(patches[k]));
  return shuffled;
}

Sensor cfa_sensor(const CfaPattern& pattern) { return Sensor{pattern, std::nullopt}; }

Sensor svec_sensor(const SvecConfig& cfg) { return Sensor{svec_pattern(cfg), cfg}; }

PlaneStack sense(const Tensor& truth, const Sensor& sensor, Real noise_sigma,
                 std::span<const std::uint64_t> noise_seeds) {
  PlaneStack stack;
  if (sensor.svec) {
    Tensor normalized = truth;
    for (Real& v : normalized.values()) v *= sensor.svec->r_max;
    stack = svec_mosaic(normalized, *sensor.svec);
  } else {
    stack = mosaic(truth, sensor.pattern);
  }
  if (noise_sigma > 0) {
    if (noise_seeds.size() != truth.n()) {
      throw ConfigError("sense: need one noise seed per sample");
    }
    const std::size_t h = truth.h();
    const std::size_t w = truth.w();
    for (std::size_t n = 0; n < truth.n(); ++n) {
      std::mt19937_64 rng(noise_seeds[n]);
      std::normal_distribution<double> gauss(0.0, static_cast<double>(noise_sigma));
      for (std::size_t y = 0; y < h; ++y) {
        for (std::size_t x = 0; x < w; ++x) {
          Real& v = stack.planes(n, static_cast<std::size_t>(stack.mask[y * w + x]), y, x);
          v = std::clamp(v + static_cast<Real>(gauss(rng)), Real{0}, Real{1});
        }
      }
    }
  }
  return stack;
}

Batch make_batch(std::span<const Patch> patches, std::span<const std::size_t> indices,
                 const Sensor& sensor, Real noise_sigma, std::uint64_t seed) {
  if (indices.empty()) throw ConfigError("make_batch: empty batch");
  std::vector<const Tensor*> truths;
  std::vector<std::uint64_t> seeds;
  for (std::size_t idx : indices) {
    truths.push_back(&patches[idx].truth);
    seeds.push_back(mix(seed, idx));
  }
  Batch batch;
  batch.truth = stack_samples(truths);
  batch.stack = sense(batch.truth, sensor, noise_sigma, seeds);
  return batch;
}

BatchSchedule::BatchSchedule(std::size_t patch_count, std::size_t batch_size, std::uint64_t seed)
    : count_(patch_count), batch_(batch_size), seed_(seed) {
  if (count_ == 0) throw ConfigError("no training patches");
  if (batch_ == 0) throw ConfigError("batch size must be positive");
}

const std::vector<std::size_t>& BatchSchedule::permutation(std::uint64_t epoch) {
  if (epoch != cached_epoch_) {
    perm_.resize(count_);
    std::iota(perm_.begin(), perm_.end(), 0);
    shuffle(perm_, mix(seed_, epoch + 1));
    cached_epoch_ = epoch;
  }
  return perm_;
}

std::vector<std::size_t> BatchSchedule::indices(std::uint64_t iteration) {
  std::vector<std::size_t> out;
  out.reserve(batch_);
  for (std::size_t j = 0; j < batch_; ++j) {
    const std::uint64_t g = iteration * batch_ + j;
    out.push_back(permutation(g / count_)[g % count_]);
  }
  return out;
}

// --- training ---------------------------------------------------------------------

std::string log_csv_header() { return "iteration,loss,val_cpsnr"; }

std::string log_csv_row(const LogEntry& entry) {
  char buf[96];
  std::snprintf(buf, sizeof buf, "%llu,%.10g,", static_cast<unsigned long long>(entry.iteration),
                static_cast<double>(entry.loss));
  std::string row = buf;
  if (entry.val_cpsnr) row += format_db(*entry.val_cpsnr);
  return row;
}

Real validation_cpsnr(ModelGraph& model, std::span<const Patch> patches, const Sensor& sensor,
                      std::size_t batch_size) {
  if (patches.empty()) throw ConfigError("no validation patches");
  const NormMode previous = current_mode(model);
  model.set_mode(NormMode::eval);
  const CfaPattern pattern = effective_pattern(model, sensor.pattern);
  Sensor effective = sensor;
  effective.pattern = pattern;
  Real total = 0;
  for (std::size_t begin = 0; begin < patches.size(); begin += batch_size) {
    std::vector<std::size_t> idx;
    for (std::size_t i = begin; i < std::min(patches.size(), begin + batch_size); ++i) idx.push_back(i);
    const Batch batch = make_batch(patches, idx, effective, 0, 0);
    Tensor out = forward_demosaic(model, batch.stack, pattern);
    for (Real& v : out.values()) v = std::clamp(v, Real{0}, Real{1});
    const Tensor truth = batch.truth.center_crop(out.h(), out.w());
    for (std::size_t n = 0; n < out.n(); ++n) {
      const Tensor a({1, 3, out.h(), out.w()},
                     std::vector<Real>(out.sample(n).begin(), out.sample(n).end()));
      const Tensor b({1, 3, out.h(), out.w()},
                     std::vector<Real>(truth.sample(n).begin(), truth.sample(n).end()));
      total += cpsnr(a, b, 1);
    }
  }
  model.set_mode(previous);
  return total / static_cast<Real>(patches.size());
}

namespace {

class LogFile {
 public:
  LogFile(const std::filesystem::path& path, std::uint64_t resume_from) : path_(path) {
    if (path_.empty()) return;
    std::vector<std::string> kept;
    if (resume_from > 0) {
      std::ifstream in(path_);
      std::string line;
      while (std::getline(in, line)) {
        if (line.empty() || line == log_csv_header()) continue;
        if (std::stoull(line.substr(0, line.find(','))) <= resume_from) kept.push_back(line);
      }
    }
    out_.open(path_, std::ios::trunc);
    if (!out_) throw IoError("cannot write training log " + path_.string());
    out_ << log_csv_header() << "\n";
    for (const std::string& line : kept) out_ << line << "\n";
    out_.flush();
  }
  void write(const LogEntry& entry) {
    if (path_.empty()) return;
    out_ << log_csv_row(entry) << "\n";
    out_.flush();
  }

 private:
  std::filesystem::path path_;
  std::ofstream out_;
};

void save_diverged(const ModelGraph& model, const TrainConfig& config, const TrainingState& state) {
  if (config.checkpoint_path.empty()) return;
  std::filesystem::path path = config.checkpoint_path;
  path += ".diverged";
  save_weights(model, path, &state);
}

}  // namespace

std::vector<LogEntry> train(ModelGraph& model, const TrainingData& data, const TrainConfig& config,
                            TrainingState& state, const StepCallback& on_step) {
  model.validate();
  if (data.train.empty()) throw ConfigError("no training patches");
  const bool has_pattern_layer = model.pattern_layer() != nullptr;
  if (!has_pattern_layer && data.sensor.pattern.plane_count() != model.input_channels) {
    throw ShapeError("channel mismatch: model '" + model.arch + "' expects " +
                     std::to_string(model.input_channels) + " input planes, pattern '" +
                     data.sensor.pattern.name() + "' has " +
                     std::to_string(data.sensor.pattern.plane_count()));
  }
  if (state.iteration == 0 && state.optimizer.step == 0) state.optimizer.config = config.optimizer;

  LogFile log(config.log_path, state.iteration);
  BatchSchedule schedule(data.train.size(), config.batch_size, config.seed);
  std::vector<LogEntry> entries;
  model.set_mode(NormMode::train);

  for (std::uint64_t t = state.iteration; t < config.iterations; ++t) {
    const std::vector<std::size_t> idx = schedule.indices(t);
    const Batch batch = make_batch(data.train, idx, data.sensor, config.noise_sigma,
                                   mix(config.seed, t + 0x5EED));
    ForwardPass pass = run_forward(model, data.sensor.pattern, &batch.stack,
                                   has_pattern_layer ? &batch.truth : nullptr);
    const LossResult loss = demosaic_loss(pass.output, batch.truth);
    if (!std::isfinite(loss.loss)) {
      save_diverged(model, config, state);
      throw NumericError("training diverged at iteration " + std::to_string(t) +
                         ": loss is not finite");
    }
    const ModelGrads grads =
        run_backward(model, pass, loss.grad, has_pattern_layer ? &batch.truth : nullptr);
    try {
      const std::vector<ParamRef> refs = parameter_refs(model, grads);
      optimizer_step(refs, state.optimizer);
    } catch (const NumericError&) {
      save_diverged(model, config, state);
      throw;
    }
    if (PatternLayer* layer = model.pattern_layer()) project_pattern_weights(*layer);
    state.iteration = t + 1;
    if (on_step) on_step(state.iteration, model, loss.loss);

    const bool last = state.iteration == config.iterations;
    const bool log_now =
        last || (config.log_interval != 0 && state.iteration % config.log_interval == 0);
    const bool val_now = !data.val.empty() && config.val_interval != 0 &&
                         (last || state.iteration % config.val_interval == 0);
    if (log_now || val_now) {
      LogEntry entry{state.iteration, loss.loss, std::nullopt};
      if (val_now) entry.val_cpsnr = validation_cpsnr(model, data.val, data.sensor);
      log.write(entry);
      entries.push_back(entry);
    }
    if (!config.checkpoint_path.empty() && config.checkpoint_interval != 0 &&
        state.iteration % config.checkpoint_interval == 0 && !last) {
      save_weights(model, config.checkpoint_path, &state);
    }
  }
  if (!config.checkpoint_path.empty()) save_weights(model, config.checkpoint_path, &state);
  return entries;
}

}  // namespace cfanet
