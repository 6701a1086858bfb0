// cfanet: command-line front end for mosaicing, demosaicing, training and
// SVEC HDR simulation.
//
// Exit codes: 0 success, 1 runtime or I/O failure, 2 usage or configuration
// error.

#include <CLI11.hpp>

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "cfanet/cfa.hpp"
#include "cfanet/data.hpp"
#include "cfanet/errors.hpp"
#include "cfanet/evaluation.hpp"
#include "cfanet/image_io.hpp"
#include "cfanet/metrics.hpp"
#include "cfanet/models.hpp"
#include "cfanet/parallel.hpp"
#include "cfanet/stack_io.hpp"
#include "cfanet/svec.hpp"

namespace fs = std::filesystem;
using namespace cfanet;

namespace {

struct GlobalOptions {
  std::uint64_t seed = 0;
  std::size_t threads = 1;
};

struct SvecFlags {
  double r_max = 4096;
  double r_min = 1.0 / 64.0;
  double ratio = 64;
  int bits = 12;

  SvecConfig config() const {
    SvecConfig cfg;
    cfg.r_max = static_cast<Real>(r_max);
    cfg.r_min = static_cast<Real>(r_min);
    cfg.exposure_ratio = static_cast<Real>(ratio);
    cfg.bits = bits;
    cfg.validate();
    return cfg;
  }
};

void add_svec_flags(CLI::App* cmd, SvecFlags& f) {
  cmd->add_option("--r-max", f.r_max, "Normalized radiance ceiling")->capture_default_str();
  cmd->add_option("--r-min", f.r_min, "Normalized radiance floor")->capture_default_str();
  cmd->add_option("--ratio", f.ratio, "High/low exposure ratio")->capture_default_str();
  cmd->add_option("--bits", f.bits, "Sensor bit depth")->capture_default_str();
}

struct MosaicOptions {
  std::string input;
  std::string pattern = "bayer";
  std::string output;
  std::string preview;
};

struct DemosaicOptions {
  std::string input;
  std::string weights;
  std::string pattern = "bayer";
  std::string output;
  std::string truth;
  bool baseline_only = false;
  std::size_t border_crop = 0;
};

struct TrainOptions {
  std::string data_dir;
  std::string manifest;
  std::string output_dir;
  std::string arch = "dmcnn-vd";
  std::string pattern = "bayer";
  std::string optimizer = "adam";
  std::string init_weights;
  bool hdr = false;
  bool resume = false;
  std::uint64_t iterations = 1000;
  std::size_t batch_size = 64;
  std::size_t patch_size = 0;
  std::size_t stride = 0;
  std::size_t max_patches = 0;
  bool augment = false;
  double noise_sigma = 0;
  double lr = 0;
  double clip = 1.0;
  std::size_t depth = 20;
  std::size_t width = 64;
  std::size_t log_interval = 10;
  std::size_t val_interval = 100;
  std::size_t checkpoint_interval = 0;
  std::size_t tile_h = 3;
  std::size_t tile_w = 3;
  SvecFlags svec;
};

struct EvaluateOptions {
  std::string data_dir;
  std::string weights;
  std::string pattern = "bayer";
  std::string report;
  std::size_t border_crop = 0;
};

struct SvecSimulateOptions {
  std::string input;
  std::string output;
  std::string preview;
  std::string normalized_out;
  SvecFlags svec;
};

struct SvecReconstructOptions {
  std::string input;
  std::string weights;
  std::string output;
  std::string truth;
  SvecFlags svec;
};

void add_training_flags(CLI::App* cmd, TrainOptions& o) {
  cmd->add_option("--data-dir", o.data_dir, "Directory of training images")->required();
  cmd->add_option("--manifest", o.manifest, "Train/val manifest (default: filename hash split)");
  cmd->add_option("--output-dir", o.output_dir, "Output directory")->required();
  cmd->add_option("--optimizer", o.optimizer, "adam or sgd-clip")->capture_default_str();
  cmd->add_option("--lr", o.lr, "Learning rate (0: optimizer default)")->capture_default_str();
  cmd->add_option("--clip", o.clip, "Gradient-norm clip for sgd-clip")->capture_default_str();
  cmd->add_option("--iterations", o.iterations, "Training iterations")->capture_default_str();
  cmd->add_option("--batch-size", o.batch_size, "Minibatch size")->capture_default_str();
  cmd->add_option("--patch-size", o.patch_size, "Patch size (0: architecture default)")
      ->capture_default_str();
  cmd->add_option("--stride", o.stride, "Patch stride (0: patch size)")->capture_default_str();
  cmd->add_option("--max-patches-per-image", o.max_patches, "Cap per image (0: no cap)")
      ->capture_default_str();
  cmd->add_flag("--augment", o.augment, "Add rotated and flipped copies");
  cmd->add_option("--noise-sigma", o.noise_sigma, "Gaussian noise on mosaic samples")
      ->capture_default_str();
  cmd->add_option("--depth", o.depth, "DMCNN-VD depth")->capture_default_str();
  cmd->add_option("--width", o.width, "DMCNN-VD feature maps")->capture_default_str();
  cmd->add_option("--log-interval", o.log_interval, "Iterations between log lines")
      ->capture_default_str();
  cmd->add_option("--val-interval", o.val_interval, "Iterations between validations (0: off)")
      ->capture_default_str();
  cmd->add_option("--checkpoint-interval", o.checkpoint_interval,
                  "Iterations between checkpoints (0: end only)")
      ->capture_default_str();
  cmd->add_option("--init-weights", o.init_weights, "Start from these weights (fine-tuning)");
  cmd->add_flag("--resume", o.resume, "Continue from <output-dir>/weights.bin");
}

[[noreturn]] void usage_error(const std::string& message) { throw ConfigError(message); }

OptimizerConfig optimizer_config(const TrainOptions& o) {
  OptimizerConfig cfg;
  cfg.kind = parse_optimizer_kind(o.optimizer);
  if (o.lr < 0 || o.clip <= 0) usage_error("--lr must be >= 0 and --clip > 0");
  cfg.learning_rate = o.lr > 0 ? static_cast<Real>(o.lr)
                               : (cfg.kind == OptimizerKind::adam ? Real(1e-5) : Real(1e-4));
  cfg.clip_threshold = static_cast<Real>(o.clip);
  return cfg;
}

void write_effective_config(const CLI::App& app, const fs::path& dir) {
  fs::create_directories(dir);
  std::ofstream out(dir / "effective_config.txt", std::ios::trunc);
  if (!out) throw IoError("cannot write " + (dir / "effective_config.txt").string());
  out << app.config_to_str(true, false);
}

fs::path output_dir_of(const std::string& file) {
  fs::path parent = fs::path(file).parent_path();
  return parent.empty() ? fs::path(".") : parent;
}

std::size_t expected_planes(const ModelGraph& model) {
  if (const PatternLayer* layer = model.pattern_layer()) return layer->cell_count();
  return model.input_channels;
}

void require_matching_planes(const ModelGraph& model, std::size_t planes, const std::string& what) {
  const std::size_t want = expected_planes(model);
  if (want != planes) {
    usage_error("weights for '" + model.arch + "' expect " + std::to_string(want) +
                " input channels but " + what + " has " + std::to_string(planes));
  }
}

// --- mosaic -------------------------------------------------------------------------

int cmd_mosaic(const MosaicOptions& o, const CLI::App& app) {
  const CfaPattern pattern = resolve_pattern(o.pattern);
  const Tensor image = load_image(o.input);
  MosaicFile file{pattern, 0, 0, mosaic(image, pattern)};
  write_mosaic_file(file, o.output);
  const std::string preview = o.preview.empty() ? o.output + ".preview.png" : o.preview;
  save_image(mosaic_preview(file.stack), preview);
  write_effective_config(app, output_dir_of(o.output));
  return 0;
}

// --- demosaic -----------------------------------------------------------------------

void write_reconstruction(const Tensor& out, const std::string& path) {
  if (fs::path(path).extension() == ".pfm") {
    write_pfm(out, path);
  } else {
    Tensor clamped = out;
    for (Real& v : clamped.values()) v = std::clamp(v, Real{0}, Real{1});
    save_image(clamped, path);
  }
}

int cmd_demosaic(const DemosaicOptions& o, const CLI::App& app) {
  std::optional<ModelGraph> model;
  if (!o.weights.empty() && !o.baseline_only) model = load_weights(o.weights);
  if (!model && !o.baseline_only) usage_error("demosaic needs --weights or --baseline-only");

  MosaicFile input;
  if (is_image_file(o.input)) {
    const CfaPattern fallback = resolve_pattern(o.pattern);
    input.pattern = model ? effective_pattern(*model, fallback) : fallback;
    input.stack = mosaic(load_image(o.input), input.pattern);
  } else {
    input = read_mosaic_file(o.input);
  }

  Tensor out;
  if (model) {
    require_matching_planes(*model, input.stack.plane_count(), "the mosaic");
    model->set_mode(NormMode::eval);
    out = forward_demosaic(*model, input.stack, input.pattern);
  } else {
    out = baseline_demosaic(input.stack, input.pattern);
  }
  write_reconstruction(out, o.output);
  write_effective_config(app, output_dir_of(o.output));

  if (!o.truth.empty()) {
    const Tensor truth = load_image(o.truth);
    if (truth.h() < out.h() || truth.w() < out.w()) {
      usage_error("truth image is smaller than the reconstruction");
    }
    Tensor clamped = out;
    for (Real& v : clamped.values()) v = std::clamp(v, Real{0}, Real{1});
    MetricReport m =
        evaluate_unit_rgb(clamped, truth.center_crop(out.h(), out.w()), o.border_crop);
    m.name = fs::path(o.input).filename().string();
    std::cout << metric_csv_row(m) << "\n";
  }
  return 0;
}

// --- training -----------------------------------------------------------------------

std::vector<fs::path> list_radiance_files(const fs::path& dir) {
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".pfm") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end(),
            [](const fs::path& a, const fs::path& b) { return a.filename() < b.filename(); });
  return files;
}

std::vector<Tensor> load_truths(const std::vector<fs::path>& files, const TrainOptions& o) {
  std::vector<Tensor> images;
  for (const fs::path& file : files) {
    try {
      if (o.hdr) {
        const SvecConfig cfg = o.svec.config();
        Tensor t = normalize_radiance(read_pfm(file), cfg);
        for (Real& v : t.values()) v /= cfg.r_max;
        images.push_back(std::move(t));
      } else {
        images.push_back(load_image(file));
      }
    } catch (const Error& e) {
      std::cerr << "warning: skipping " << file.filename().string() << ": " << e.what() << "\n";
    }
  }
  return images;
}

int run_training(ModelGraph model, const Sensor& sensor, const TrainOptions& o,
                 const GlobalOptions& g, const CLI::App& app, std::size_t default_patch) {
  const fs::path out_dir = o.output_dir;
  write_effective_config(app, out_dir);

  DatasetSplit split;
  if (!o.manifest.empty()) {
    split = read_manifest(o.manifest, o.data_dir);
  } else {
    split = split_by_hash(o.hdr ? list_radiance_files(o.data_dir) : list_images(o.data_dir));
  }
  const std::vector<Tensor> train_images = load_truths(split.train, o);
  const std::vector<Tensor> val_images = load_truths(split.val, o);
  if (train_images.empty()) usage_error("no training images found in " + o.data_dir);

  PatchSampler sampler;
  sampler.patch_size = o.patch_size != 0 ? o.patch_size : default_patch;
  sampler.stride = o.stride;
  sampler.max_per_image = o.max_patches;
  sampler.augment = o.augment;
  sampler.seed = g.seed;
  std::vector<std::string> warnings;
  TrainingData data;
  data.sensor = sensor;
  data.train = extract_patches(train_images, sampler, sensor.tile_h(), sensor.tile_w(), &warnings);
  PatchSampler val_sampler = sampler;
  val_sampler.augment = false;
  data.val = extract_patches(val_images, val_sampler, sensor.tile_h(), sensor.tile_w(), &warnings);
  for (const std::string& w : warnings) std::cerr << "warning: " << w << "\n";
  if (data.train.empty()) usage_error("no training patches (images smaller than the patch?)");

  TrainConfig config;
  config.iterations = o.iterations;
  config.batch_size = o.batch_size;
  config.optimizer = optimizer_config(o);
  config.seed = g.seed;
  config.noise_sigma = static_cast<Real>(o.noise_sigma);
  config.log_interval = o.log_interval;
  config.val_interval = o.val_interval;
  config.checkpoint_interval = o.checkpoint_interval;
  config.checkpoint_path = out_dir / "weights.bin";
  config.log_path = out_dir / "train_log.csv";

  TrainingState state;
  if (o.resume && fs::exists(config.checkpoint_path)) {
    load_weights_into(model, config.checkpoint_path, &state);
    std::cerr << "resuming at iteration " << state.iteration << "\n";
  } else if (!o.init_weights.empty()) {
    load_weights_into(model, o.init_weights);
  }

  const auto entries = train(model, data, config, state);
  if (!entries.empty()) {
    const LogEntry& last = entries.back();
    std::cerr << "iteration " << last.iteration << " loss " << last.loss;
    if (last.val_cpsnr) std::cerr << " val_cpsnr " << format_db(*last.val_cpsnr);
    std::cerr << "\n";
  }
  return 0;
}

int cmd_train(const TrainOptions& o, const GlobalOptions& g, const CLI::App& app) {
  VdOptions vd;
  vd.depth = o.depth;
  vd.width = o.width;
  if (o.arch != "dmcnn" && o.arch != "dmcnn-vd") {
    usage_error("unknown --arch '" + o.arch + "' (expected dmcnn or dmcnn-vd)");
  }
  const bool plain = o.arch == "dmcnn";
  const std::size_t default_patch = plain ? 33 : 64;
  if (o.hdr) {
    const Sensor sensor = svec_sensor(o.svec.config());
    ModelGraph model = build_svec_model(plain ? SvecArch::dmcnn : SvecArch::dmcnn_vd, g.seed,
                                        o.depth, o.width);
    return run_training(std::move(model), sensor, o, g, app, default_patch);
  }
  const CfaPattern pattern = resolve_pattern(o.pattern);
  ModelGraph model = plain ? build_dmcnn(g.seed, pattern.plane_count())
                           : build_dmcnn_vd_for_pattern(pattern, g.seed, vd);
  return run_training(std::move(model), cfa_sensor(pattern), o, g, app, default_patch);
}

int cmd_design_pattern(const TrainOptions& o, const GlobalOptions& g, const CLI::App& app) {
  VdOptions body;
  body.depth = o.depth;
  body.width = o.width;
  ModelGraph model = build_dmcnn_vd_pa(g.seed, o.tile_h, o.tile_w, body);
  const PatternLayer& layer = *model.pattern_layer();
  // The sensor pattern only fixes the tile size for patch alignment; the
  // network samples the truth through its own pattern layer.
  const Sensor sensor = cfa_sensor(layer.as_pattern());
  TrainOptions opts = o;
  opts.hdr = false;
  const int rc = run_training(model, sensor, opts, g, app, 64);
  const ModelGraph trained = load_weights(fs::path(o.output_dir) / "weights.bin");
  save_pattern_file(trained.pattern_layer()->as_pattern("learned"),
                    fs::path(o.output_dir) / "learned_pattern.txt");
  return rc;
}

// --- evaluate -----------------------------------------------------------------------

int cmd_evaluate(const EvaluateOptions& o, const CLI::App& app) {
  std::optional<ModelGraph> model;
  if (!o.weights.empty()) model = load_weights(o.weights);
  const CfaPattern pattern = resolve_pattern(o.pattern);
  if (model && model->pattern_layer() == nullptr) {
    require_matching_planes(*model, pattern.plane_count(), "pattern '" + pattern.name() + "'");
  }
  const EvaluationReport report =
      batch_evaluate(model ? &*model : nullptr, o.data_dir, pattern, o.border_crop);
  if (report.images.empty()) std::cerr << "warning: no images evaluated in " << o.data_dir << "\n";
  for (const SkippedFile& s : report.skipped) {
    std::cerr << "warning: skipped " << s.name << ": " << s.reason << "\n";
  }
  if (o.report.empty()) {
    std::cout << format_report_csv(report);
  } else {
    write_report_csv(report, o.report);
    write_effective_config(app, output_dir_of(o.report));
  }
  return 0;
}

// --- SVEC ---------------------------------------------------------------------------

int cmd_svec_simulate(const SvecSimulateOptions& o, const CLI::App& app) {
  const SvecConfig cfg = o.svec.config();
  const Tensor normalized = normalize_radiance(read_pfm(o.input), cfg);
  MosaicFile file{svec_pattern(cfg), 0, 0, svec_mosaic(normalized, cfg)};
  write_mosaic_file(file, o.output);
  const std::string preview = o.preview.empty() ? o.output + ".preview.png" : o.preview;
  save_image(mosaic_preview(file.stack), preview);
  if (!o.normalized_out.empty()) write_pfm(normalized, o.normalized_out);
  write_effective_config(app, output_dir_of(o.output));
  return 0;
}

int cmd_svec_reconstruct(const SvecReconstructOptions& o, const CLI::App& app) {
  const SvecConfig cfg = o.svec.config();
  const MosaicFile input = read_mosaic_file(o.input);
  Tensor out;
  if (!o.weights.empty()) {
    ModelGraph model = load_weights(o.weights);
    require_matching_planes(model, input.stack.plane_count(), "the mosaic");
    model.set_mode(NormMode::eval);
    out = forward_demosaic(model, input.stack, input.pattern);
  } else {
    out = baseline_demosaic(input.stack, input.pattern);
  }
  for (Real& v : out.values()) v *= cfg.r_max;
  write_pfm(out, o.output);
  write_effective_config(app, output_dir_of(o.output));
  if (!o.truth.empty()) {
    const RadianceImage truth = read_pfm(o.truth);
    if (truth.pixels.h() < out.h() || truth.pixels.w() < out.w()) {
      usage_error("truth image is smaller than the reconstruction");
    }
    // PFM stores float32; compare at that precision on both sides.
    Tensor pred = out;
    for (Real& v : pred.values()) v = static_cast<Real>(static_cast<float>(v));
    const Tensor ref = truth.pixels.center_crop(out.h(), out.w());
    std::cout << fs::path(o.input).filename().string() << "," << mse_radiance(pred, ref) << ","
              << format_db(cpsnr(pred, ref, cfg.r_max)) << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Color filter array mosaicing, learned demosaicing and SVEC HDR tools", "cfanet"};
  app.require_subcommand(1);
  app.set_config("--config", "", "INI-style config file; [section] per subcommand");
  GlobalOptions global;
  app.add_option("--seed", global.seed, "Seed for initialization, sampling and noise")
      ->capture_default_str();
  app.add_option("--threads", global.threads, "Worker threads (1 is fully deterministic)")
      ->capture_default_str()
      ->check(CLI::Range(std::size_t{1}, std::size_t{256}));

  MosaicOptions mosaic_opts;
  auto* mosaic_cmd = app.add_subcommand("mosaic", "Sample an RGB image through a CFA");
  mosaic_cmd->add_option("--input", mosaic_opts.input, "PNG or PPM image")->required();
  mosaic_cmd->add_option("--pattern", mosaic_opts.pattern, "Builtin name or pattern file")
      ->capture_default_str();
  mosaic_cmd->add_option("--output", mosaic_opts.output, "Mosaic file")->required();
  mosaic_cmd->add_option("--preview", mosaic_opts.preview, "Preview image (default <output>.preview.png)");

  DemosaicOptions demosaic_opts;
  auto* demosaic_cmd = app.add_subcommand("demosaic", "Reconstruct RGB from a mosaic");
  demosaic_cmd->add_option("--input", demosaic_opts.input, "Mosaic file, or an image to mosaic first")
      ->required();
  demosaic_cmd->add_option("--weights", demosaic_opts.weights, "Trained weights");
  demosaic_cmd->add_option("--pattern", demosaic_opts.pattern, "Pattern for image inputs")
      ->capture_default_str();
  demosaic_cmd->add_option("--output", demosaic_opts.output, "Output image (.png, .ppm, .pfm)")
      ->required();
  demosaic_cmd->add_option("--truth", demosaic_opts.truth, "Ground truth; prints a CSV metric line");
  demosaic_cmd->add_flag("--baseline-only", demosaic_opts.baseline_only,
                         "Bilinear / least-squares baseline without a network");
  demosaic_cmd->add_option("--border-crop", demosaic_opts.border_crop, "Pixels excluded per side")
      ->capture_default_str();

  TrainOptions train_opts;
  auto* train_cmd = app.add_subcommand("train", "Train DMCNN or DMCNN-VD");
  add_training_flags(train_cmd, train_opts);
  train_cmd->add_option("--arch", train_opts.arch, "dmcnn or dmcnn-vd")->capture_default_str();
  train_cmd->add_option("--pattern", train_opts.pattern, "Builtin name or pattern file")
      ->capture_default_str();
  train_cmd->add_flag("--hdr", train_opts.hdr, "Train the SVEC model on .pfm radiance images");
  add_svec_flags(train_cmd, train_opts.svec);

  EvaluateOptions eval_opts;
  auto* eval_cmd = app.add_subcommand("evaluate", "Score reconstructions of a directory of images");
  eval_cmd->add_option("--data-dir", eval_opts.data_dir, "Directory of images")->required();
  eval_cmd->add_option("--weights", eval_opts.weights, "Trained weights (default: baseline)");
  eval_cmd->add_option("--pattern", eval_opts.pattern, "Builtin name or pattern file")
      ->capture_default_str();
  eval_cmd->add_option("--report", eval_opts.report, "CSV report path (default: stdout)");
  eval_cmd->add_option("--border-crop", eval_opts.border_crop, "Pixels excluded per side")
      ->capture_default_str();

  TrainOptions design_opts;
  design_opts.val_interval = 100;
  auto* design_cmd =
      app.add_subcommand("design-pattern", "Jointly learn a CFA tile and its demosaicing network");
  add_training_flags(design_cmd, design_opts);
  design_cmd->add_option("--tile-h", design_opts.tile_h, "Tile rows")->capture_default_str();
  design_cmd->add_option("--tile-w", design_opts.tile_w, "Tile columns")->capture_default_str();

  SvecSimulateOptions sim_opts;
  auto* sim_cmd = app.add_subcommand("svec-simulate", "Simulate the SVEC sensor on a PFM radiance map");
  sim_cmd->add_option("--input", sim_opts.input, "Radiance PFM")->required();
  sim_cmd->add_option("--output", sim_opts.output, "Mosaic file")->required();
  sim_cmd->add_option("--preview", sim_opts.preview, "Preview image (default <output>.preview.png)");
  sim_cmd->add_option("--normalized-out", sim_opts.normalized_out, "Write normalized radiance PFM");
  add_svec_flags(sim_cmd, sim_opts.svec);

  SvecReconstructOptions rec_opts;
  auto* rec_cmd = app.add_subcommand("svec-reconstruct", "Recover normalized radiance from an SVEC mosaic");
  rec_cmd->add_option("--input", rec_opts.input, "SVEC mosaic file")->required();
  rec_cmd->add_option("--weights", rec_opts.weights, "SVEC weights (default: baseline)");
  rec_cmd->add_option("--output", rec_opts.output, "Radiance PFM")->required();
  rec_cmd->add_option("--truth", rec_opts.truth, "Normalized radiance PFM; prints name,mse,cpsnr");
  add_svec_flags(rec_cmd, rec_opts.svec);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  const CLI::App* active = app.get_subcommands().front();
  try {
    set_num_threads(global.threads);
    if (mosaic_cmd->parsed()) return cmd_mosaic(mosaic_opts, app);
    if (demosaic_cmd->parsed()) return cmd_demosaic(demosaic_opts, app);
    if (train_cmd->parsed()) return cmd_train(train_opts, global, app);
    if (eval_cmd->parsed()) return cmd_evaluate(eval_opts, app);
    if (design_cmd->parsed()) return cmd_design_pattern(design_opts, global, app);
    if (sim_cmd->parsed()) return cmd_svec_simulate(sim_opts, app);
    if (rec_cmd->parsed()) return cmd_svec_reconstruct(rec_opts, app);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\nRun 'cfanet " << active->get_name()
              << " --help' for usage.\n";
    return 2;
  } catch (const DegeneratePatternError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
