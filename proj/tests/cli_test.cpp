#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <fstream>
#include <iterator>
#include <sstream>

#include "cfanet/image_io.hpp"
#include "cfanet/models.hpp"
#include "cfanet/stack_io.hpp"
#include "cfanet/svec.hpp"
#include "support.hpp"

namespace cfanet {
namespace {

namespace fs = std::filesystem;

struct RunResult {
  int code = -1;
  std::string out;
  std::string err;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), {});
}

RunResult run(const std::string& args, const fs::path& dir) {
  const fs::path out = dir / "stdout.txt";
  const fs::path err = dir / "stderr.txt";
  const std::string cmd = std::string("\"") + CFANET_CLI_PATH + "\" " + args + " >\"" +
                          out.string() + "\" 2>\"" + err.string() + "\"";
  const int status = std::system(cmd.c_str());
  RunResult r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = slurp(out);
  r.err = slurp(err);
  return r;
}

std::string q(const fs::path& p) { return "\"" + p.string() + "\""; }

std::size_t count_lines(const std::string& s) {
  return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n'));
}

void make_dataset(const fs::path& dir, std::size_t n, std::size_t size) {
  fs::create_directories(dir);
  for (std::size_t i = 0; i < n; ++i) {
    save_png(testing::textured_image(size, size, 100 + i), dir / ("img" + std::to_string(i) + ".png"));
  }
}

TEST(Cli, HelpAndUsageErrors) {
  const auto dir = testing::fresh_dir("cli_usage");
  EXPECT_EQ(run("--help", dir).code, 0);
  EXPECT_EQ(run("", dir).code, 2);
  EXPECT_EQ(run("frobnicate", dir).code, 2);
  EXPECT_EQ(run("mosaic --input x.png", dir).code, 2);
}

TEST(Cli, MosaicBayerTwoByTwo) {
  const auto dir = testing::fresh_dir("cli_mosaic");
  save_png(Tensor({1, 3, 2, 2}, 0.6), dir / "in.png");
  const RunResult r =
      run("mosaic --input " + q(dir / "in.png") + " --pattern bayer --output " + q(dir / "m.bin"), dir);
  ASSERT_EQ(r.code, 0) << r.err;
  const MosaicFile f = read_mosaic_file(dir / "m.bin");
  EXPECT_EQ(f.stack.plane_count(), 3u);
  std::size_t nonzero = 0;
  for (Real v : f.stack.planes.values()) nonzero += v != 0;
  EXPECT_EQ(nonzero, 4u);
  EXPECT_TRUE(fs::exists(dir / "m.bin.preview.png"));
  EXPECT_TRUE(fs::exists(dir / "effective_config.txt"));
}

TEST(Cli, UnknownPatternExitsTwo) {
  const auto dir = testing::fresh_dir("cli_badpattern");
  save_png(Tensor({1, 3, 2, 2}, 0.6), dir / "in.png");
  const RunResult r =
      run("mosaic --input " + q(dir / "in.png") + " --pattern xtrans --output " + q(dir / "m.bin"), dir);
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("xtrans"), std::string::npos);
  EXPECT_NE(r.err.find("--help"), std::string::npos);
}

TEST(Cli, MissingInputExitsOne) {
  const auto dir = testing::fresh_dir("cli_missing");
  EXPECT_EQ(run("mosaic --input " + q(dir / "nope.png") + " --output " + q(dir / "m.bin"), dir).code, 1);
}

TEST(Cli, PatternFileEqualsBuiltin) {
  const auto dir = testing::fresh_dir("cli_patfile");
  save_png(testing::textured_image(9, 9, 1), dir / "in.png");
  save_pattern_file(builtin_pattern("cygm"), dir / "cygm.txt");
  ASSERT_EQ(run("mosaic --input " + q(dir / "in.png") + " --pattern cygm --output " + q(dir / "a.bin"), dir).code, 0);
  ASSERT_EQ(run("mosaic --input " + q(dir / "in.png") + " --pattern " + q(dir / "cygm.txt") +
                    " --output " + q(dir / "b.bin"), dir).code, 0);
  EXPECT_EQ(read_mosaic_file(dir / "a.bin").stack.planes, read_mosaic_file(dir / "b.bin").stack.planes);
}

TEST(Cli, DemosaicZeroResidualEqualsBaselineOnly) {
  const auto dir = testing::fresh_dir("cli_demosaic");
  save_png(testing::textured_image(12, 12, 2), dir / "in.png");
  VdOptions opt;
  opt.depth = 3;
  opt.width = 4;
  ModelGraph m = build_dmcnn_vd(opt, 1);
  zero_final_conv(m);
  save_weights(m, dir / "w.bin");
  ASSERT_EQ(run("mosaic --input " + q(dir / "in.png") + " --output " + q(dir / "m.bin"), dir).code, 0);
  RunResult a = run("demosaic --input " + q(dir / "m.bin") + " --weights " + q(dir / "w.bin") +
                        " --output " + q(dir / "a.png") + " --truth " + q(dir / "in.png"), dir);
  ASSERT_EQ(a.code, 0) << a.err;
  EXPECT_EQ(a.out.rfind("m.bin,", 0), 0u) << a.out;
  RunResult b = run("demosaic --input " + q(dir / "m.bin") + " --baseline-only --output " +
                        q(dir / "b.png"), dir);
  ASSERT_EQ(b.code, 0) << b.err;
  EXPECT_EQ(slurp(dir / "a.png"), slurp(dir / "b.png"));
}

TEST(Cli, SvecWeightsOnBayerMosaicIsMismatch) {
  const auto dir = testing::fresh_dir("cli_mismatch");
  save_png(Tensor({1, 3, 8, 8}, 0.3), dir / "in.png");
  save_weights(build_svec_model(SvecArch::dmcnn_vd, 1, 3, 4), dir / "svec.bin");
  ASSERT_EQ(run("mosaic --input " + q(dir / "in.png") + " --output " + q(dir / "m.bin"), dir).code, 0);
  const RunResult r = run("demosaic --input " + q(dir / "m.bin") + " --weights " +
                              q(dir / "svec.bin") + " --output " + q(dir / "o.png"), dir);
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("6"), std::string::npos) << r.err;
  EXPECT_NE(r.err.find("3"), std::string::npos) << r.err;
}

TEST(Cli, EvaluateHasOneRowPerImagePlusMean) {
  const auto dir = testing::fresh_dir("cli_eval");
  make_dataset(dir / "data", 3, 10);
  const RunResult r = run("evaluate --data-dir " + q(dir / "data") + " --report " +
                              q(dir / "out" / "report.csv"), dir);
  ASSERT_EQ(r.code, 0) << r.err;
  const std::string csv = slurp(dir / "out" / "report.csv");
  EXPECT_EQ(count_lines(csv), 1u + 3 + 1);
  const RunResult empty = run("evaluate --data-dir " + q(dir / "out"), dir);
  EXPECT_EQ(empty.code, 0);
  EXPECT_NE(empty.err.find("warning"), std::string::npos);
}

TEST(Cli, TrainZeroIterationsCheckpointEqualsInit) {
  const auto dir = testing::fresh_dir("cli_train0");
  make_dataset(dir / "data", 2, 20);
  const RunResult r = run("--seed 7 train --data-dir " + q(dir / "data") + " --output-dir " +
                              q(dir / "out") + " --iterations 0 --depth 3 --width 4 --patch-size 8",
                          dir);
  ASSERT_EQ(r.code, 0) << r.err;
  VdOptions opt;
  opt.depth = 3;
  opt.width = 4;
  const ModelGraph init = build_dmcnn_vd_for_pattern(builtin_pattern("bayer"), 7, opt);
  const ModelGraph saved = load_weights(dir / "out" / "weights.bin");
  ASSERT_EQ(saved.layers.size(), init.layers.size());
  for (std::size_t i = 0; i < init.layers.size(); ++i) {
    if (const auto* c = std::get_if<ConvLayer>(&init.layers[i])) {
      EXPECT_EQ(std::get<ConvLayer>(saved.layers[i]).kernel, c->kernel);
      EXPECT_EQ(std::get<ConvLayer>(saved.layers[i]).bias, c->bias);
    }
  }
  EXPECT_EQ(count_lines(slurp(dir / "out" / "train_log.csv")), 1u);
  EXPECT_NE(slurp(dir / "out" / "effective_config.txt").find("iterations"), std::string::npos);
}

TEST(Cli, ConfigFileAndFlagOverride) {
  const auto dir = testing::fresh_dir("cli_config");
  make_dataset(dir / "data", 2, 20);
  {
    std::ofstream cfg(dir / "run.ini");
    cfg << "seed=3\n[train]\niterations=2\ndepth=3\nwidth=4\npatch-size=8\nbatch-size=2\n"
        << "log-interval=1\n";
  }
  const RunResult r = run("--config " + q(dir / "run.ini") + " train --data-dir " +
                              q(dir / "data") + " --output-dir " + q(dir / "out") +
                              " --iterations 3",
                          dir);
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(count_lines(slurp(dir / "out" / "train_log.csv")), 4u);
}

TEST(Cli, TrainResumeMatchesUninterrupted) {
  const auto dir = testing::fresh_dir("cli_resume");
  make_dataset(dir / "data", 2, 20);
  const std::string common = "--seed 5 --threads 1 train --data-dir " + q(dir / "data") +
                             " --depth 3 --width 4 --patch-size 8 --batch-size 2 --log-interval 1"
                             " --lr 1e-3 --val-interval 0";
  ASSERT_EQ(run(common + " --output-dir " + q(dir / "full") + " --iterations 4", dir).code, 0);
  ASSERT_EQ(run(common + " --output-dir " + q(dir / "part") + " --iterations 2", dir).code, 0);
  const RunResult r = run(common + " --output-dir " + q(dir / "part") + " --iterations 4 --resume", dir);
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(slurp(dir / "part" / "train_log.csv"), slurp(dir / "full" / "train_log.csv"));
  EXPECT_EQ(slurp(dir / "part" / "weights.bin"), slurp(dir / "full" / "weights.bin"));
}

TEST(Cli, DesignPatternWeightsInUnitInterval) {
  const auto dir = testing::fresh_dir("cli_design");
  make_dataset(dir / "data", 2, 20);
  const RunResult r = run("design-pattern --data-dir " + q(dir / "data") + " --output-dir " +
                              q(dir / "out") + " --iterations 5 --depth 2 --width 4 --patch-size 9"
                              " --batch-size 2 --lr 0.05",
                          dir);
  ASSERT_EQ(r.code, 0) << r.err;
  const CfaPattern learned = load_pattern_file(dir / "out" / "learned_pattern.txt");
  EXPECT_EQ(learned.tile_h(), 3u);
  for (const CfaCell& c : learned.cells())
    for (Real w : c.filter) {
      EXPECT_GE(w, 0);
      EXPECT_LE(w, 1);
    }
  ModelGraph m = load_weights(dir / "out" / "weights.bin");
  ASSERT_NE(m.pattern_layer(), nullptr);
}

TEST(Cli, SvecSimulateAndReconstruct) {
  const auto dir = testing::fresh_dir("cli_svec");
  Tensor rad = testing::textured_image(12, 12, 9);
  for (Real& v : rad.values()) v = v * 50 + 0.1;
  write_pfm(rad, dir / "scene.pfm");
  ASSERT_EQ(run("svec-simulate --input " + q(dir / "scene.pfm") + " --output " + q(dir / "s.bin") +
                    " --normalized-out " + q(dir / "norm.pfm"), dir).code, 0);
  const MosaicFile f = read_mosaic_file(dir / "s.bin");
  EXPECT_EQ(f.stack.plane_count(), 6u);
  const RunResult r = run("svec-reconstruct --input " + q(dir / "s.bin") + " --output " +
                              q(dir / "rec.pfm") + " --truth " + q(dir / "norm.pfm"), dir);
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(r.out.rfind("s.bin,", 0), 0u);
  EXPECT_EQ(read_pfm(dir / "rec.pfm").pixels.shape(), (Shape{1, 3, 12, 12}));
}

}  // namespace
}  // namespace cfanet
