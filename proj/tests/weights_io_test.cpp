#include <gtest/gtest.h>

#include <fstream>
#include <iterator>

#include "cfanet/errors.hpp"
#include "cfanet/models.hpp"
#include "support.hpp"

namespace cfanet {
namespace {

std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), {});
}

void write_file(const std::filesystem::path& p, const std::string& data) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  out << data;
}

ModelGraph small_vd(std::uint64_t seed) {
  VdOptions opt;
  opt.depth = 3;
  opt.width = 4;
  opt.msra_factor = 1;
  return build_dmcnn_vd(opt, seed);
}

TEST(WeightsIo, RoundTripIsForwardBitExact) {
  const auto dir = testing::fresh_dir("weights_rt");
  std::mt19937_64 rng(1);
  VdOptions body;
  body.depth = 3;
  body.width = 4;
  for (ModelGraph m : {build_dmcnn(2), small_vd(3), build_dmcnn_vd_pa(4, 3, 3, body)}) {
    // Non-trivial running statistics.
    const Tensor img = testing::random_tensor({2, 3, 24, 24}, rng, 0, 1);
    const CfaPattern p = effective_pattern(m, builtin_pattern("bayer"));
    const PlaneStack s = m.pattern_layer() ? pattern_forward(img, *m.pattern_layer()) : mosaic(img, p);
    run_forward(m, p, &s, &img);
    m.set_mode(NormMode::eval);
    save_weights(m, dir / "w.bin");
    ModelGraph loaded = load_weights(dir / "w.bin");
    loaded.set_mode(NormMode::eval);
    EXPECT_EQ(loaded.arch, m.arch);
    EXPECT_EQ(forward_demosaic(loaded, s, p), forward_demosaic(m, s, p)) << m.arch;
  }
}

TEST(WeightsIo, TrainingStateRoundTrip) {
  const auto dir = testing::fresh_dir("weights_state");
  ModelGraph m = small_vd(1);
  TrainingState state;
  state.iteration = 17;
  state.optimizer.step = 17;
  state.optimizer.config.learning_rate = 3e-4;
  state.optimizer.first_moment = {{1, 2}, {3}};
  state.optimizer.second_moment = {{4, 5}, {6}};
  save_weights(m, dir / "w.bin", &state);
  TrainingState loaded;
  load_weights(dir / "w.bin", &loaded);
  EXPECT_EQ(loaded.iteration, 17u);
  EXPECT_EQ(loaded.optimizer.step, 17u);
  EXPECT_EQ(loaded.optimizer.config.learning_rate, Real(3e-4));
  EXPECT_EQ(loaded.optimizer.first_moment, state.optimizer.first_moment);
  EXPECT_EQ(loaded.optimizer.second_moment, state.optimizer.second_moment);
}

TEST(WeightsIo, CorruptFilesYieldDesignatedErrors) {
  const auto dir = testing::fresh_dir("weights_corrupt");
  save_weights(small_vd(2), dir / "good.bin");
  const std::string good = read_file(dir / "good.bin");

  std::string bad_magic = good;
  bad_magic[0] = 'X';
  write_file(dir / "magic.bin", bad_magic);
  EXPECT_THROW(load_weights(dir / "magic.bin"), FormatError);

  std::string bad_version = good;
  bad_version[8] = 9;
  write_file(dir / "version.bin", bad_version);
  EXPECT_THROW(load_weights(dir / "version.bin"), VersionError);

  for (std::size_t cut : {std::size_t{4}, good.size() / 2, good.size() - 1}) {
    write_file(dir / "trunc.bin", good.substr(0, cut));
    EXPECT_THROW(load_weights(dir / "trunc.bin"), TruncatedFileError) << cut;
  }
  // Truncation is a format problem too, for callers that only catch that.
  write_file(dir / "trunc.bin", good.substr(0, 20));
  EXPECT_THROW(load_weights(dir / "trunc.bin"), FormatError);

  std::string bad_end = good;
  bad_end[bad_end.size() - 1] = 'X';
  write_file(dir / "end.bin", bad_end);
  EXPECT_THROW(load_weights(dir / "end.bin"), FormatError);

  EXPECT_THROW(load_weights(dir / "missing.bin"), IoError);
}

TEST(WeightsIo, MismatchedArchitectureNamesLayer) {
  const auto dir = testing::fresh_dir("weights_mismatch");
  save_weights(small_vd(2), dir / "w.bin");
  VdOptions opt;
  opt.depth = 3;
  opt.width = 5;
  ModelGraph other = build_dmcnn_vd(opt, 2);
  try {
    load_weights_into(other, dir / "w.bin");
    FAIL();
  } catch (const ShapeError& e) {
    EXPECT_NE(std::string(e.what()).find("layer 0"), std::string::npos) << e.what();
  }
  ModelGraph same = small_vd(9);
  load_weights_into(same, dir / "w.bin");
  EXPECT_EQ(std::get<ConvLayer>(same.layers[0]).kernel,
            std::get<ConvLayer>(small_vd(2).layers[0]).kernel);
}

}  // namespace
}  // namespace cfanet
