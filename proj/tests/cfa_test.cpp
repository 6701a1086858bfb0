#include <gtest/gtest.h>

#include <set>

#include "cfanet/cfa.hpp"
#include "cfanet/errors.hpp"
#include "support.hpp"

namespace cfanet {
namespace {

using testing::random_tensor;

TEST(Patterns, Bayer) {
  const CfaPattern p = builtin_pattern("bayer");
  EXPECT_EQ(p.tile_h(), 2u);
  EXPECT_EQ(p.tile_w(), 2u);
  EXPECT_EQ(p.cell_at(0, 1).filter, (Filter{1, 0, 0}));
  EXPECT_EQ(p.cell_at(0, 0).filter, (Filter{0, 1, 0}));
  EXPECT_EQ(p.cell_at(1, 0).filter, (Filter{0, 0, 1}));
  EXPECT_EQ(p.cell_at(1, 1).filter, (Filter{0, 1, 0}));
  EXPECT_EQ(p.plane_count(), 3u);
  EXPECT_TRUE(is_rgb_identity_basis(p));
}

TEST(Patterns, DiagonalStripe) {
  const CfaPattern p = builtin_pattern("diagonal_stripe");
  EXPECT_EQ(p.plane_count(), 3u);
  for (std::size_t r = 0; r < 3; ++r) {
    for (std::size_t c = 0; c < 3; ++c) {
      // each row is the row above rotated by one cell
      EXPECT_EQ(p.cell_at(r + 1, c + 1), p.cell_at(r, c));
      const std::size_t primary = (c + 3 - r) % 3;
      EXPECT_EQ(p.cell_at(r, c).filter[primary], 1);
    }
  }
}

TEST(Patterns, CygmAndHirakawa) {
  const CfaPattern cygm = builtin_pattern("cygm");
  EXPECT_EQ(cygm.plane_count(), 4u);
  EXPECT_EQ(cygm.cell_at(0, 0).filter, (Filter{0, 1, 1}));
  EXPECT_EQ(cygm.cell_at(1, 1).filter, (Filter{1, 0, 1}));
  const CfaPattern hk = builtin_pattern("hirakawa");
  EXPECT_EQ(hk.tile_h(), 4u);
  EXPECT_EQ(hk.tile_w(), 2u);
  EXPECT_EQ(hk.plane_count(), 4u);
  EXPECT_FALSE(is_rgb_identity_basis(hk));
}

TEST(Patterns, UnknownAndInvalid) {
  EXPECT_THROW(builtin_pattern("xtrans"), ConfigError);
  EXPECT_THROW(CfaPattern("bad", 1, 1, {{{1.5, 0, 0}, 1}}), ConfigError);
  EXPECT_THROW(CfaPattern("bad", 1, 1, {{{1, 0, 0}, 0}}), ConfigError);
  EXPECT_THROW(CfaPattern("bad", 1, 2, {{{1, 0, 0}, 1}}), ConfigError);
}

TEST(Patterns, DistinctExposureMeansDistinctPlane) {
  const CfaPattern p("e", 1, 2, {{{1, 0, 0}, 1}, {{1, 0, 0}, 4}});
  EXPECT_EQ(p.plane_count(), 2u);
}

TEST(Mosaic, PureRedBayer) {
  Tensor img({1, 3, 4, 4});
  for (Real& v : img.plane(0, 0)) v = 1;
  const PlaneStack s = mosaic(img, builtin_pattern("bayer"));
  for (std::size_t y = 0; y < 4; ++y) {
    for (std::size_t x = 0; x < 4; ++x) {
      const bool red_site = y % 2 == 0 && x % 2 == 1;
      for (std::size_t k = 0; k < 3; ++k) {
        const Real expect = red_site && static_cast<int>(k) == s.mask_at(y, x) ? 1 : 0;
        EXPECT_EQ(s.planes(0, k, y, x), expect);
      }
    }
  }
}

TEST(Mosaic, GrayBayerAndDiagonalCounts) {
  const PlaneStack s = mosaic(Tensor({1, 3, 4, 4}, 0.5), builtin_pattern("bayer"));
  const Tensor sampled = sampled_values(s);
  for (Real v : sampled.values()) EXPECT_EQ(v, 0.5);

  const PlaneStack d = mosaic(Tensor({1, 3, 3, 3}, 1), builtin_pattern("diagonal_stripe"));
  for (std::size_t k = 0; k < 3; ++k) {
    int nonzero = 0;
    for (Real v : d.planes.plane(0, k)) nonzero += v != 0;
    EXPECT_EQ(nonzero, 3);
  }
}

TEST(Mosaic, OnePlanePerPixelForAllPatterns) {
  std::mt19937_64 rng(2);
  for (const std::string& name : builtin_pattern_names()) {
    const CfaPattern p = builtin_pattern(name);
    const Tensor img = random_tensor({1, 3, 9, 10}, rng, 0.01, 1);
    const PlaneStack s = mosaic(img, p);
    for (std::size_t y = 0; y < 9; ++y) {
      for (std::size_t x = 0; x < 10; ++x) {
        int nonzero = 0;
        for (std::size_t k = 0; k < s.plane_count(); ++k) nonzero += s.planes(0, k, y, x) != 0;
        EXPECT_EQ(nonzero, 1) << name;
      }
    }
  }
}

TEST(Mosaic, PhaseShiftMatchesShiftedPattern) {
  std::mt19937_64 rng(3);
  const Tensor img = random_tensor({1, 3, 6, 6}, rng, 0, 1);
  const CfaPattern p = builtin_pattern("cygm");
  const PlaneStack a = mosaic(img, p, 1, 1);
  const PlaneStack b = mosaic(img, p.shifted(1, 1));
  EXPECT_EQ(sampled_values(a), sampled_values(b));
}

TEST(Mosaic, Rot180CommutesForBayer) {
  // [G R; B G] rotated by 180 degrees is [G B; R G], i.e. the tile at phase
  // (1, 1) relative to its own rotation. On an even-sized image, rotating
  // the mosaic equals mosaicing the rotated image with phase (1, 1).
  std::mt19937_64 rng(4);
  const Tensor img = random_tensor({1, 3, 6, 8}, rng, 0, 1);
  Tensor rot({1, 3, 6, 8});
  for (std::size_t c = 0; c < 3; ++c)
    for (std::size_t y = 0; y < 6; ++y)
      for (std::size_t x = 0; x < 8; ++x) rot(0, c, 5 - y, 7 - x) = img(0, c, y, x);
  const CfaPattern p = builtin_pattern("bayer");
  const Tensor s = sampled_values(mosaic(img, p));
  const Tensor r = sampled_values(mosaic(rot, p, 1, 1));
  for (std::size_t y = 0; y < 6; ++y)
    for (std::size_t x = 0; x < 8; ++x) EXPECT_EQ(s(0, 0, y, x), r(0, 0, 5 - y, 7 - x));
}

TEST(BilinearFill, BayerGreenIsFourNeighbourMean) {
  std::mt19937_64 rng(5);
  const Tensor img = random_tensor({1, 3, 8, 8}, rng, 0, 1);
  const CfaPattern p = builtin_pattern("bayer");
  const PlaneStack s = mosaic(img, p);
  const Tensor filled = bilinear_fill(s, p);
  const std::size_t g = static_cast<std::size_t>(s.mask_at(0, 0));
  for (std::size_t y = 1; y < 7; ++y) {
    for (std::size_t x = 1; x < 7; ++x) {
      if (static_cast<std::size_t>(s.mask_at(y, x)) == g) continue;
      const Real mean = (img(0, 1, y - 1, x) + img(0, 1, y + 1, x) + img(0, 1, y, x - 1) +
                         img(0, 1, y, x + 1)) / 4;
      EXPECT_NEAR(filled(0, g, y, x), mean, 1e-15);
    }
  }
}

TEST(BilinearFill, ExactAtSitesAndOnConstants) {
  std::mt19937_64 rng(6);
  for (const std::string& name : builtin_pattern_names()) {
    const CfaPattern p = builtin_pattern(name);
    const Tensor img = random_tensor({2, 3, 11, 9}, rng, 0, 1);
    const PlaneStack s = mosaic(img, p);
    const Tensor filled = bilinear_fill(s, p);
    for (std::size_t n = 0; n < 2; ++n)
      for (std::size_t y = 0; y < 11; ++y)
        for (std::size_t x = 0; x < 9; ++x) {
          const auto k = static_cast<std::size_t>(s.mask_at(y, x));
          EXPECT_EQ(filled(n, k, y, x), s.planes(n, k, y, x)) << name;
        }
    const PlaneStack c = mosaic(Tensor({1, 3, 11, 9}, 0.37), p);
    const Tensor cf = bilinear_fill(c, p);
    for (std::size_t k = 0; k < c.plane_count(); ++k) {
      const Real v = c.plane_cells[k].exposure *
                     (0.37 * c.plane_cells[k].filter[0] + 0.37 * c.plane_cells[k].filter[1] +
                      0.37 * c.plane_cells[k].filter[2]);
      for (Real got : cf.plane(0, k)) EXPECT_EQ(got, v) << name;
    }
  }
}

TEST(BilinearFill, EmptyPlane) {
  const CfaPattern p = builtin_pattern("diagonal_stripe");
  const PlaneStack s = mosaic(Tensor({1, 3, 1, 2}, 0.5), p);
  EXPECT_THROW(bilinear_fill(s, p), EmptyPlaneError);
}

TEST(BilinearFill, BackwardIsAdjoint) {
  std::mt19937_64 rng(7);
  const CfaPattern p = builtin_pattern("hirakawa");
  const PlaneStack s = mosaic(random_tensor({1, 3, 9, 7}, rng, 0, 1), p);
  const BilinearFill fill(s.mask, 9, 7, s.plane_count(), p.tile_h(), p.tile_w());
  Tensor sparse = s.planes;
  const Tensor dense_probe = random_tensor(sparse.shape(), rng);
  const Tensor back = fill.backward(dense_probe);
  Real lhs = 0, rhs = 0;
  const Tensor applied = fill.apply(sparse);
  for (std::size_t i = 0; i < applied.size(); ++i) lhs += applied[i] * dense_probe[i];
  for (std::size_t i = 0; i < sparse.size(); ++i) rhs += sparse[i] * back[i];
  EXPECT_NEAR(lhs, rhs, 1e-11);
}

TEST(BilinearDemosaic, ConstantAndRamp) {
  const CfaPattern p = builtin_pattern("bayer");
  const Tensor gray({1, 3, 6, 6}, 0.5);
  EXPECT_EQ(bilinear_demosaic_bayer(mosaic(gray, p)), gray);

  Tensor ramp({1, 3, 8, 10});
  for (std::size_t c = 0; c < 3; ++c)
    for (std::size_t y = 0; y < 8; ++y)
      for (std::size_t x = 0; x < 10; ++x) ramp(0, c, y, x) = 0.05 + 0.08 * x;
  const Tensor out = bilinear_demosaic_bayer(mosaic(ramp, p));
  for (std::size_t c = 0; c < 3; ++c)
    for (std::size_t y = 1; y < 7; ++y)
      for (std::size_t x = 1; x < 9; ++x) EXPECT_NEAR(out(0, c, y, x), ramp(0, c, y, x), 1e-14);
}

TEST(BilinearDemosaic, RejectsNonBayer) {
  const CfaPattern p = builtin_pattern("cygm");
  EXPECT_THROW(bilinear_demosaic_bayer(mosaic(Tensor({1, 3, 4, 4}, 0.5), p)), ConfigError);
}

TEST(Lsq, IdentityBasisEqualsFilledPlanes) {
  std::mt19937_64 rng(8);
  const CfaPattern p = builtin_pattern("diagonal_stripe");
  const PlaneStack s = mosaic(random_tensor({1, 3, 9, 9}, rng, 0, 1), p);
  const Tensor filled = bilinear_fill(s, p);
  const Tensor rgb = lsq_color_baseline(filled, p);
  // Planes are ordered by first appearance; map them to channels.
  for (std::size_t k = 0; k < 3; ++k) {
    std::size_t ch = 0;
    while (p.planes()[k].filter[ch] != 1) ++ch;
    for (std::size_t i = 0; i < 81; ++i) EXPECT_EQ(rgb.plane(0, ch)[i], filled.plane(0, k)[i]);
  }
}

TEST(Lsq, BayerPerCellRecoversKnownColor) {
  const CfaPattern bayer = builtin_pattern("bayer");
  const std::vector<CfaCell> cells(bayer.cells().begin(), bayer.cells().end());
  const CfaPattern per_cell("bayer4", 2, 2, cells, PlaneGrouping::per_cell);
  ASSERT_EQ(per_cell.plane_count(), 4u);
  const Filter color{0.2, 0.7, 0.4};
  Tensor filled({1, 4, 1, 1});
  for (std::size_t k = 0; k < 4; ++k) {
    const Filter& f = per_cell.planes()[k].filter;
    filled[k] = f[0] * color[0] + f[1] * color[1] + f[2] * color[2];
  }
  const Tensor rgb = lsq_color_baseline(filled, per_cell);
  for (std::size_t c = 0; c < 3; ++c) EXPECT_NEAR(rgb[c], color[c], 1e-10);
}

TEST(Lsq, HirakawaRecoversConsistentColor) {
  const CfaPattern p = builtin_pattern("hirakawa");
  const Filter color{0.3, 0.55, 0.8};
  Tensor filled({1, 4, 1, 1});
  for (std::size_t k = 0; k < 4; ++k) {
    const Filter& f = p.planes()[k].filter;
    filled[k] = f[0] * color[0] + f[1] * color[1] + f[2] * color[2];
  }
  const Tensor rgb = lsq_color_baseline(filled, p);
  for (std::size_t c = 0; c < 3; ++c) EXPECT_NEAR(rgb[c], color[c], 1e-10);
}

TEST(Lsq, RankDeficientNamesPattern) {
  const CfaPattern flat("flat", 1, 3, {{{0.5, 0.5, 0}, 1}, {{0.5, 0.5, 0}, 2}, {{1, 1, 0}, 1}});
  try {
    lsq_color_baseline(Tensor({1, 3, 1, 1}), flat);
    FAIL();
  } catch (const DegeneratePatternError& e) {
    EXPECT_NE(std::string(e.what()).find("flat"), std::string::npos);
  }
}

TEST(Lsq, IdentityPathEqualsBilinearDemosaic) {
  std::mt19937_64 rng(9);
  const CfaPattern p = builtin_pattern("bayer");
  const PlaneStack s = mosaic(random_tensor({1, 3, 8, 8}, rng, 0, 1), p);
  EXPECT_EQ(lsq_color_baseline(bilinear_fill(s, p), p, false), bilinear_demosaic_bayer(s));
}

TEST(Lsq, BackwardMatchesFiniteDifferences) {
  std::mt19937_64 rng(10);
  const CfaPattern p = builtin_pattern("cygm");
  const LsqColorSolver solver(p.planes(), p.name());
  Tensor filled = random_tensor({1, 4, 2, 3}, rng, 0, 1);
  const testing::Probe probe(18, 3);
  const Tensor sol = solver.solve(filled);
  const auto grads = solver.backward(filled, sol, probe.grad(sol.shape()));
  auto r = testing::check_gradient([&] { return probe(solver.solve(filled)); }, filled.values(),
                                   grads.filled.values());
  EXPECT_EQ(r.failures, 0u) << r.detail;

  // Filter gradient: perturb the filter matrix through fresh solvers.
  std::vector<CfaCell> cells(p.planes().begin(), p.planes().end());
  std::vector<Real> a;
  for (const CfaCell& c : cells) a.insert(a.end(), c.filter.begin(), c.filter.end());
  auto loss = [&] {
    std::vector<CfaCell> tmp = cells;
    for (std::size_t i = 0; i < tmp.size(); ++i)
      for (std::size_t c = 0; c < 3; ++c) tmp[i].filter[c] = a[i * 3 + c];
    return probe(LsqColorSolver(tmp, "probe").solve(filled));
  };
  auto rf = testing::check_gradient(loss, a, grads.filters);
  EXPECT_EQ(rf.failures, 0u) << rf.detail;
}

TEST(PatternText, RoundTripAllBuiltins) {
  for (const std::string& name : builtin_pattern_names()) {
    const CfaPattern p = builtin_pattern(name);
    const CfaPattern q = parse_pattern(format_pattern(p));
    EXPECT_EQ(q.tile_h(), p.tile_h());
    EXPECT_EQ(q.tile_w(), p.tile_w());
    EXPECT_EQ(q.plane_count(), p.plane_count());
    for (std::size_t i = 0; i < p.cells().size(); ++i) EXPECT_EQ(q.cells()[i], p.cells()[i]) << name;
  }
}

TEST(PatternText, ParseErrors) {
  EXPECT_THROW(parse_pattern("tile 2 2\n1 0 0\n"), ConfigError);
  EXPECT_THROW(parse_pattern("tile 1 1\n1 0\n"), ConfigError);
  EXPECT_THROW(parse_pattern("1 0 0\n"), ConfigError);
  const CfaPattern p = parse_pattern("# red only\nname r\ntile 1 3\n1 0 0\n0 1 0\n0 0 1 2.5\n");
  EXPECT_EQ(p.name(), "r");
  EXPECT_EQ(p.cells()[2].exposure, 2.5);
}

TEST(PatternText, ResolveFromFile) {
  const auto dir = testing::fresh_dir("pattern_file");
  save_pattern_file(builtin_pattern("cygm"), dir / "p.txt");
  const CfaPattern p = resolve_pattern((dir / "p.txt").string());
  EXPECT_EQ(p.plane_count(), 4u);
  EXPECT_THROW(resolve_pattern("no_such_pattern"), ConfigError);
}

}  // namespace
}  // namespace cfanet
