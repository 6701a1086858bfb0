#include <gtest/gtest.h>

#include <fstream>

#include "cfanet/errors.hpp"
#include "cfanet/image_io.hpp"
#include "cfanet/stack_io.hpp"
#include "support.hpp"

namespace cfanet {
namespace {

Tensor quantized(std::size_t h, std::size_t w, std::uint64_t seed) {
  Tensor t = testing::textured_image(h, w, seed);
  for (Real& v : t.values()) v = std::round(v * 255) / 255;
  return t;
}

TEST(ImageIo, WhitePpm) {
  const auto dir = testing::fresh_dir("img_white");
  {
    std::ofstream out(dir / "w.ppm", std::ios::binary);
    out << "P6\n# comment\n1 1\n255\n\xff\xff\xff";
  }
  EXPECT_EQ(load_image(dir / "w.ppm"), Tensor({1, 3, 1, 1}, 1));
}

TEST(ImageIo, PngAndPpmAgree) {
  const auto dir = testing::fresh_dir("img_rt");
  const Tensor img = quantized(7, 5, 2);
  save_png(img, dir / "a.png");
  save_ppm(img, dir / "a.ppm");
  const Tensor png = load_image(dir / "a.png");
  EXPECT_EQ(png, load_image(dir / "a.ppm"));
  EXPECT_LE(testing::max_abs_diff(png, img), 1e-12);
  // Content sniffing, not the extension.
  std::filesystem::copy_file(dir / "a.png", dir / "renamed.ppm");
  EXPECT_EQ(load_image(dir / "renamed.ppm"), png);
}

TEST(ImageIo, Errors) {
  const auto dir = testing::fresh_dir("img_err");
  {
    std::ofstream out(dir / "x.pfm", std::ios::binary);
    out << "PF\n1 1\n-1.0\n";
  }
  EXPECT_THROW(load_image(dir / "x.pfm"), UnsupportedFormatError);
  {
    std::ofstream out(dir / "t.ppm", std::ios::binary);
    out << "P6\n2 2\n255\n\x01\x02";
  }
  EXPECT_THROW(load_image(dir / "t.ppm"), TruncatedFileError);
  {
    std::ofstream out(dir / "d.ppm", std::ios::binary);
    out << "P6\n1 1\n65535\n\x01\x02\x03\x04\x05\x06";
  }
  EXPECT_THROW(load_image(dir / "d.ppm"), UnsupportedFormatError);
  save_png(quantized(6, 6, 3), dir / "ok.png");
  std::ifstream in(dir / "ok.png", std::ios::binary);
  std::string data(std::istreambuf_iterator<char>(in), {});
  {
    std::ofstream out(dir / "cut.png", std::ios::binary);
    out << data.substr(0, data.size() / 2);
  }
  EXPECT_THROW(load_image(dir / "cut.png"), TruncatedFileError);
  EXPECT_THROW(load_image(dir / "missing.png"), IoError);
}

TEST(ImageIo, SixteenBitPngRejected) {
  // 1x1 16-bit grayscale PNG.
  const unsigned char png16[] = {
      0x89, 0x50, 0x4E, 0x47, 0x0D, 0x0A, 0x1A, 0x0A, 0x00, 0x00, 0x00, 0x0D, 0x49, 0x48,
      0x44, 0x52, 0x00, 0x00, 0x00, 0x01, 0x00, 0x00, 0x00, 0x01, 0x10, 0x00, 0x00, 0x00,
      0x00, 0x6A, 0xEE, 0x47, 0x16, 0x00, 0x00, 0x00, 0x0B, 0x49, 0x44, 0x41, 0x54, 0x78,
      0x9C, 0x63, 0x10, 0x32, 0x01, 0x00, 0x00, 0x5B, 0x00, 0x47, 0x96, 0xFB, 0x1B, 0x65,
      0x00, 0x00, 0x00, 0x00, 0x49, 0x45, 0x4E, 0x44, 0xAE, 0x42, 0x60, 0x82};
  const auto dir = testing::fresh_dir("img_16");
  {
    std::ofstream out(dir / "g16.png", std::ios::binary);
    out.write(reinterpret_cast<const char*>(png16), sizeof png16);
  }
  EXPECT_THROW(load_image(dir / "g16.png"), UnsupportedFormatError);
}

TEST(ImageIo, Extensions) {
  EXPECT_TRUE(is_image_file("a.PNG"));
  EXPECT_TRUE(is_image_file("dir/b.ppm"));
  EXPECT_FALSE(is_image_file("c.pfm"));
  EXPECT_FALSE(is_image_file("d.jpg"));
}

TEST(MosaicFileIo, RoundTrip) {
  const auto dir = testing::fresh_dir("stack_rt");
  std::mt19937_64 rng(4);
  const CfaPattern p = builtin_pattern("hirakawa");
  MosaicFile f{p, 1, 0, mosaic(testing::random_tensor({1, 3, 9, 6}, rng, 0, 1), p, 1, 0)};
  write_mosaic_file(f, dir / "m.bin");
  const MosaicFile g = read_mosaic_file(dir / "m.bin");
  EXPECT_EQ(g.phase_y, 1u);
  EXPECT_EQ(g.pattern.name(), "hirakawa");
  EXPECT_EQ(g.stack.planes, f.stack.planes);
  EXPECT_EQ(g.stack.mask, f.stack.mask);
  for (std::size_t i = 0; i < p.cells().size(); ++i) EXPECT_EQ(g.pattern.cells()[i], p.cells()[i]);

  std::ifstream in(dir / "m.bin", std::ios::binary);
  std::string data(std::istreambuf_iterator<char>(in), {});
  {
    std::ofstream out(dir / "cut.bin", std::ios::binary);
    out << data.substr(0, data.size() - 3);
  }
  EXPECT_THROW(read_mosaic_file(dir / "cut.bin"), TruncatedFileError);
  data[0] = 'Z';
  {
    std::ofstream out(dir / "magic.bin", std::ios::binary);
    out << data;
  }
  EXPECT_THROW(read_mosaic_file(dir / "magic.bin"), FormatError);
}

TEST(MosaicFileIo, PreviewShowsSampledColor) {
  Tensor img({1, 3, 2, 2});
  for (Real& v : img.plane(0, 0)) v = 1;
  const Tensor prev = mosaic_preview(mosaic(img, builtin_pattern("bayer")));
  EXPECT_EQ(prev(0, 0, 0, 1), 1);  // red site
  EXPECT_EQ(prev(0, 0, 0, 0), 0);  // green site
}

}  // namespace
}  // namespace cfanet
