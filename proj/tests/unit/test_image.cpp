#include <gtest/gtest.h>

#include "fixtures.hpp"
#include "generators.hpp"
#include "scene_cluster/error.hpp"
#include "scene_cluster/image.hpp"

using namespace scene_cluster;

TEST(Rect, AreaAndContains) {
  const Rect r{2, 3, 5, 4};
  EXPECT_EQ(r.width(), 4);
  EXPECT_EQ(r.height(), 2);
  EXPECT_EQ(r.area(), 8);
  EXPECT_TRUE(r.contains(2, 3));
  EXPECT_TRUE(r.contains(5, 4));
  EXPECT_FALSE(r.contains(6, 4));
  EXPECT_EQ(Rect{}.area(), 0);
}

TEST(Rect, IntersectionOverUnion) {
  EXPECT_DOUBLE_EQ(intersection_over_union({0, 0, 9, 9}, {0, 0, 9, 9}), 1.0);
  EXPECT_DOUBLE_EQ(intersection_over_union({0, 0, 9, 9}, {10, 10, 19, 19}), 0.0);
  // 5x10 overlap of two 10x10 boxes: 50 / 150.
  EXPECT_NEAR(intersection_over_union({0, 0, 9, 9}, {5, 0, 14, 9}), 1.0 / 3.0, 1e-12);
  EXPECT_DOUBLE_EQ(intersection_over_union(Rect{}, Rect{}), 0.0);
}

TEST(Image, RejectsTinyOrMisSizedBuffers) {
  EXPECT_THROW(Image(31, 40, std::vector<std::uint8_t>(31 * 40 * 3)), InvalidArgument);
  EXPECT_THROW(Image(32, 32, std::vector<std::uint8_t>(10)), InvalidArgument);
  EXPECT_NO_THROW(Image(32, 32, std::vector<std::uint8_t>(32 * 32 * 3)));
}

TEST(Image, ToRealDividesBy255) {
  std::vector<std::uint8_t> rgb(32 * 32 * 3, 0);
  rgb[0] = 255;
  rgb[1] = 51;
  const Image img(32, 32, rgb);
  const auto real = img.to_real();
  EXPECT_FLOAT_EQ(real.at(0, 0, 0), 1.0f);
  EXPECT_FLOAT_EQ(real.at(0, 0, 1), 0.2f);
  EXPECT_FLOAT_EQ(real.at(0, 0, 2), 0.0f);
}

TEST(RealImage, CropCopiesRegion) {
  sc_test::Gen gen(3);
  const auto img = gen.real_image(10, 8);
  const auto c = img.crop({2, 1, 4, 5});
  ASSERT_EQ(c.width(), 3);
  ASSERT_EQ(c.height(), 5);
  for (int y = 0; y < 5; ++y) {
    for (int x = 0; x < 3; ++x) {
      for (int ch = 0; ch < 3; ++ch) EXPECT_EQ(c.at(x, y, ch), img.at(x + 2, y + 1, ch));
    }
  }
  EXPECT_THROW(static_cast<void>(img.crop({5, 5, 10, 7})), InvalidArgument);
}

TEST(Mask, FromGrayThresholdsAt128) {
  std::vector<std::uint8_t> gray{0, 127, 128, 255};
  const auto m = BinarySaliencyMask::from_gray(2, 2, gray);
  EXPECT_FALSE(m.salient(0, 0));
  EXPECT_FALSE(m.salient(1, 0));
  EXPECT_TRUE(m.salient(0, 1));
  EXPECT_TRUE(m.salient(1, 1));
  EXPECT_EQ(m.salient_count(), 2u);
}

TEST(Gray, UsesRoundedLumaWeights) {
  std::vector<std::uint8_t> rgb(32 * 32 * 3, 0);
  rgb[0] = 200;
  rgb[1] = 100;
  rgb[2] = 50;
  const Image img(32, 32, rgb);
  const auto g = to_gray(img, {0, 0, 1, 1});
  ASSERT_EQ(g.width, 2);
  // 0.299*200 + 0.587*100 + 0.114*50 = 124.2
  EXPECT_EQ(g.at(0, 0), 124);
  EXPECT_EQ(g.at(1, 0), 0);
}

TEST(Png, RoundTripsImagesMasksAndRealImages) {
  sc_test::TempDir dir("png");
  sc_test::Gen gen(11);
  const auto img = gen.image(40, 33);
  write_file_atomic(dir / "a.png", encode_png(img));
  EXPECT_EQ(load_image(dir / "a.png"), img);

  const auto mask = gen.mask(40, 33, 0.3);
  write_file_atomic(dir / "m.png", encode_png(mask));
  EXPECT_EQ(load_mask(dir / "m.png"), mask);

  // Values that are multiples of 1/255 survive exactly.
  const auto real = img.to_real();
  write_file_atomic(dir / "r.png", encode_png(real));
  EXPECT_EQ(load_real_image(dir / "r.png"), real);
}

TEST(Png, MissingFileIsAnIoError) {
  EXPECT_THROW(load_image("/nonexistent/x.png"), IoError);
  EXPECT_THROW(read_file_bytes("/nonexistent/x.bin"), IoError);
}

TEST(Files, AtomicWriteReplacesContent) {
  sc_test::TempDir dir("atomic");
  write_file_atomic(dir / "f.txt", std::string_view("first"));
  write_file_atomic(dir / "f.txt", std::string_view("second"));
  const auto bytes = read_file_bytes(dir / "f.txt");
  EXPECT_EQ(std::string(bytes.begin(), bytes.end()), "second");
  std::size_t files = 0;
  for ([[maybe_unused]] const auto& e : std::filesystem::directory_iterator(dir.path())) ++files;
  EXPECT_EQ(files, 1u);
}
