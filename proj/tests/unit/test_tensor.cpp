#include <gtest/gtest.h>

#include <cstring>
#include <limits>

#include "fixtures.hpp"
#include "generators.hpp"
#include "scene_cluster/error.hpp"
#include "scene_cluster/tensor.hpp"

using namespace scene_cluster;

namespace {

FeatureMap random_map(sc_test::Gen& gen, std::size_t c, std::size_t h, std::size_t w) {
  std::vector<float> v(c * h * w);
  for (auto& x : v) x = static_cast<float>(gen.normal() * 3.0);
  return {c, h, w, std::move(v)};
}

}  // namespace

TEST(Tensor, HeaderLayoutIsLittleEndian) {
  const auto bytes = encode_tensor({{2, 1, 1}, {1.0f, -2.0f}});
  ASSERT_EQ(bytes.size(), 8u + 3 * 8 + 2 * 4);
  EXPECT_EQ(std::string(bytes.begin(), bytes.begin() + 4), "FTNS");
  EXPECT_EQ(bytes[4], 1);  // version
  EXPECT_EQ(bytes[5], 1);  // float32
  EXPECT_EQ(bytes[6], 3);  // ndim
  EXPECT_EQ(bytes[7], 0);
  EXPECT_EQ(bytes[8], 2);
  for (int i = 9; i < 16; ++i) EXPECT_EQ(bytes[static_cast<std::size_t>(i)], 0);
  float first = 0;
  std::memcpy(&first, &bytes[32], 4);
  EXPECT_EQ(first, 1.0f);
}

TEST(Tensor, ReadsShapeFromHeader) {
  sc_test::TempDir dir("tensor");
  sc_test::Gen gen(1);
  write_tensor(dir / "a.ftns", random_map(gen, 64, 8, 8));
  const auto m = read_tensor(dir / "a.ftns");
  EXPECT_EQ(m.channels(), 64u);
  EXPECT_EQ(m.height(), 8u);
  EXPECT_EQ(m.width(), 8u);
}

TEST(Tensor, RoundTripIsBitExact) {
  sc_test::TempDir dir("tensor_rt");
  sc_test::Gen gen(2);
  for (int t = 0; t < 30; ++t) {
    auto map = random_map(gen, static_cast<std::size_t>(gen.uniform_int(1, 9)),
                          static_cast<std::size_t>(gen.uniform_int(1, 7)), static_cast<std::size_t>(gen.uniform_int(1, 7)));
    write_tensor(dir / "x.ftns", map);
    EXPECT_EQ(read_tensor(dir / "x.ftns"), map);
  }
  // Extreme finite values and signed zero survive.
  const FeatureMap edge(1, 1, 4,
                        {std::numeric_limits<float>::max(), -std::numeric_limits<float>::denorm_min(), -0.0f, 1e-30f});
  write_tensor(dir / "e.ftns", edge);
  const auto back = read_tensor(dir / "e.ftns");
  EXPECT_EQ(std::memcmp(back.values().data(), edge.values().data(), 16), 0);
}

TEST(Tensor, AcceptsLeadingBatchDimension) {
  const auto map = feature_map_from_tensor(decode_tensor(encode_tensor({{1, 3, 2, 2}, std::vector<float>(12, 0.5f)})));
  EXPECT_EQ(map.channels(), 3u);
  EXPECT_THROW(feature_map_from_tensor({{2, 3, 2, 2}, std::vector<float>(24, 0.5f)}), InvalidArgument);
  EXPECT_THROW(feature_map_from_tensor({{6}, std::vector<float>(6, 0.5f)}), InvalidArgument);
}

TEST(Tensor, TruncatedPayloadReportsSizes) {
  auto bytes = encode_tensor({{2, 2, 2}, std::vector<float>(8, 1.0f)});
  bytes.resize(bytes.size() - 3);
  try {
    decode_tensor(bytes);
    FAIL();
  } catch (const InvalidArgument& e) {
    EXPECT_STREQ(e.what(), "expected 32 bytes, got 29");
  }
}

TEST(Tensor, RejectsBadMagicVersionAndDtype) {
  auto bytes = encode_tensor({{1, 1, 1}, {1.0f}});
  auto bad = bytes;
  bad[0] = 'X';
  EXPECT_THROW(decode_tensor(bad), InvalidArgument);
  bad = bytes;
  bad[4] = 2;
  EXPECT_THROW(decode_tensor(bad), InvalidArgument);
  bad = bytes;
  bad[5] = 7;
  EXPECT_THROW(decode_tensor(bad), InvalidArgument);
  EXPECT_THROW(decode_tensor(std::vector<std::uint8_t>{'F', 'T'}), InvalidArgument);
}

TEST(Tensor, RejectsNonFiniteValues) {
  EXPECT_THROW(FeatureMap(1, 1, 1, {std::numeric_limits<float>::quiet_NaN()}), InvalidArgument);
  EXPECT_THROW(FeatureMap(0, 1, 1, {}), InvalidArgument);
  EXPECT_THROW(FeatureMap(2, 2, 2, std::vector<float>(7)), InvalidArgument);
}

TEST(Tensor, ReadsFilesWrittenByPythonTooling) {
  const auto m = read_tensor(sc_test::data_dir() / "tiny_vgg_layer2.ftns");
  EXPECT_EQ(m.channels(), 64u);
  EXPECT_EQ(m.height(), 32u);
  EXPECT_EQ(m.width(), 32u);
}

TEST(Tensor, MissingFileErrorNamesPath) {
  try {
    read_tensor("/nonexistent/q.ftns");
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("/nonexistent/q.ftns"), std::string::npos);
  }
}
