#include "scene_cluster/tensor.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <limits>

#include <fmt/format.h>

#include "scene_cluster/error.hpp"
#include "scene_cluster/image.hpp"

namespace scene_cluster {

namespace {

constexpr std::uint8_t kMagic[4] = {'F', 'T', 'N', 'S'};
constexpr std::uint8_t kVersion = 1;
constexpr std::uint8_t kFloat32 = 1;
constexpr std::size_t kPreamble = 8;

void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint64_t get_u64(const std::uint8_t* p) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(p[i]) << (8 * i);
  return v;
}

}  // namespace

FeatureMap::FeatureMap(std::size_t channels, std::size_t height, std::size_t width, std::vector<float> values)
    : channels_(channels), height_(height), width_(width), values_(std::move(values)) {
  if (channels == 0) {
    throw InvalidArgument("feature map needs at least one channel");
  }
  if (values_.size() != channels * height * width) {
    throw InvalidArgument(fmt::format("feature map of shape ({}, {}, {}) holds {} values", channels, height, width,
                                      values_.size()));
  }
  for (float v : values_) {
    if (!std::isfinite(v)) {
      throw InvalidArgument("feature map contains non-finite values");
    }
  }
}

std::vector<std::uint8_t> encode_tensor(const Tensor& t) {
  if (t.dims.size() > std::numeric_limits<std::uint8_t>::max()) {
    throw InvalidArgument("too many tensor dimensions");
  }
  std::uint64_t count = 1;
  for (auto d : t.dims) count *= d;
  if (count != t.values.size()) {
    throw InvalidArgument(fmt::format("tensor dims describe {} values but {} were given", count, t.values.size()));
  }
  std::vector<std::uint8_t> out(std::begin(kMagic), std::end(kMagic));
  out.push_back(kVersion);
  out.push_back(kFloat32);
  out.push_back(static_cast<std::uint8_t>(t.dims.size()));
  out.push_back(0);
  for (auto d : t.dims) put_u64(out, d);
  out.reserve(out.size() + t.values.size() * 4);
  for (float v : t.values) {
    const auto bits = std::bit_cast<std::uint32_t>(v);
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(bits >> (8 * i)));
  }
  return out;
}

Tensor decode_tensor(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < kPreamble || std::memcmp(bytes.data(), kMagic, 4) != 0) {
    throw InvalidArgument("bad magic: not an FTNS tensor");
  }
  if (bytes[4] != kVersion) {
    throw InvalidArgument(fmt::format("unsupported tensor version {}", bytes[4]));
  }
  if (bytes[5] != kFloat32) {
    throw InvalidArgument(fmt::format("unsupported tensor dtype code {}", bytes[5]));
  }
  const std::size_t ndim = bytes[6];
  const std::size_t header = kPreamble + 8 * ndim;
  if (bytes.size() < header) {
    throw InvalidArgument(fmt::format("expected {} header bytes, got {}", header, bytes.size()));
  }
  Tensor t;
  std::uint64_t count = 1;
  for (std::size_t i = 0; i < ndim; ++i) {
    t.dims.push_back(get_u64(bytes.data() + kPreamble + 8 * i));
    count *= t.dims.back();
  }
  const std::uint64_t expected = count * 4;
  const std::uint64_t got = bytes.size() - header;
  if (got != expected) {
    throw InvalidArgument(fmt::format("expected {} bytes, got {}", expected, got));
  }
  t.values.resize(count);
  const std::uint8_t* p = bytes.data() + header;
  for (std::size_t i = 0; i < count; ++i, p += 4) {
    const std::uint32_t bits = std::uint32_t(p[0]) | std::uint32_t(p[1]) << 8 | std::uint32_t(p[2]) << 16 |
                               std::uint32_t(p[3]) << 24;
    t.values[i] = std::bit_cast<float>(bits);
  }
  return t;
}

FeatureMap feature_map_from_tensor(const Tensor& t) {
  auto dims = t.dims;
  if (dims.size() == 4 && dims[0] == 1) dims.erase(dims.begin());
  if (dims.size() != 3) {
    throw InvalidArgument(fmt::format("feature tensor must have shape (C, H, W), got {} dims", t.dims.size()));
  }
  return {dims[0], dims[1], dims[2], t.values};
}

FeatureMap read_tensor(const std::filesystem::path& path) {
  const auto bytes = read_file_bytes(path);
  try {
    return feature_map_from_tensor(decode_tensor(bytes));
  } catch (const InvalidArgument& e) {
    throw InvalidArgument(fmt::format("{}: {}", path.string(), e.what()));
  }
}

void write_tensor(const std::filesystem::path& path, const FeatureMap& map) {
  Tensor t{{map.channels(), map.height(), map.width()}, {map.values().begin(), map.values().end()}};
  write_file_atomic(path, encode_tensor(t));
}

}  // namespace scene_cluster
