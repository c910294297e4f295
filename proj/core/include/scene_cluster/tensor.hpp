#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace scene_cluster {

/// Activation map of one conv layer: channels x height x width, row-major.
class FeatureMap {
 public:
  FeatureMap() = default;
  FeatureMap(std::size_t channels, std::size_t height, std::size_t width, std::vector<float> values);

  [[nodiscard]] std::size_t channels() const { return channels_; }
  [[nodiscard]] std::size_t height() const { return height_; }
  [[nodiscard]] std::size_t width() const { return width_; }
  [[nodiscard]] std::span<const float> values() const { return values_; }
  [[nodiscard]] std::span<const float> channel(std::size_t c) const {
    return std::span<const float>(values_).subspan(c * height_ * width_, height_ * width_);
  }

  friend bool operator==(const FeatureMap&, const FeatureMap&) = default;

 private:
  std::size_t channels_ = 0;
  std::size_t height_ = 0;
  std::size_t width_ = 0;
  std::vector<float> values_;
};

/// Interchange tensor: little-endian "FTNS" magic, u8 version (1), u8 dtype
/// (1 = float32), u8 ndim, u8 pad (0), ndim x u64 dims, row-major payload.
struct Tensor {
  std::vector<std::uint64_t> dims;
  std::vector<float> values;
};

std::vector<std::uint8_t> encode_tensor(const Tensor& t);
Tensor decode_tensor(std::span<const std::uint8_t> bytes);

/// Reads a tensor file as a feature map. Accepts (C, H, W) and (1, C, H, W).
FeatureMap read_tensor(const std::filesystem::path& path);
FeatureMap feature_map_from_tensor(const Tensor& t);
void write_tensor(const std::filesystem::path& path, const FeatureMap& map);

}  // namespace scene_cluster
