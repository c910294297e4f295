#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string_view>
#include <vector>

namespace scene_cluster {

/// Axis-aligned pixel rectangle, inclusive on both ends.
struct Rect {
  int min_x = 0;
  int min_y = 0;
  int max_x = -1;
  int max_y = -1;

  [[nodiscard]] int width() const { return max_x - min_x + 1; }
  [[nodiscard]] int height() const { return max_y - min_y + 1; }
  [[nodiscard]] long long area() const {
    return width() <= 0 || height() <= 0 ? 0LL : static_cast<long long>(width()) * height();
  }
  [[nodiscard]] bool contains(int x, int y) const {
    return x >= min_x && x <= max_x && y >= min_y && y <= max_y;
  }
  friend bool operator==(const Rect&, const Rect&) = default;
};

/// Intersection over union of two inclusive rectangles; 0 when both are empty.
double intersection_over_union(const Rect& a, const Rect& b);

/// Row-major RGB image with real channel values (nominally in [0, 1]).
/// This is also the representation of a saliency-masked image.
class RealImage {
 public:
  RealImage() = default;
  RealImage(int width, int height);
  RealImage(int width, int height, std::vector<float> rgb);

  [[nodiscard]] int width() const { return width_; }
  [[nodiscard]] int height() const { return height_; }
  [[nodiscard]] std::span<const float> data() const { return rgb_; }
  [[nodiscard]] std::span<float> data() { return rgb_; }

  [[nodiscard]] float at(int x, int y, int c) const {
    return rgb_[(static_cast<std::size_t>(y) * width_ + x) * 3 + c];
  }
  float& at(int x, int y, int c) { return rgb_[(static_cast<std::size_t>(y) * width_ + x) * 3 + c]; }

  /// Copy of the sub-rectangle `r`, which must lie inside the image.
  [[nodiscard]] RealImage crop(const Rect& r) const;

  friend bool operator==(const RealImage&, const RealImage&) = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<float> rgb_;
};

using MaskedImage = RealImage;

/// 8-bit RGB photograph. Both sides must be at least kMinSide pixels.
class Image {
 public:
  static constexpr int kMinSide = 32;

  Image(int width, int height, std::vector<std::uint8_t> rgb);

  [[nodiscard]] int width() const { return width_; }
  [[nodiscard]] int height() const { return height_; }
  [[nodiscard]] std::span<const std::uint8_t> data() const { return rgb_; }

  [[nodiscard]] std::uint8_t at(int x, int y, int c) const {
    return rgb_[(static_cast<std::size_t>(y) * width_ + x) * 3 + c];
  }

  /// Channel values divided by 255.
  [[nodiscard]] RealImage to_real() const;

  friend bool operator==(const Image&, const Image&) = default;

 private:
  int width_;
  int height_;
  std::vector<std::uint8_t> rgb_;
};

/// Per-pixel salient (1) / non-salient (0) indicator.
class BinarySaliencyMask {
 public:
  BinarySaliencyMask(int width, int height, std::vector<std::uint8_t> values);
  BinarySaliencyMask(int width, int height);

  /// Thresholds an 8-bit gray plane: values >= 128 are salient.
  static BinarySaliencyMask from_gray(int width, int height, std::span<const std::uint8_t> gray);

  [[nodiscard]] int width() const { return width_; }
  [[nodiscard]] int height() const { return height_; }
  [[nodiscard]] std::span<const std::uint8_t> data() const { return values_; }

  [[nodiscard]] bool salient(int x, int y) const {
    return values_[static_cast<std::size_t>(y) * width_ + x] != 0;
  }
  void set(int x, int y, bool salient) {
    values_[static_cast<std::size_t>(y) * width_ + x] = salient ? 1 : 0;
  }
  [[nodiscard]] std::size_t salient_count() const;

  friend bool operator==(const BinarySaliencyMask&, const BinarySaliencyMask&) = default;

 private:
  int width_;
  int height_;
  std::vector<std::uint8_t> values_;
};

/// Single-channel 8-bit plane.
struct GrayPlane {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> values;

  [[nodiscard]] std::uint8_t at(int x, int y) const {
    return values[static_cast<std::size_t>(y) * width + x];
  }
};

/// round(0.299 R + 0.587 G + 0.114 B) over the pixels of `region`.
GrayPlane to_gray(const Image& img, const Rect& region);

Image load_image(const std::filesystem::path& path);
BinarySaliencyMask load_mask(const std::filesystem::path& path);

/// PNG encoders. Real images are quantized with round(v * 255) after clamping to [0, 1].
std::vector<std::uint8_t> encode_png(const Image& img);
std::vector<std::uint8_t> encode_png(const RealImage& img);
std::vector<std::uint8_t> encode_png(const BinarySaliencyMask& mask);

/// Decodes a PNG written by encode_png(RealImage) back into real values.
RealImage load_real_image(const std::filesystem::path& path);

/// Writes bytes through a temporary sibling file and renames it into place.
void write_file_atomic(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);
void write_file_atomic(const std::filesystem::path& path, std::string_view text);

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);

}  // namespace scene_cluster
