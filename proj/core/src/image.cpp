#include "scene_cluster/image.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <system_error>

#include <fmt/format.h>
#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include "scene_cluster/error.hpp"

namespace scene_cluster {

double intersection_over_union(const Rect& a, const Rect& b) {
  const Rect inter{std::max(a.min_x, b.min_x), std::max(a.min_y, b.min_y), std::min(a.max_x, b.max_x),
                   std::min(a.max_y, b.max_y)};
  const auto i = static_cast<double>(inter.area());
  const double u = static_cast<double>(a.area()) + static_cast<double>(b.area()) - i;
  return u > 0.0 ? i / u : 0.0;
}

RealImage::RealImage(int width, int height)
    : RealImage(width, height, std::vector<float>(static_cast<std::size_t>(std::max(width, 0)) *
                                                  static_cast<std::size_t>(std::max(height, 0)) * 3, 0.0f)) {}

RealImage::RealImage(int width, int height, std::vector<float> rgb)
    : width_(width), height_(height), rgb_(std::move(rgb)) {
  if (width <= 0 || height <= 0) {
    throw InvalidArgument(fmt::format("image dimensions must be positive, got {}x{}", width, height));
  }
  if (rgb_.size() != static_cast<std::size_t>(width) * height * 3) {
    throw InvalidArgument(
        fmt::format("pixel buffer holds {} values, expected {}", rgb_.size(), std::size_t(width) * height * 3));
  }
}

RealImage RealImage::crop(const Rect& r) const {
  if (r.area() == 0 || r.min_x < 0 || r.min_y < 0 || r.max_x >= width_ || r.max_y >= height_) {
    throw InvalidArgument(fmt::format("crop ({},{},{},{}) outside {}x{} image", r.min_x, r.min_y, r.max_x,
                                      r.max_y, width_, height_));
  }
  RealImage out(r.width(), r.height());
  for (int y = 0; y < r.height(); ++y) {
    const auto* src = &rgb_[(static_cast<std::size_t>(r.min_y + y) * width_ + r.min_x) * 3];
    std::copy_n(src, static_cast<std::size_t>(r.width()) * 3, &out.at(0, y, 0));
  }
  return out;
}

Image::Image(int width, int height, std::vector<std::uint8_t> rgb)
    : width_(width), height_(height), rgb_(std::move(rgb)) {
  if (width < kMinSide || height < kMinSide) {
    throw InvalidArgument(fmt::format("image is {}x{}, both sides must be >= {}", width, height, kMinSide));
  }
  if (rgb_.size() != static_cast<std::size_t>(width) * height * 3) {
    throw InvalidArgument(
        fmt::format("pixel buffer holds {} bytes, expected {}", rgb_.size(), std::size_t(width) * height * 3));
  }
}

RealImage Image::to_real() const {
  std::vector<float> values(rgb_.size());
  std::transform(rgb_.begin(), rgb_.end(), values.begin(),
                 [](std::uint8_t v) { return static_cast<float>(v) / 255.0f; });
  return {width_, height_, std::move(values)};
}

BinarySaliencyMask::BinarySaliencyMask(int width, int height, std::vector<std::uint8_t> values)
    : width_(width), height_(height), values_(std::move(values)) {
  if (width <= 0 || height <= 0) {
    throw InvalidArgument(fmt::format("mask dimensions must be positive, got {}x{}", width, height));
  }
  if (values_.size() != static_cast<std::size_t>(width) * height) {
    throw InvalidArgument(fmt::format("mask holds {} values, expected {}", values_.size(), std::size_t(width) * height));
  }
  if (std::any_of(values_.begin(), values_.end(), [](std::uint8_t v) { return v > 1; })) {
    throw InvalidArgument("mask values must be 0 or 1");
  }
}

BinarySaliencyMask::BinarySaliencyMask(int width, int height)
    : BinarySaliencyMask(width, height,
                         std::vector<std::uint8_t>(static_cast<std::size_t>(std::max(width, 0)) *
                                                   static_cast<std::size_t>(std::max(height, 0)))) {}

BinarySaliencyMask BinarySaliencyMask::from_gray(int width, int height, std::span<const std::uint8_t> gray) {
  std::vector<std::uint8_t> values(gray.size());
  std::transform(gray.begin(), gray.end(), values.begin(), [](std::uint8_t v) { return v >= 128 ? 1 : 0; });
  return {width, height, std::move(values)};
}

std::size_t BinarySaliencyMask::salient_count() const {
  return static_cast<std::size_t>(std::count(values_.begin(), values_.end(), std::uint8_t{1}));
}

GrayPlane to_gray(const Image& img, const Rect& region) {
  if (region.area() == 0 || region.min_x < 0 || region.min_y < 0 || region.max_x >= img.width() ||
      region.max_y >= img.height()) {
    throw InvalidArgument(fmt::format("region ({},{},{},{}) is empty or outside {}x{} image", region.min_x,
                                      region.min_y, region.max_x, region.max_y, img.width(), img.height()));
  }
  GrayPlane g{region.width(), region.height(), {}};
  g.values.resize(static_cast<std::size_t>(g.width) * g.height);
  for (int y = 0; y < g.height; ++y) {
    for (int x = 0; x < g.width; ++x) {
      const int sx = region.min_x + x;
      const int sy = region.min_y + y;
      const double lum = 0.299 * img.at(sx, sy, 0) + 0.587 * img.at(sx, sy, 1) + 0.114 * img.at(sx, sy, 2);
      g.values[static_cast<std::size_t>(y) * g.width + x] =
          static_cast<std::uint8_t>(std::clamp(std::lround(lum), 0L, 255L));
    }
  }
  return g;
}

namespace {

cv::Mat read_mat(const std::filesystem::path& path, int flags) {
  const auto bytes = read_file_bytes(path);
  cv::Mat mat = cv::imdecode(cv::Mat(1, static_cast<int>(bytes.size()), CV_8UC1, const_cast<std::uint8_t*>(bytes.data())), flags);
  if (mat.empty()) {
    throw IoError(fmt::format("cannot decode image '{}'", path.string()));
  }
  if (mat.depth() != CV_8U) {
    throw IoError(fmt::format("'{}' is not an 8-bit image", path.string()));
  }
  return mat;
}

std::vector<std::uint8_t> encode_mat(const cv::Mat& mat) {
  std::vector<std::uint8_t> out;
  if (!cv::imencode(".png", mat, out)) {
    throw IoError("PNG encoding failed");
  }
  return out;
}

}  // namespace

Image load_image(const std::filesystem::path& path) {
  cv::Mat bgr = read_mat(path, cv::IMREAD_COLOR);
  cv::Mat rgb;
  cv::cvtColor(bgr, rgb, cv::COLOR_BGR2RGB);
  std::vector<std::uint8_t> data(rgb.total() * 3);
  for (int y = 0; y < rgb.rows; ++y) {
    std::copy_n(rgb.ptr<std::uint8_t>(y), static_cast<std::size_t>(rgb.cols) * 3, &data[std::size_t(y) * rgb.cols * 3]);
  }
  return {rgb.cols, rgb.rows, std::move(data)};
}

BinarySaliencyMask load_mask(const std::filesystem::path& path) {
  cv::Mat gray = read_mat(path, cv::IMREAD_GRAYSCALE);
  std::vector<std::uint8_t> data(gray.total());
  for (int y = 0; y < gray.rows; ++y) {
    std::copy_n(gray.ptr<std::uint8_t>(y), gray.cols, &data[std::size_t(y) * gray.cols]);
  }
  return BinarySaliencyMask::from_gray(gray.cols, gray.rows, data);
}

RealImage load_real_image(const std::filesystem::path& path) {
  cv::Mat bgr = read_mat(path, cv::IMREAD_COLOR);
  RealImage out(bgr.cols, bgr.rows);
  for (int y = 0; y < bgr.rows; ++y) {
    const auto* row = bgr.ptr<std::uint8_t>(y);
    for (int x = 0; x < bgr.cols; ++x) {
      for (int c = 0; c < 3; ++c) {
        out.at(x, y, c) = static_cast<float>(row[x * 3 + (2 - c)]) / 255.0f;
      }
    }
  }
  return out;
}

std::vector<std::uint8_t> encode_png(const Image& img) {
  cv::Mat bgr(img.height(), img.width(), CV_8UC3);
  for (int y = 0; y < img.height(); ++y) {
    auto* row = bgr.ptr<std::uint8_t>(y);
    for (int x = 0; x < img.width(); ++x) {
      for (int c = 0; c < 3; ++c) row[x * 3 + (2 - c)] = img.at(x, y, c);
    }
  }
  return encode_mat(bgr);
}

std::vector<std::uint8_t> encode_png(const RealImage& img) {
  cv::Mat bgr(img.height(), img.width(), CV_8UC3);
  for (int y = 0; y < img.height(); ++y) {
    auto* row = bgr.ptr<std::uint8_t>(y);
    for (int x = 0; x < img.width(); ++x) {
      for (int c = 0; c < 3; ++c) {
        const float v = std::clamp(img.at(x, y, c), 0.0f, 1.0f);
        row[x * 3 + (2 - c)] = static_cast<std::uint8_t>(std::lround(v * 255.0f));
      }
    }
  }
  return encode_mat(bgr);
}

std::vector<std::uint8_t> encode_png(const BinarySaliencyMask& mask) {
  cv::Mat gray(mask.height(), mask.width(), CV_8UC1);
  for (int y = 0; y < mask.height(); ++y) {
    auto* row = gray.ptr<std::uint8_t>(y);
    for (int x = 0; x < mask.width(); ++x) row[x] = mask.salient(x, y) ? 255 : 0;
  }
  return encode_mat(gray);
}

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw IoError(fmt::format("cannot open '{}'", path.string()));
  }
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file_atomic(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  if (path.has_parent_path()) {
    std::filesystem::create_directories(path.parent_path());
  }
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) {
      throw IoError(fmt::format("cannot write '{}'", tmp.string()));
    }
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) {
      throw IoError(fmt::format("short write to '{}'", tmp.string()));
    }
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    throw IoError(fmt::format("cannot rename '{}' to '{}': {}", tmp.string(), path.string(), ec.message()));
  }
}

void write_file_atomic(const std::filesystem::path& path, std::string_view text) {
  write_file_atomic(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

}  // namespace scene_cluster
