#include "scene_cluster/preprocess.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <tuple>

#include <fmt/format.h>

namespace scene_cluster {

namespace {

void require_same_shape(int iw, int ih, const BinarySaliencyMask& mask) {
  if (iw != mask.width() || ih != mask.height()) {
    throw InvalidArgument(
        fmt::format("dimension mismatch: image {}x{}, mask {}x{}", iw, ih, mask.width(), mask.height()));
  }
}

// Circle offsets in clockwise order starting straight below the center.
constexpr std::array<PixelCoord, 16> kCircle{{{0, 3},
                                               {1, 3},
                                               {2, 2},
                                               {3, 1},
                                               {3, 0},
                                               {3, -1},
                                               {2, -2},
                                               {1, -3},
                                               {0, -3},
                                               {-1, -3},
                                               {-2, -2},
                                               {-3, -1},
                                               {-3, 0},
                                               {-3, 1},
                                               {-2, 2},
                                               {-1, 3}}};
constexpr int kArc = 9;

// Max over arcs of 9 contiguous circle pixels of min signed difference, for
// both polarities. A pixel is a corner at threshold t iff this exceeds t.
int segment_score(const GrayPlane& g, int x, int y) {
  const int p = g.at(x, y);
  std::array<int, 16> d{};
  for (std::size_t i = 0; i < kCircle.size(); ++i) {
    d[i] = g.at(x + kCircle[i].x, y + kCircle[i].y) - p;
  }
  int best = std::numeric_limits<int>::min();
  for (std::size_t start = 0; start < 16; ++start) {
    int bright = std::numeric_limits<int>::max();
    int dark = std::numeric_limits<int>::max();
    for (int k = 0; k < kArc; ++k) {
      const int v = d[(start + k) % 16];
      bright = std::min(bright, v);
      dark = std::min(dark, -v);
    }
    best = std::max({best, bright, dark});
  }
  return best;
}

}  // namespace

std::size_t min_component_area(int width, int height, double fraction) {
  const double a = std::ceil(fraction * static_cast<double>(width) * static_cast<double>(height) - 1e-9);
  return std::max<std::size_t>(1, static_cast<std::size_t>(std::max(a, 0.0)));
}

MaskedImage mask_salient(const RealImage& img, const BinarySaliencyMask& mask) {
  require_same_shape(img.width(), img.height(), mask);
  MaskedImage out = img;
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) {
      if (mask.salient(x, y)) {
        for (int c = 0; c < 3; ++c) out.at(x, y, c) = 0.0f;
      }
    }
  }
  return out;
}

MaskedImage mask_salient(const Image& img, const BinarySaliencyMask& mask) {
  require_same_shape(img.width(), img.height(), mask);
  return mask_salient(img.to_real(), mask);
}

std::vector<ConnectedComponent> connected_components(const BinarySaliencyMask& mask, std::size_t min_area) {
  const int w = mask.width();
  const int h = mask.height();
  std::vector<std::uint8_t> visited(static_cast<std::size_t>(w) * h, 0);
  std::vector<ConnectedComponent> out;
  std::vector<PixelCoord> stack;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const auto idx = static_cast<std::size_t>(y) * w + x;
      if (!mask.salient(x, y) || visited[idx]) continue;
      ConnectedComponent cc;
      cc.bbox = {x, y, x, y};
      visited[idx] = 1;
      stack.push_back({x, y});
      while (!stack.empty()) {
        const PixelCoord p = stack.back();
        stack.pop_back();
        cc.pixels.push_back(p);
        cc.bbox.min_x = std::min(cc.bbox.min_x, p.x);
        cc.bbox.min_y = std::min(cc.bbox.min_y, p.y);
        cc.bbox.max_x = std::max(cc.bbox.max_x, p.x);
        cc.bbox.max_y = std::max(cc.bbox.max_y, p.y);
        for (int dy = -1; dy <= 1; ++dy) {
          for (int dx = -1; dx <= 1; ++dx) {
            const int nx = p.x + dx;
            const int ny = p.y + dy;
            if (nx < 0 || ny < 0 || nx >= w || ny >= h) continue;
            const auto nidx = static_cast<std::size_t>(ny) * w + nx;
            if (visited[nidx] || !mask.salient(nx, ny)) continue;
            visited[nidx] = 1;
            stack.push_back({nx, ny});
          }
        }
      }
      cc.pixel_count = cc.pixels.size();
      if (cc.pixel_count >= min_area) {
        std::sort(cc.pixels.begin(), cc.pixels.end(),
                  [](const PixelCoord& a, const PixelCoord& b) { return std::tie(a.y, a.x) < std::tie(b.y, b.x); });
        cc.id = static_cast<int>(out.size());
        out.push_back(std::move(cc));
      }
    }
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const ConnectedComponent& a, const ConnectedComponent& b) { return a.pixel_count > b.pixel_count; });
  return out;
}

std::vector<int> fast_scores(const GrayPlane& gray, int threshold) {
  const int w = gray.width;
  const int h = gray.height;
  std::vector<int> score(static_cast<std::size_t>(w) * h, 0);
  for (int y = 3; y < h - 3; ++y) {
    for (int x = 3; x < w - 3; ++x) {
      const int s = segment_score(gray, x, y);
      if (s > threshold) score[static_cast<std::size_t>(y) * w + x] = s;
    }
  }
  return score;
}

std::vector<InterestPoint> detect_fast_corners(const GrayPlane& gray, int threshold) {
  const int w = gray.width;
  const int h = gray.height;
  std::vector<InterestPoint> out;
  if (w < 7 || h < 7) return out;
  const auto score = fast_scores(gray, threshold);
  for (int y = 3; y < h - 3; ++y) {
    for (int x = 3; x < w - 3; ++x) {
      const int s = score[static_cast<std::size_t>(y) * w + x];
      if (s == 0) continue;
      bool is_max = true;
      for (int dy = -1; dy <= 1 && is_max; ++dy) {
        for (int dx = -1; dx <= 1; ++dx) {
          if (dx == 0 && dy == 0) continue;
          const int n = score[static_cast<std::size_t>(y + dy) * w + (x + dx)];
          const bool earlier = dy < 0 || (dy == 0 && dx < 0);
          if (earlier ? n >= s : n > s) {
            is_max = false;
            break;
          }
        }
      }
      if (is_max) out.push_back({x, y, s});
    }
  }
  return out;
}

std::vector<InterestPoint> detect_interest_points(const Image& img, const Rect& region, int threshold) {
  if (region.area() == 0) {
    throw InvalidArgument("degenerate region: zero area");
  }
  auto points = detect_fast_corners(to_gray(img, region), threshold);
  for (auto& p : points) {
    p.x += region.min_x;
    p.y += region.min_y;
  }
  return points;
}

FiducialLocation locate_fiducial(const Image& img, const std::vector<ConnectedComponent>& components, int threshold) {
  if (components.empty()) {
    throw FiducialNotFound("FM not found: no salient components");
  }
  const ConnectedComponent* best = nullptr;
  std::size_t best_count = 0;
  for (const auto& cc : components) {
    const std::size_t count = detect_interest_points(img, cc.bbox, threshold).size();
    const bool better = best == nullptr || count > best_count ||
                        (count == best_count && (cc.pixel_count > best->pixel_count ||
                                                 (cc.pixel_count == best->pixel_count && cc.id < best->id)));
    if (better) {
      best = &cc;
      best_count = count;
    }
  }
  return {best->id, best->bbox, best_count};
}

Rect expand_rect(const Rect& bbox, double expansion, int width, int height) {
  if (expansion < 1.0) {
    throw InvalidArgument(fmt::format("expansion must be >= 1, got {}", expansion));
  }
  const auto scaled = [expansion](int extent) {
    return std::max(extent, static_cast<int>(std::floor(extent * expansion + 1e-9)));
  };
  const int new_w = scaled(bbox.width());
  const int new_h = scaled(bbox.height());
  const double cx = (bbox.min_x + bbox.max_x) / 2.0;
  const double cy = (bbox.min_y + bbox.max_y) / 2.0;
  const int min_x = static_cast<int>(std::floor(cx - (new_w - 1) / 2.0));
  const int min_y = static_cast<int>(std::floor(cy - (new_h - 1) / 2.0));
  return {std::max(0, min_x), std::max(0, min_y), std::min(width - 1, min_x + new_w - 1),
          std::min(height - 1, min_y + new_h - 1)};
}

MaskedImage crop_local_region(const MaskedImage& masked, const FiducialLocation& fm, double expansion) {
  return masked.crop(expand_rect(fm.bbox, expansion, masked.width(), masked.height()));
}

PreprocessResult preprocess_image(const Image& img, const BinarySaliencyMask& mask, const PreprocessParams& params) {
  PreprocessResult out;
  out.masked = mask_salient(img, mask);
  out.components = connected_components(mask, min_component_area(img.width(), img.height(), params.min_component_fraction));
  if (!out.components.empty()) {
    out.fiducial = locate_fiducial(img, out.components, params.fast_threshold);
    out.crop_rect = expand_rect(out.fiducial->bbox, params.expansion, img.width(), img.height());
    out.local_crop = out.masked.crop(*out.crop_rect);
  }
  return out;
}

}  // namespace scene_cluster
