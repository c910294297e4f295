#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "scene_cluster/error.hpp"
#include "scene_cluster/image.hpp"

namespace scene_cluster {

struct PixelCoord {
  int x;
  int y;
  friend auto operator<=>(const PixelCoord&, const PixelCoord&) = default;
};

/// Maximal 8-connected salient region.
struct ConnectedComponent {
  int id = 0;
  std::size_t pixel_count = 0;
  Rect bbox;
  std::vector<PixelCoord> pixels;  // scan order
};

struct InterestPoint {
  int x;
  int y;
  int score;  // largest t for which the segment test still passes strictly
  friend bool operator==(const InterestPoint&, const InterestPoint&) = default;
};

struct FiducialLocation {
  int component_id;
  Rect bbox;
  std::size_t interest_point_count;
};

/// Raised by locate_fiducial when there is no candidate component.
class FiducialNotFound : public Error {
 public:
  using Error::Error;
};

struct PreprocessParams {
  int fast_threshold = 20;
  /// Fraction of image pixels below which components are discarded as speckle.
  double min_component_fraction = 0.0005;
  double expansion = 2.0;
};

/// Smallest kept component size for a width x height mask: ceil(fraction * w * h), at least 1.
std::size_t min_component_area(int width, int height, double fraction);

/// Zeroes every salient pixel; other pixels pass through unchanged.
MaskedImage mask_salient(const RealImage& img, const BinarySaliencyMask& mask);
MaskedImage mask_salient(const Image& img, const BinarySaliencyMask& mask);

/// 8-connected components of the salient pixels with at least `min_area`
/// pixels. Ids number the kept components in raster order of their first
/// pixel; the result is sorted by descending pixel_count, then ascending id.
std::vector<ConnectedComponent> connected_components(const BinarySaliencyMask& mask, std::size_t min_area = 1);

/// Row-major FAST-9 segment-test scores: for pixels at least 3 inside the
/// plane, the max over 9-pixel arcs of the 16-pixel radius-3 circle of the min
/// signed difference to the center (either polarity), kept when it exceeds
/// `threshold`; 0 elsewhere.
std::vector<int> fast_scores(const GrayPlane& gray, int threshold);

/// Corners surviving 3x3 non-maximum suppression over fast_scores. A corner
/// must strictly beat neighbours earlier in raster order and at least tie
/// later ones, so every plateau of equal maxima keeps its first pixel.
/// Coordinates are plane-relative.
std::vector<InterestPoint> detect_fast_corners(const GrayPlane& gray, int threshold);

/// Runs detect_fast_corners on the grayscale pixels of `region` in the
/// original image; coordinates are returned in image space.
std::vector<InterestPoint> detect_interest_points(const Image& img, const Rect& region, int threshold = 20);

/// The component whose bbox holds the most interest points. Ties go to the
/// larger component, then to the smaller id.
FiducialLocation locate_fiducial(const Image& img, const std::vector<ConnectedComponent>& components,
                                 int threshold = 20);

/// The rectangle `bbox` scaled by `expansion` about its center, clipped to
/// a width x height image.
Rect expand_rect(const Rect& bbox, double expansion, int width, int height);

MaskedImage crop_local_region(const MaskedImage& masked, const FiducialLocation& fm, double expansion = 2.0);

/// Everything the feature stage needs for one photo.
struct PreprocessResult {
  MaskedImage masked;
  std::vector<ConnectedComponent> components;
  std::optional<FiducialLocation> fiducial;
  std::optional<Rect> crop_rect;
  std::optional<MaskedImage> local_crop;  // absent when no fiducial was found
};

PreprocessResult preprocess_image(const Image& img, const BinarySaliencyMask& mask, const PreprocessParams& params);

}  // namespace scene_cluster
