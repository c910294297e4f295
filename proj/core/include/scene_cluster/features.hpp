#pragma once

#include <array>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "scene_cluster/image.hpp"
#include "scene_cluster/preprocess.hpp"
#include "scene_cluster/tensor.hpp"

namespace scene_cluster {

/// Pooled activation vector (a global or local image descriptor).
struct FeatureVector {
  std::vector<float> values;

  [[nodiscard]] std::size_t dim() const { return values.size(); }
  friend bool operator==(const FeatureVector&, const FeatureVector&) = default;
};

/// Per-channel spatial mean of `f`.
FeatureVector global_average_pool(const FeatureMap& f);

enum class Scope { global, local };
std::string_view to_string(Scope s);
Scope parse_scope(std::string_view name);

/// VGG16 conv layers that feed a max-pool, in network order.
inline constexpr std::array<int, 5> kPrePoolLayers{2, 4, 7, 10, 13};
inline constexpr std::array<std::size_t, 5> kPrePoolChannels{64, 128, 256, 512, 512};

bool is_pre_pool_layer(int layer);
/// 1-based VGG block index of a pre-pool layer.
int block_of_layer(int layer);

/// `<image_id>.<scope>.<layer>.ftns`
std::string tensor_file_name(std::string_view image_id, Scope scope, int layer);

/// One line of an exporter input list: `<image_id>\t<scope>\t<path>`.
struct ExportListEntry {
  std::string image_id;
  Scope scope = Scope::global;
  std::filesystem::path path;
  friend bool operator==(const ExportListEntry&, const ExportListEntry&) = default;
};

/// Blank lines are skipped; relative paths resolve against base_dir.
std::vector<ExportListEntry> parse_export_list(std::string_view text, const std::filesystem::path& base_dir = {});
std::string format_export_list(std::span<const ExportListEntry> entries);

enum class Backend { precomputed, inference };
enum class InferenceEngine { random_projection, onnx };

struct ExtractorSpec {
  Backend backend = Backend::precomputed;
  InferenceEngine engine = InferenceEngine::random_projection;
  int layer = 2;
  int input_width = 224;
  int input_height = 224;
  /// Precomputed backend: directory searched for `<participant>/<file>` then `<file>`.
  std::filesystem::path precomputed_dir;
  /// ONNX engine: serialized network.
  std::filesystem::path model_path;
  /// Random-projection engine: weight seed.
  std::uint64_t projection_seed = 0;
};

struct ExtractionRequest {
  std::string_view participant_id;
  std::string_view image_id;
  Scope scope = Scope::global;
  int layer = 2;
  const MaskedImage* image = nullptr;  // unused by the precomputed backend
};

/// Produces the activation map of one pre-pool conv layer. Instances are
/// single-owner: one call in flight at a time.
class FeatureExtractor {
 public:
  virtual ~FeatureExtractor() = default;
  virtual FeatureMap extract(const ExtractionRequest& request) = 0;
};

class PrecomputedExtractor final : public FeatureExtractor {
 public:
  explicit PrecomputedExtractor(std::filesystem::path dir);
  FeatureMap extract(const ExtractionRequest& request) override;
  /// Path the request resolves to, or nullopt when no file exists.
  [[nodiscard]] std::optional<std::filesystem::path> locate(const ExtractionRequest& request) const;

 private:
  std::filesystem::path dir_;
};

/// Deterministic stand-in for a pretrained CNN: for block b the normalized
/// input is average-pooled by 2^(b-1), then a fixed Gaussian projection of
/// each 3x3x3 neighbourhood to the block's VGG channel count, plus bias and ReLU.
class RandomProjectionExtractor final : public FeatureExtractor {
 public:
  RandomProjectionExtractor(int input_width, int input_height, std::uint64_t seed);
  FeatureMap extract(const ExtractionRequest& request) override;

 private:
  struct Weights {
    std::size_t channels;
    std::vector<float> kernel;  // channels x 27
    std::vector<float> bias;
  };
  const Weights& weights_for(int layer);

  int input_width_;
  int input_height_;
  std::uint64_t seed_;
  std::array<std::unique_ptr<Weights>, 5> weights_;
};

/// Runs an ONNX network through OpenCV's DNN module and returns the output
/// of the requested conv layer (after its ReLU when one follows).
class OnnxExtractor final : public FeatureExtractor {
 public:
  OnnxExtractor(const std::filesystem::path& model_path, int input_width, int input_height);
  ~OnnxExtractor() override;
  OnnxExtractor(const OnnxExtractor&) = delete;
  OnnxExtractor& operator=(const OnnxExtractor&) = delete;

  FeatureMap extract(const ExtractionRequest& request) override;
  /// Name of the network layer whose output is returned for `layer`.
  [[nodiscard]] std::string output_layer_name(int layer) const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

std::unique_ptr<FeatureExtractor> make_extractor(const ExtractorSpec& spec);

/// Resize to (width, height) with bilinear interpolation, then per-channel
/// ImageNet mean/std normalization. Output is planar (3 x height x width).
std::vector<float> normalize_for_network(const RealImage& img, int width, int height);

/// Global and local descriptors of one photo. Without a fiducial the local
/// descriptor is the global one.
std::pair<FeatureVector, FeatureVector> compute_features(FeatureExtractor& extractor, std::string_view participant_id,
                                                         std::string_view image_id, const MaskedImage& masked,
                                                         const MaskedImage* local_crop, int layer);

/// Downscales the original photo to side x side RGB and flattens it
/// (row-major, interleaved channels, values in [0, 1]).
FeatureVector downscaled_pixels(const Image& img, int side = 32);

}  // namespace scene_cluster
