#include "scene_cluster/features.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include <fmt/format.h>
#include <opencv2/dnn.hpp>
#include <opencv2/imgproc.hpp>

#include "scene_cluster/error.hpp"

namespace scene_cluster {

FeatureVector global_average_pool(const FeatureMap& f) {
  const std::size_t spatial = f.height() * f.width();
  if (spatial == 0) {
    throw InvalidArgument("cannot pool a feature map with empty spatial extent");
  }
  FeatureVector out;
  out.values.reserve(f.channels());
  for (std::size_t c = 0; c < f.channels(); ++c) {
    double sum = 0.0;
    for (float v : f.channel(c)) sum += v;
    out.values.push_back(static_cast<float>(sum / static_cast<double>(spatial)));
  }
  return out;
}

std::string_view to_string(Scope s) { return s == Scope::global ? "global" : "local"; }

Scope parse_scope(std::string_view name) {
  if (name == "global") return Scope::global;
  if (name == "local") return Scope::local;
  throw InvalidArgument(fmt::format("unknown scope '{}'", name));
}

std::vector<ExportListEntry> parse_export_list(std::string_view text, const std::filesystem::path& base_dir) {
  std::vector<ExportListEntry> out;
  std::size_t line_no = 0;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    auto line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;
    const auto t1 = line.find('\t');
    const auto t2 = t1 == std::string_view::npos ? t1 : line.find('\t', t1 + 1);
    if (t2 == std::string_view::npos || line.find('\t', t2 + 1) != std::string_view::npos) {
      throw InvalidArgument(fmt::format("export list line {}: expected 3 tab-separated fields", line_no));
    }
    ExportListEntry e;
    e.image_id = std::string(line.substr(0, t1));
    try {
      e.scope = parse_scope(line.substr(t1 + 1, t2 - t1 - 1));
    } catch (const InvalidArgument& err) {
      throw InvalidArgument(fmt::format("export list line {}: {}", line_no, err.what()));
    }
    e.path = std::filesystem::path(std::string(line.substr(t2 + 1)));
    if (e.image_id.empty() || e.path.empty()) {
      throw InvalidArgument(fmt::format("export list line {}: empty field", line_no));
    }
    if (e.path.is_relative() && !base_dir.empty()) e.path = base_dir / e.path;
    out.push_back(std::move(e));
  }
  return out;
}

std::string format_export_list(std::span<const ExportListEntry> entries) {
  std::string out;
  for (const auto& e : entries) out += fmt::format("{}\t{}\t{}\n", e.image_id, to_string(e.scope), e.path.string());
  return out;
}

bool is_pre_pool_layer(int layer) {
  return std::find(kPrePoolLayers.begin(), kPrePoolLayers.end(), layer) != kPrePoolLayers.end();
}

int block_of_layer(int layer) {
  const auto it = std::find(kPrePoolLayers.begin(), kPrePoolLayers.end(), layer);
  if (it == kPrePoolLayers.end()) {
    throw InvalidArgument(fmt::format("layer {} is not one of the pre-pool conv layers 2, 4, 7, 10, 13", layer));
  }
  return static_cast<int>(it - kPrePoolLayers.begin()) + 1;
}

std::string tensor_file_name(std::string_view image_id, Scope scope, int layer) {
  return fmt::format("{}.{}.{}.ftns", image_id, to_string(scope), layer);
}

namespace {

void check_layer_channels(int layer, std::size_t channels) {
  if (layer == 2 && channels != 64) {
    throw InvalidArgument(fmt::format("network/layer mismatch: layer 2 must have 64 channels, got {}", channels));
  }
}

constexpr std::array<float, 3> kImagenetMean{0.485f, 0.456f, 0.406f};
constexpr std::array<float, 3> kImagenetStd{0.229f, 0.224f, 0.225f};

// Portable standard normal draws (std::normal_distribution is implementation-defined).
class GaussianStream {
 public:
  explicit GaussianStream(std::uint64_t seed) : engine_(seed) {}
  double next() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = 0.0;
    do {
      u1 = uniform();
    } while (u1 <= 0.0);
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    spare_ = r * std::sin(2.0 * std::numbers::pi * u2);
    has_spare_ = true;
    return r * std::cos(2.0 * std::numbers::pi * u2);
  }

 private:
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace

std::vector<float> normalize_for_network(const RealImage& img, int width, int height) {
  if (width <= 0 || height <= 0) {
    throw InvalidArgument(fmt::format("network input size must be positive, got {}x{}", width, height));
  }
  cv::Mat src(img.height(), img.width(), CV_32FC3, const_cast<float*>(img.data().data()));
  cv::Mat resized;
  if (src.cols == width && src.rows == height) {
    resized = src;
  } else {
    cv::resize(src, resized, cv::Size(width, height), 0.0, 0.0, cv::INTER_LINEAR);
  }
  std::vector<float> planar(static_cast<std::size_t>(3) * width * height);
  const std::size_t plane = static_cast<std::size_t>(width) * height;
  for (int y = 0; y < height; ++y) {
    const auto* row = resized.ptr<float>(y);
    for (int x = 0; x < width; ++x) {
      for (int c = 0; c < 3; ++c) {
        planar[c * plane + static_cast<std::size_t>(y) * width + x] = (row[x * 3 + c] - kImagenetMean[c]) / kImagenetStd[c];
      }
    }
  }
  return planar;
}

PrecomputedExtractor::PrecomputedExtractor(std::filesystem::path dir) : dir_(std::move(dir)) {}

std::optional<std::filesystem::path> PrecomputedExtractor::locate(const ExtractionRequest& request) const {
  const auto name = tensor_file_name(request.image_id, request.scope, request.layer);
  for (const auto& candidate : {dir_ / std::string(request.participant_id) / name, dir_ / name}) {
    if (std::filesystem::is_regular_file(candidate)) return candidate;
  }
  return std::nullopt;
}

FeatureMap PrecomputedExtractor::extract(const ExtractionRequest& request) {
  const auto path = locate(request);
  if (!path) {
    throw IoError(fmt::format("missing tensor file for (image_id={}, scope={}, layer={}) under '{}'", request.image_id,
                              to_string(request.scope), request.layer, dir_.string()));
  }
  auto map = read_tensor(*path);
  check_layer_channels(request.layer, map.channels());
  return map;
}

RandomProjectionExtractor::RandomProjectionExtractor(int input_width, int input_height, std::uint64_t seed)
    : input_width_(input_width), input_height_(input_height), seed_(seed) {
  if (input_width <= 0 || input_height <= 0) {
    throw InvalidArgument("random-projection input size must be positive");
  }
}

const RandomProjectionExtractor::Weights& RandomProjectionExtractor::weights_for(int layer) {
  const int block = block_of_layer(layer);
  auto& slot = weights_[block - 1];
  if (!slot) {
    const std::size_t channels = kPrePoolChannels[block - 1];
    GaussianStream rng(seed_ * 0x9E3779B97F4A7C15ULL + static_cast<std::uint64_t>(layer));
    auto w = std::make_unique<Weights>();
    w->channels = channels;
    w->kernel.resize(channels * 27);
    w->bias.resize(channels);
    const double scale = std::sqrt(2.0 / 27.0);
    for (auto& k : w->kernel) k = static_cast<float>(rng.next() * scale);
    for (auto& b : w->bias) b = static_cast<float>(rng.next() * 0.1);
    slot = std::move(w);
  }
  return *slot;
}

FeatureMap RandomProjectionExtractor::extract(const ExtractionRequest& request) {
  if (request.image == nullptr) {
    throw InvalidArgument("random-projection extractor needs image pixels");
  }
  const Weights& w = weights_for(request.layer);
  const int pool = 1 << (block_of_layer(request.layer) - 1);
  const auto input = normalize_for_network(*request.image, input_width_, input_height_);
  const int ow = std::max(1, input_width_ / pool);
  const int oh = std::max(1, input_height_ / pool);
  const std::size_t in_plane = static_cast<std::size_t>(input_width_) * input_height_;

  // Average-pool each channel to the block's resolution.
  std::vector<float> pooled(static_cast<std::size_t>(3) * ow * oh, 0.0f);
  for (int c = 0; c < 3; ++c) {
    for (int y = 0; y < oh; ++y) {
      for (int x = 0; x < ow; ++x) {
        double sum = 0.0;
        int n = 0;
        for (int py = y * pool; py < std::min(input_height_, (y + 1) * pool); ++py) {
          for (int px = x * pool; px < std::min(input_width_, (x + 1) * pool); ++px) {
            sum += input[c * in_plane + static_cast<std::size_t>(py) * input_width_ + px];
            ++n;
          }
        }
        pooled[(static_cast<std::size_t>(c) * oh + y) * ow + x] = static_cast<float>(sum / n);
      }
    }
  }

  const std::size_t out_plane = static_cast<std::size_t>(ow) * oh;
  std::vector<float> out(w.channels * out_plane);
  std::array<float, 27> patch{};
  for (int y = 0; y < oh; ++y) {
    for (int x = 0; x < ow; ++x) {
      std::size_t k = 0;
      for (int c = 0; c < 3; ++c) {
        for (int dy = -1; dy <= 1; ++dy) {
          for (int dx = -1; dx <= 1; ++dx, ++k) {
            const int sx = x + dx;
            const int sy = y + dy;
            patch[k] = (sx < 0 || sy < 0 || sx >= ow || sy >= oh)
                           ? 0.0f
                           : pooled[(static_cast<std::size_t>(c) * oh + sy) * ow + sx];
          }
        }
      }
      for (std::size_t ch = 0; ch < w.channels; ++ch) {
        const float* kern = &w.kernel[ch * 27];
        float acc = w.bias[ch];
        for (std::size_t i = 0; i < 27; ++i) acc += kern[i] * patch[i];
        out[ch * out_plane + static_cast<std::size_t>(y) * ow + x] = std::max(acc, 0.0f);
      }
    }
  }
  return {w.channels, static_cast<std::size_t>(oh), static_cast<std::size_t>(ow), std::move(out)};
}

struct OnnxExtractor::Impl {
  cv::dnn::Net net;
  int width;
  int height;
  std::vector<std::string> conv_outputs;  // per conv layer, in network order
};

OnnxExtractor::OnnxExtractor(const std::filesystem::path& model_path, int input_width, int input_height)
    : impl_(std::make_unique<Impl>()) {
  impl_->width = input_width;
  impl_->height = input_height;
  try {
    impl_->net = cv::dnn::readNetFromONNX(model_path.string());
  } catch (const cv::Exception& e) {
    throw IoError(fmt::format("cannot load network '{}': {}", model_path.string(), e.what()));
  }
  if (impl_->net.empty()) {
    throw IoError(fmt::format("network '{}' is empty", model_path.string()));
  }
  impl_->net.enableFusion(false);
  impl_->net.setPreferableBackend(cv::dnn::DNN_BACKEND_OPENCV);
  impl_->net.setPreferableTarget(cv::dnn::DNN_TARGET_CPU);
  const auto names = impl_->net.getLayerNames();
  for (std::size_t i = 0; i < names.size(); ++i) {
    const auto layer = impl_->net.getLayer(impl_->net.getLayerId(names[i]));
    if (layer->type != "Convolution") continue;
    std::string out = names[i];
    if (i + 1 < names.size() && impl_->net.getLayer(impl_->net.getLayerId(names[i + 1]))->type == "ReLU") {
      out = names[i + 1];
    }
    impl_->conv_outputs.push_back(out);
  }
}

OnnxExtractor::~OnnxExtractor() = default;

std::string OnnxExtractor::output_layer_name(int layer) const {
  if (!is_pre_pool_layer(layer)) {
    throw InvalidArgument(fmt::format("layer {} is not a pre-pool conv layer", layer));
  }
  if (static_cast<std::size_t>(layer) > impl_->conv_outputs.size()) {
    throw InvalidArgument(fmt::format("network/layer mismatch: network has {} conv layers, layer {} requested",
                                      impl_->conv_outputs.size(), layer));
  }
  return impl_->conv_outputs[static_cast<std::size_t>(layer) - 1];
}

FeatureMap OnnxExtractor::extract(const ExtractionRequest& request) {
  if (request.image == nullptr) {
    throw InvalidArgument("ONNX extractor needs image pixels");
  }
  const auto name = output_layer_name(request.layer);
  auto planar = normalize_for_network(*request.image, impl_->width, impl_->height);
  const int shape[4] = {1, 3, impl_->height, impl_->width};
  cv::Mat blob(4, shape, CV_32F, planar.data());
  impl_->net.setInput(blob);
  cv::Mat out = impl_->net.forward(name);
  if (out.dims != 4 || out.size[0] != 1) {
    throw InvalidArgument(fmt::format("network/layer mismatch: layer '{}' output is not a 1xCxHxW map", name));
  }
  const auto c = static_cast<std::size_t>(out.size[1]);
  const auto h = static_cast<std::size_t>(out.size[2]);
  const auto w = static_cast<std::size_t>(out.size[3]);
  check_layer_channels(request.layer, c);
  const auto* data = out.ptr<float>();
  std::vector<float> values(data, data + c * h * w);
  if (std::any_of(values.begin(), values.end(), [](float v) { return !std::isfinite(v); })) {
    throw InvalidArgument(fmt::format("non-finite activations at layer {}", request.layer));
  }
  return {c, h, w, std::move(values)};
}

std::unique_ptr<FeatureExtractor> make_extractor(const ExtractorSpec& spec) {
  if (!is_pre_pool_layer(spec.layer)) {
    throw InvalidArgument(fmt::format("layer {} is not one of the pre-pool conv layers", spec.layer));
  }
  if (spec.backend == Backend::precomputed) {
    return std::make_unique<PrecomputedExtractor>(spec.precomputed_dir);
  }
  if (spec.engine == InferenceEngine::onnx) {
    return std::make_unique<OnnxExtractor>(spec.model_path, spec.input_width, spec.input_height);
  }
  return std::make_unique<RandomProjectionExtractor>(spec.input_width, spec.input_height, spec.projection_seed);
}

std::pair<FeatureVector, FeatureVector> compute_features(FeatureExtractor& extractor, std::string_view participant_id,
                                                         std::string_view image_id, const MaskedImage& masked,
                                                         const MaskedImage* local_crop, int layer) {
  FeatureVector g =
      global_average_pool(extractor.extract({participant_id, image_id, Scope::global, layer, &masked}));
  if (local_crop == nullptr) {
    return {g, g};
  }
  FeatureVector l =
      global_average_pool(extractor.extract({participant_id, image_id, Scope::local, layer, local_crop}));
  if (l.dim() != g.dim()) {
    throw InvalidArgument(fmt::format("global ({}) and local ({}) descriptors differ in dimension", g.dim(), l.dim()));
  }
  return {std::move(g), std::move(l)};
}

FeatureVector downscaled_pixels(const Image& img, int side) {
  cv::Mat src(img.height(), img.width(), CV_8UC3, const_cast<std::uint8_t*>(img.data().data()));
  cv::Mat small;
  cv::resize(src, small, cv::Size(side, side), 0.0, 0.0, cv::INTER_AREA);
  FeatureVector out;
  out.values.reserve(static_cast<std::size_t>(side) * side * 3);
  for (int y = 0; y < side; ++y) {
    const auto* row = small.ptr<std::uint8_t>(y);
    for (int x = 0; x < side * 3; ++x) out.values.push_back(static_cast<float>(row[x]) / 255.0f);
  }
  return out;
}

}  // namespace scene_cluster
