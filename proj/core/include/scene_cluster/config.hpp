#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "scene_cluster/clustering.hpp"
#include "scene_cluster/error.hpp"
#include "scene_cluster/features.hpp"
#include "scene_cluster/preprocess.hpp"
#include "scene_cluster/synthgen.hpp"

namespace scene_cluster {

class ConfigError : public Error {
 public:
  using Error::Error;
};

struct PipelineConfig {
  std::filesystem::path manifest;
  std::filesystem::path cache_dir;
  SynthStudyOptions synth;
  PreprocessParams preprocess;
  ExtractorSpec extractor;
  std::vector<int> extract_layers;  // layers written by the extract stage
  Method method = Method::proposed;
  ClusterParams cluster;
  std::set<std::string> validation_ids;
  std::vector<double> sweep_alphas;
  std::vector<int> sweep_layers;
  bool sweep_heatmap = true;
  std::uint64_t seed = 0;
};

/// Parses INI/TOML-style text:
///
///   # comment
///   [section]
///   key = "value"
///   list = [2, 4, 7]
///
/// Quotes and brackets are optional. Relative paths resolve against
/// `base_dir`. Unknown sections or keys are errors, as are out-of-range values.
PipelineConfig parse_config(std::string_view text, const std::filesystem::path& base_dir = {});
PipelineConfig load_config(const std::filesystem::path& path);

}  // namespace scene_cluster
