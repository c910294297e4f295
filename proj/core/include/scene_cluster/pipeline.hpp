#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "scene_cluster/clustering.hpp"
#include "scene_cluster/config.hpp"
#include "scene_cluster/dataset.hpp"
#include "scene_cluster/error.hpp"
#include "scene_cluster/evaluation.hpp"

namespace scene_cluster {

enum class Stage { synth, preprocess, extract, cluster, evaluate, sweep };
std::string_view to_string(Stage s);
Stage parse_stage(std::string_view name);

/// Failure of a pipeline stage. `code` is a short machine-readable tag:
/// config, missing_input, invalid_input or failed.
class StageError : public Error {
 public:
  StageError(Stage stage, std::string code, const std::string& message)
      : Error(message), stage_(stage), code_(std::move(code)) {}

  [[nodiscard]] Stage stage() const { return stage_; }
  [[nodiscard]] const std::string& code() const { return code_; }
  /// `{"error": {"stage", "code", "message"}}`
  [[nodiscard]] nlohmann::json to_json() const;

 private:
  Stage stage_;
  std::string code_;
};

struct RunOptions {
  int jobs = 1;
  bool force = false;
  bool dump_intermediates = false;
  std::optional<Method> method;  // overrides the config for cluster / evaluate
};

struct StageSummary {
  Stage stage = Stage::synth;
  std::size_t processed = 0;  // participants computed; (participant, layer) pairs for extract, cells for sweep
  std::size_t cached = 0;     // same units, skipped because their stamp matched
  std::vector<std::filesystem::path> outputs;
};

/// Cache paths. Every stage writes below `<cache>/<stage>/`.
struct CacheLayout {
  std::filesystem::path root;

  [[nodiscard]] std::filesystem::path stage_dir(Stage s) const { return root / std::string(to_string(s)); }
  [[nodiscard]] std::filesystem::path preprocess_dir(const std::string& pid) const;
  [[nodiscard]] std::filesystem::path export_list() const;
  [[nodiscard]] std::filesystem::path extract_dir(const std::string& pid) const;
  [[nodiscard]] std::filesystem::path cluster_file(Method m, const std::string& pid) const;
  [[nodiscard]] std::filesystem::path report_csv(Method m) const;
  [[nodiscard]] std::filesystem::path report_json(Method m) const;
};

/// The cache root: $SCENE_CLUSTER_CACHE when set, else the configured one.
std::filesystem::path effective_cache_dir(const PipelineConfig& cfg);

StageSummary run_synth(const PipelineConfig& cfg, const RunOptions& opts);
StageSummary run_preprocess(const PipelineConfig& cfg, const RunOptions& opts);
StageSummary run_extract(const PipelineConfig& cfg, const RunOptions& opts);
StageSummary run_cluster(const PipelineConfig& cfg, const RunOptions& opts);
StageSummary run_evaluate(const PipelineConfig& cfg, const RunOptions& opts);
StageSummary run_sweep(const PipelineConfig& cfg, const RunOptions& opts);
StageSummary run_stage(Stage stage, const PipelineConfig& cfg, const RunOptions& opts);

/// Pooled global/local descriptors of one participant at `layer`, read from
/// the extract cache.
LayerFeatures load_cached_features(const PipelineConfig& cfg, const Dataset& d, const std::string& participant_id,
                                   int layer);

}  // namespace scene_cluster
