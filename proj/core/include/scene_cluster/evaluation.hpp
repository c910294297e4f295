#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "scene_cluster/clustering.hpp"
#include "scene_cluster/dataset.hpp"

namespace scene_cluster {

/// Predicted and ground-truth labels over the same items. Predicted noise
/// (kNoise) items are scored as singleton clusters; truth may not contain noise.
struct PartitionPair {
  std::vector<int> predicted;
  std::vector<int> truth;
};

/// Adjusted Rand index from the contingency table. 1 when both partitions
/// are trivial in the same way (single cluster or all singletons).
double adjusted_rand_index(const PartitionPair& p);

/// Mutual information over the arithmetic mean of the two entropies
/// (natural log). 1 when both partitions have a single cluster.
double normalized_mutual_info(const PartitionPair& p);

/// Replaces each noise label by a fresh singleton label.
std::vector<int> noise_to_singletons(std::span<const int> labels);

struct ParticipantScore {
  std::string participant_id;
  double ari = 0.0;
  double nmi = 0.0;
  std::size_t n_images = 0;
  std::size_t n_pred_clusters = 0;
  std::size_t n_true_clusters = 0;
};

struct ScoreReport {
  std::vector<ParticipantScore> per_participant;  // dataset order
  double mean_ari = 0.0;
  double mean_nmi = 0.0;
};

/// Integer labels for one participant's env_label strings (first appearance
/// order). Throws when any record lacks a label.
std::vector<int> truth_labels(const Dataset& d, const std::string& participant_id);

/// Scores every participant of `d` against `predicted` (participant -> labels
/// in record order) and takes unweighted means over participants.
ScoreReport score_dataset(const Dataset& d, const std::map<std::string, std::vector<int>>& predicted);

/// `participant_id,ari,nmi,n_images,n_pred,n_true`, six decimals.
std::string report_csv(const ScoreReport& r);
nlohmann::json report_summary_json(const ScoreReport& r);

// ---- Hyperparameter sweep -------------------------------------------------

struct SweepGrid {
  std::vector<double> alphas;
  std::vector<int> layers;
  std::vector<double> mean_ari;  // alphas.size() x layers.size(), alpha-major
  std::vector<double> mean_nmi;
  double best_alpha = 0.0;
  int best_layer = 0;
  double best_ari = 0.0;

  [[nodiscard]] double ari(std::size_t alpha_index, std::size_t layer_index) const {
    return mean_ari[alpha_index * layers.size() + layer_index];
  }
  [[nodiscard]] double nmi(std::size_t alpha_index, std::size_t layer_index) const {
    return mean_nmi[alpha_index * layers.size() + layer_index];
  }
};

/// 0, 0.01, ..., 1 (101 values, each computed as i / 100).
std::vector<double> default_alpha_grid();
/// Parses "start:stop:step" or a comma-separated list.
std::vector<double> parse_alpha_grid(std::string_view text);

struct LayerFeatures {
  std::vector<FeatureVector> global;
  std::vector<FeatureVector> local;
};
using LayerFeatureLoader = std::function<LayerFeatures(const std::string& participant_id, int layer)>;

/// Mean validation ARI/NMI of the proposed method for every (alpha, layer)
/// cell. Features are loaded once per (participant, layer) and the distance
/// matrices reused across alphas. The best cell maximizes mean ARI; ties go
/// to the smaller alpha, then the smaller layer.
SweepGrid sweep(const Dataset& d_val, std::span<const double> alphas, std::span<const int> layers,
                const LayerFeatureLoader& load, const APConfig& ap, int jobs = 1);

/// Alpha rows x layer columns of mean ARI.
std::string sweep_grid_csv(const SweepGrid& g);
nlohmann::json sweep_summary_json(const SweepGrid& g);
/// Colour-mapped ARI heat map (alpha along x, layer along y) as PNG bytes.
std::vector<std::uint8_t> sweep_heatmap_png(const SweepGrid& g);

}  // namespace scene_cluster
