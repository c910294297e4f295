#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "scene_cluster/distance.hpp"
#include "scene_cluster/features.hpp"

namespace scene_cluster {

inline constexpr int kNoise = -1;

/// Per-item cluster assignment. Labels are 0-based and contiguous; density
/// methods may mark items as kNoise. Exemplars are filled by AP only.
struct Clustering {
  std::vector<int> labels;
  std::vector<std::size_t> exemplars;
  bool converged = true;
  std::size_t iterations = 0;

  [[nodiscard]] int cluster_count() const;
};

/// Renumbers non-noise labels 0.. in order of first appearance.
std::vector<int> compact_labels(std::span<const int> labels);

// ---- Affinity Propagation -------------------------------------------------

enum class PreferenceMode { median, fixed };

struct APConfig {
  double damping = 0.5;
  int max_iterations = 500;
  int convergence_window = 50;
  PreferenceMode preference_mode = PreferenceMode::median;
  double preference = 0.0;  // used when preference_mode == fixed
  std::uint64_t tie_break_seed = 0;

  void validate() const;
};

/// Dense n x n similarity matrix; the diagonal holds the preferences.
struct Similarities {
  std::size_t n = 0;
  std::vector<double> s;

  [[nodiscard]] double operator()(std::size_t i, std::size_t k) const { return s[i * n + k]; }
  double& operator()(std::size_t i, std::size_t k) { return s[i * n + k]; }
};

/// s(i, k) = -D(i, k); s(k, k) = median off-diagonal similarity or the fixed preference.
Similarities ap_similarities(const DistanceMatrix& d, const APConfig& cfg);

/// Adds a seeded perturbation of relative size 1e-10 (of the off-diagonal
/// similarity range) so symmetric configurations cannot deadlock. The
/// perturbation is identical for any constant shift of all similarities.
void add_tie_break_jitter(Similarities& s, std::uint64_t seed);

struct MessagePassingResult {
  std::vector<std::size_t> exemplars;  // ascending; may be empty
  bool converged = false;
  std::size_t iterations = 0;
  std::vector<double> evidence;  // r(k, k) + a(k, k) at termination
};

/// Damped responsibility/availability updates until the exemplar set is
/// unchanged for convergence_window consecutive iterations or
/// max_iterations is reached.
MessagePassingResult ap_message_passing(const Similarities& s, const APConfig& cfg);

/// Full AP on a distance matrix: similarities, degenerate-input handling,
/// tie-break jitter, message passing, then each item joins its most similar exemplar.
Clustering affinity_propagation(const DistanceMatrix& d, const APConfig& cfg = {});
/// Same, starting from explicit similarities (jitter is applied here).
Clustering affinity_propagation(Similarities s, const APConfig& cfg = {});

// ---- Density baselines ---------------------------------------------------

/// DBSCAN with eps-neighbourhoods D(i, j) <= eps (self included). Clusters
/// grow from core points visited in index order; isolated items are noise.
Clustering dbscan(const DistanceMatrix& d, double eps, int min_pts);

/// Flat-kernel mean shift seeded at every point. Modes within bandwidth / 2
/// merge (denser first); items take the label of their nearest mode.
Clustering mean_shift(std::span<const FeatureVector> vectors, double bandwidth);

struct OpticsResult {
  std::vector<std::size_t> ordering;
  std::vector<double> reachability;   // indexed by item; +inf when undefined
  std::vector<double> core_distance;  // indexed by item
  std::vector<long> predecessor;      // indexed by item; -1 when none
  Clustering clustering;
};

/// OPTICS ordering (unbounded eps) followed by xi-steep cluster extraction.
/// min_cluster_size defaults to min_samples.
OpticsResult optics(const DistanceMatrix& d, int min_samples, double xi, std::optional<int> min_cluster_size = {});

// ---- Per-participant dispatch ---------------------------------------------

enum class Method { proposed, ap, dbscan, meanshift, optics };
std::string_view to_string(Method m);
Method parse_method(std::string_view name);

/// Which vectors the baselines consume.
enum class BaselineInput { pixels, global, local, fused };
std::string_view to_string(BaselineInput b);
BaselineInput parse_baseline_input(std::string_view name);

struct BaselineParams {
  BaselineInput input = BaselineInput::pixels;
  std::optional<double> dbscan_eps;  // default: median distance to the 4th nearest neighbour
  int dbscan_min_pts = 4;
  std::optional<double> meanshift_bandwidth;  // default: median pairwise distance
  int optics_min_samples = 4;
  double optics_xi = 0.05;
};

struct ClusterParams {
  double alpha = kDefaultAlpha;
  APConfig ap;
  BaselineParams baseline;
};

struct ParticipantFeatures {
  std::vector<FeatureVector> global;
  std::vector<FeatureVector> local;
  std::vector<FeatureVector> pixels;  // needed only for BaselineInput::pixels

  [[nodiscard]] std::size_t size() const;
};

struct ParticipantClustering {
  Clustering clustering;
  nlohmann::json params;  // effective parameters, including resolved defaults
};

/// Median over items of the distance to their k-th nearest other item.
double median_knn_distance(const DistanceMatrix& d, std::size_t k);
/// Median of the strictly upper-triangular entries.
double median_pairwise_distance(const DistanceMatrix& d);

ParticipantClustering cluster_participant(const ParticipantFeatures& features, Method method,
                                          const ClusterParams& params);

/// `{participant_id, method, params, labels, exemplars, converged}`
nlohmann::json clustering_to_json(std::string_view participant_id, Method method, const ParticipantClustering& pc);

}  // namespace scene_cluster
