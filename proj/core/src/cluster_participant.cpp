#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "scene_cluster/clustering.hpp"
#include "scene_cluster/error.hpp"

namespace scene_cluster {

std::string_view to_string(Method m) {
  switch (m) {
    case Method::proposed: return "proposed";
    case Method::ap: return "ap";
    case Method::dbscan: return "dbscan";
    case Method::meanshift: return "meanshift";
    case Method::optics: return "optics";
  }
  return "unknown";
}

Method parse_method(std::string_view name) {
  for (Method m : {Method::proposed, Method::ap, Method::dbscan, Method::meanshift, Method::optics}) {
    if (to_string(m) == name) return m;
  }
  throw InvalidArgument(fmt::format("unknown clustering method '{}' (expected proposed, ap, dbscan, meanshift, optics)", name));
}

std::string_view to_string(BaselineInput b) {
  switch (b) {
    case BaselineInput::pixels: return "pixels";
    case BaselineInput::global: return "global";
    case BaselineInput::local: return "local";
    case BaselineInput::fused: return "fused";
  }
  return "unknown";
}

BaselineInput parse_baseline_input(std::string_view name) {
  for (auto b : {BaselineInput::pixels, BaselineInput::global, BaselineInput::local, BaselineInput::fused}) {
    if (to_string(b) == name) return b;
  }
  throw InvalidArgument(fmt::format("unknown baseline input '{}' (expected pixels, global, local, fused)", name));
}

std::size_t ParticipantFeatures::size() const {
  return std::max({global.size(), local.size(), pixels.size()});
}

double median_knn_distance(const DistanceMatrix& d, std::size_t k) {
  const std::size_t n = d.size();
  if (n < 2 || k == 0) return 0.0;
  const std::size_t rank = std::min(k, n - 1);
  std::vector<double> kth;
  kth.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> row;
    row.reserve(n - 1);
    for (std::size_t j = 0; j < n; ++j) {
      if (j != i) row.push_back(d(i, j));
    }
    std::nth_element(row.begin(), row.begin() + static_cast<long>(rank - 1), row.end());
    kth.push_back(row[rank - 1]);
  }
  std::sort(kth.begin(), kth.end());
  return n % 2 == 1 ? kth[n / 2] : 0.5 * (kth[n / 2 - 1] + kth[n / 2]);
}

double median_pairwise_distance(const DistanceMatrix& d) {
  const std::size_t n = d.size();
  std::vector<double> upper;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) upper.push_back(d(i, j));
  }
  if (upper.empty()) return 0.0;
  std::sort(upper.begin(), upper.end());
  const std::size_t m = upper.size();
  return m % 2 == 1 ? upper[m / 2] : 0.5 * (upper[m / 2 - 1] + upper[m / 2]);
}

namespace {

nlohmann::json ap_json(const APConfig& ap, const DistanceMatrix& d) {
  const double preference = d.size() > 0 ? ap_similarities(d, ap)(0, 0) : ap.preference;
  return {{"damping", ap.damping},
          {"max_iterations", ap.max_iterations},
          {"convergence_window", ap.convergence_window},
          {"preference_mode", ap.preference_mode == PreferenceMode::median ? "median" : "fixed"},
          {"preference", preference}};
}

std::vector<FeatureVector> concatenate(std::span<const FeatureVector> local, std::span<const FeatureVector> global,
                                       double alpha) {
  std::vector<FeatureVector> out(local.size());
  for (std::size_t i = 0; i < local.size(); ++i) {
    for (float v : local[i].values) out[i].values.push_back(static_cast<float>(alpha * v));
    for (float v : global[i].values) out[i].values.push_back(static_cast<float>((1.0 - alpha) * v));
  }
  return out;
}

void require_count(const std::vector<FeatureVector>& v, std::size_t n, std::string_view what) {
  if (v.size() != n) {
    throw InvalidArgument(fmt::format("expected {} {} vectors, got {}", n, what, v.size()));
  }
}

}  // namespace

ParticipantClustering cluster_participant(const ParticipantFeatures& features, Method method,
                                          const ClusterParams& params) {
  const FusionWeight weight(params.alpha);
  params.ap.validate();
  const std::size_t n = features.size();
  if (n == 0) {
    throw InvalidArgument("participant has no images");
  }
  ParticipantClustering out;
  out.params["n_images"] = n;
  if (n == 1) {
    out.clustering = {{0}, {0}, true, 0};
    out.params["note"] = "single image: one singleton cluster";
    return out;
  }

  if (method == Method::proposed) {
    require_count(features.global, n, "global");
    require_count(features.local, n, "local");
    const auto g = pairwise_distances(features.global);
    const auto l = pairwise_distances(features.local);
    const auto d = fuse(l, g, weight);
    out.clustering = affinity_propagation(d, params.ap);
    out.params["alpha"] = params.alpha;
    out.params["ap"] = ap_json(params.ap, d);
    return out;
  }

  const auto& bp = params.baseline;
  std::vector<FeatureVector> vectors;
  DistanceMatrix d;
  switch (bp.input) {
    case BaselineInput::pixels:
      require_count(features.pixels, n, "pixel");
      vectors = features.pixels;
      d = pairwise_distances(vectors);
      break;
    case BaselineInput::global:
      require_count(features.global, n, "global");
      vectors = features.global;
      d = pairwise_distances(vectors);
      break;
    case BaselineInput::local:
      require_count(features.local, n, "local");
      vectors = features.local;
      d = pairwise_distances(vectors);
      break;
    case BaselineInput::fused:
      require_count(features.global, n, "global");
      require_count(features.local, n, "local");
      d = fuse(pairwise_distances(features.local), pairwise_distances(features.global), weight);
      vectors = concatenate(features.local, features.global, params.alpha);
      out.params["alpha"] = params.alpha;
      break;
  }
  out.params["input"] = std::string(to_string(bp.input));

  switch (method) {
    case Method::ap:
      out.clustering = affinity_propagation(d, params.ap);
      out.params["ap"] = ap_json(params.ap, d);
      break;
    case Method::dbscan: {
      double eps = bp.dbscan_eps.value_or(median_knn_distance(d, 4));
      if (!(eps > 0.0)) eps = 1e-12;
      out.clustering = dbscan(d, eps, bp.dbscan_min_pts);
      out.params["eps"] = eps;
      out.params["min_pts"] = bp.dbscan_min_pts;
      break;
    }
    case Method::meanshift: {
      double bandwidth = bp.meanshift_bandwidth.value_or(median_pairwise_distance(d));
      if (!(bandwidth > 0.0)) bandwidth = 1.0;
      out.clustering = mean_shift(vectors, bandwidth);
      out.params["bandwidth"] = bandwidth;
      break;
    }
    case Method::optics:
      out.clustering = optics(d, bp.optics_min_samples, bp.optics_xi).clustering;
      out.params["min_samples"] = bp.optics_min_samples;
      out.params["xi"] = bp.optics_xi;
      break;
    case Method::proposed:
      break;
  }
  return out;
}

nlohmann::json clustering_to_json(std::string_view participant_id, Method method, const ParticipantClustering& pc) {
  return {{"participant_id", participant_id},
          {"method", to_string(method)},
          {"params", pc.params},
          {"labels", pc.clustering.labels},
          {"exemplars", pc.clustering.exemplars},
          {"converged", pc.clustering.converged}};
}

}  // namespace scene_cluster
