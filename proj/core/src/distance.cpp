#include "scene_cluster/distance.hpp"

#include <cmath>

#include <fmt/format.h>

#include "scene_cluster/error.hpp"

namespace scene_cluster {

DistanceMatrix::DistanceMatrix(std::size_t n, std::vector<double> entries) : n_(n), entries_(std::move(entries)) {
  if (entries_.size() != n * n) {
    throw InvalidArgument(fmt::format("distance matrix of size {} needs {} entries, got {}", n, n * n, entries_.size()));
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (entries_[i * n + i] != 0.0) {
      throw InvalidArgument(fmt::format("distance matrix diagonal entry {} is not zero", i));
    }
    for (std::size_t j = 0; j < n; ++j) {
      const double v = entries_[i * n + j];
      if (!std::isfinite(v) || v < 0.0) {
        throw InvalidArgument(fmt::format("distance ({}, {}) = {} is negative or non-finite", i, j, v));
      }
      if (v != entries_[j * n + i]) {
        throw InvalidArgument(fmt::format("distance matrix is not symmetric at ({}, {})", i, j));
      }
    }
  }
}

FusionWeight::FusionWeight(double alpha) : alpha_(alpha) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) {
    throw InvalidArgument(fmt::format("fusion weight alpha must lie in [0, 1], got {}", alpha));
  }
}

DistanceMatrix pairwise_distances(std::span<const FeatureVector> vectors) {
  const std::size_t n = vectors.size();
  if (n == 0) {
    throw InvalidArgument("pairwise distances need at least one vector");
  }
  const std::size_t dim = vectors[0].dim();
  for (std::size_t i = 1; i < n; ++i) {
    if (vectors[i].dim() != dim) {
      throw InvalidArgument(fmt::format("dimension mismatch: vector 0 has {} entries, vector {} has {}", dim, i,
                                        vectors[i].dim()));
    }
  }
  std::vector<double> d(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      double sum = 0.0;
      for (std::size_t k = 0; k < dim; ++k) {
        const double diff = static_cast<double>(vectors[i].values[k]) - static_cast<double>(vectors[j].values[k]);
        sum += diff * diff;
      }
      d[i * n + j] = d[j * n + i] = std::sqrt(sum);
    }
  }
  return {n, std::move(d)};
}

DistanceMatrix fuse(const DistanceMatrix& local, const DistanceMatrix& global, FusionWeight w) {
  if (local.size() != global.size()) {
    throw InvalidArgument(fmt::format("size mismatch: local is {}x{}, global is {}x{}", local.size(), local.size(),
                                      global.size(), global.size()));
  }
  const std::size_t n = local.size();
  const double a = w.alpha();
  std::vector<double> d(n * n);
  const auto l = local.entries();
  const auto g = global.entries();
  for (std::size_t i = 0; i < n * n; ++i) {
    // Endpoints reproduce their input exactly.
    d[i] = a == 0.0 ? g[i] : a == 1.0 ? l[i] : a * l[i] + (1.0 - a) * g[i];
  }
  return {n, std::move(d)};
}

}  // namespace scene_cluster
