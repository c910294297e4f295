#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "scene_cluster/features.hpp"

namespace scene_cluster {

/// Symmetric, zero-diagonal, non-negative n x n matrix.
class DistanceMatrix {
 public:
  DistanceMatrix() = default;
  explicit DistanceMatrix(std::size_t n) : n_(n), entries_(n * n, 0.0) {}
  /// Validates symmetry, zero diagonal and finite non-negative entries.
  DistanceMatrix(std::size_t n, std::vector<double> entries);

  [[nodiscard]] std::size_t size() const { return n_; }
  [[nodiscard]] double operator()(std::size_t i, std::size_t j) const { return entries_[i * n_ + j]; }
  [[nodiscard]] std::span<const double> entries() const { return entries_; }

  friend bool operator==(const DistanceMatrix&, const DistanceMatrix&) = default;

 private:
  std::size_t n_ = 0;
  std::vector<double> entries_;
};

/// Weight of the local matrix in the fused distance; 0 <= alpha <= 1.
class FusionWeight {
 public:
  explicit FusionWeight(double alpha);
  [[nodiscard]] double alpha() const { return alpha_; }

 private:
  double alpha_;
};

inline constexpr double kDefaultAlpha = 0.44;

/// Euclidean distances between all pairs of equal-dimension vectors.
DistanceMatrix pairwise_distances(std::span<const FeatureVector> vectors);

/// alpha * local + (1 - alpha) * global, entrywise.
DistanceMatrix fuse(const DistanceMatrix& local, const DistanceMatrix& global, FusionWeight w);

}  // namespace scene_cluster
