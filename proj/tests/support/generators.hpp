#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "scene_cluster/distance.hpp"
#include "scene_cluster/features.hpp"
#include "scene_cluster/image.hpp"

namespace sc_test {

/// Small seeded generator for property tests. Draws are mapped by hand so
/// sequences do not depend on the standard library's distributions.
class Gen {
 public:
  explicit Gen(std::uint64_t seed) : engine_(seed) {}

  int uniform_int(int lo, int hi) {
    return lo + static_cast<int>(engine_() % static_cast<std::uint64_t>(hi - lo + 1));
  }
  double uniform(double lo = 0.0, double hi = 1.0) {
    return lo + (hi - lo) * (static_cast<double>(engine_() >> 11) * 0x1.0p-53);
  }
  double normal() {
    const double u1 = std::max(uniform(), 1e-300);
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.141592653589793 * u2);
  }
  bool coin(double p = 0.5) { return uniform() < p; }

  /// Labels over n items using at most k distinct values (not necessarily contiguous).
  std::vector<int> partition(std::size_t n, int k) {
    std::vector<int> out(n);
    for (auto& v : out) v = uniform_int(0, k - 1) * 3 + 7;
    return out;
  }

  /// n vectors of dimension dim drawn around `clusters` random centres.
  std::vector<scene_cluster::FeatureVector> blobs(std::size_t n, std::size_t dim, int clusters, double spread,
                                                  double separation) {
    std::vector<std::vector<double>> centres(static_cast<std::size_t>(clusters), std::vector<double>(dim));
    for (auto& c : centres) {
      for (auto& v : c) v = normal() * separation;
    }
    std::vector<scene_cluster::FeatureVector> out(n);
    for (std::size_t i = 0; i < n; ++i) {
      const auto& c = centres[i % centres.size()];
      out[i].values.resize(dim);
      for (std::size_t j = 0; j < dim; ++j) out[i].values[j] = static_cast<float>(c[j] + normal() * spread);
    }
    return out;
  }

  std::vector<scene_cluster::FeatureVector> vectors(std::size_t n, std::size_t dim, double scale = 1.0) {
    std::vector<scene_cluster::FeatureVector> out(n);
    for (auto& v : out) {
      v.values.resize(dim);
      for (auto& x : v.values) x = static_cast<float>(normal() * scale);
    }
    return out;
  }

  scene_cluster::BinarySaliencyMask mask(int w, int h, double density) {
    scene_cluster::BinarySaliencyMask m(w, h);
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) m.set(x, y, coin(density));
    }
    return m;
  }

  scene_cluster::Image image(int w, int h) {
    std::vector<std::uint8_t> rgb(static_cast<std::size_t>(w) * h * 3);
    for (auto& v : rgb) v = static_cast<std::uint8_t>(uniform_int(0, 255));
    return {w, h, std::move(rgb)};
  }

  scene_cluster::RealImage real_image(int w, int h) {
    std::vector<float> rgb(static_cast<std::size_t>(w) * h * 3);
    for (auto& v : rgb) v = static_cast<float>(uniform());
    return {w, h, std::move(rgb)};
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace sc_test
