#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>

#include "generators.hpp"
#include "oracles.hpp"
#include "scene_cluster/clustering.hpp"

using namespace scene_cluster;

namespace {

std::vector<std::vector<double>> rows(const DistanceMatrix& d) {
  std::vector<std::vector<double>> out(d.size(), std::vector<double>(d.size()));
  for (std::size_t i = 0; i < d.size(); ++i) {
    for (std::size_t j = 0; j < d.size(); ++j) out[i][j] = d(i, j);
  }
  return out;
}

// Two blobs of `per` points around (0,0) and (far,far), radius <= 1.
std::vector<FeatureVector> two_blobs(sc_test::Gen& gen, std::size_t per, float far) {
  std::vector<FeatureVector> out;
  for (int b = 0; b < 2; ++b) {
    for (std::size_t i = 0; i < per; ++i) {
      const float r = static_cast<float>(gen.uniform(0, 0.7));
      const float t = static_cast<float>(gen.uniform(0, 6.283));
      out.push_back({{b * far + r * std::cos(t), b * far + r * std::sin(t)}});
    }
  }
  return out;
}

void expect_contiguous(const Clustering& c) {
  int max_label = -1;
  std::vector<bool> seen;
  for (int l : c.labels) {
    EXPECT_GE(l, kNoise);
    if (l >= 0) {
      if (static_cast<std::size_t>(l) >= seen.size()) seen.resize(static_cast<std::size_t>(l) + 1);
      seen[static_cast<std::size_t>(l)] = true;
      max_label = std::max(max_label, l);
    }
  }
  for (bool s : seen) EXPECT_TRUE(s);
}

}  // namespace

TEST(Dbscan, TwoDenseBlobs) {
  sc_test::Gen gen(31);
  const auto v = two_blobs(gen, 10, 20);
  const auto c = dbscan(pairwise_distances(v), 1.5, 3);
  std::vector<int> truth(20, 0);
  std::fill(truth.begin() + 10, truth.end(), 1);
  EXPECT_TRUE(sc_test::oracle::same_partition(c.labels, truth));
  EXPECT_EQ(std::count(c.labels.begin(), c.labels.end(), kNoise), 0);
}

TEST(Dbscan, IsolatedPointIsNoise) {
  const std::vector<FeatureVector> v{{{0, 0}}, {{0.1f, 0}}, {{0.2f, 0}}, {{50, 50}}};
  const auto c = dbscan(pairwise_distances(v), 0.5, 2);
  EXPECT_EQ(c.labels, (std::vector<int>{0, 0, 0, kNoise}));
}

TEST(Dbscan, LargeEpsGivesOneCluster) {
  sc_test::Gen gen(32);
  const auto d = pairwise_distances(gen.vectors(15, 3));
  EXPECT_EQ(dbscan(d, 1e6, 1).labels, std::vector<int>(15, 0));
}

TEST(Dbscan, CorePointsMatchBruteForceDensity) {
  sc_test::Gen gen(33);
  for (int t = 0; t < 20; ++t) {
    const auto d = pairwise_distances(gen.blobs(30, 2, 3, 0.5, 3.0));
    const double eps = gen.uniform(0.3, 1.2);
    const int min_pts = gen.uniform_int(2, 5);
    const auto c = dbscan(d, eps, min_pts);
    expect_contiguous(c);
    for (std::size_t i = 0; i < d.size(); ++i) {
      int neighbours = 0;
      for (std::size_t j = 0; j < d.size(); ++j) neighbours += d(i, j) <= eps ? 1 : 0;
      if (neighbours >= min_pts) {
        EXPECT_NE(c.labels[i], kNoise);
        // Core points within eps share a cluster.
        for (std::size_t j = 0; j < d.size(); ++j) {
          int nj = 0;
          for (std::size_t k = 0; k < d.size(); ++k) nj += d(j, k) <= eps ? 1 : 0;
          if (nj >= min_pts && d(i, j) <= eps) EXPECT_EQ(c.labels[i], c.labels[j]);
        }
      }
    }
  }
}

TEST(Dbscan, PermutationInvariantOnSeparatedBlobs) {
  sc_test::Gen gen(34);
  for (int t = 0; t < 20; ++t) {
    const auto v = gen.blobs(24, 3, 3, 0.2, 10.0);
    std::vector<std::size_t> perm(v.size());
    std::iota(perm.begin(), perm.end(), 0);
    for (std::size_t i = perm.size() - 1; i > 0; --i) {
      std::swap(perm[i], perm[static_cast<std::size_t>(gen.uniform_int(0, static_cast<int>(i)))]);
    }
    std::vector<FeatureVector> shuffled;
    for (auto p : perm) shuffled.push_back(v[p]);
    const auto a = dbscan(pairwise_distances(v), 1.5, 3).labels;
    const auto b = dbscan(pairwise_distances(shuffled), 1.5, 3).labels;
    std::vector<int> a_perm;
    for (auto p : perm) a_perm.push_back(a[p]);
    EXPECT_EQ(sc_test::oracle::ari(a_perm, b), 1.0);
  }
}

TEST(MeanShift, IdenticalPoints) {
  const std::vector<FeatureVector> v(5, FeatureVector{{2, 3}});
  EXPECT_EQ(mean_shift(v, 1.0).labels, std::vector<int>(5, 0));
}

TEST(MeanShift, SinglePoint) {
  EXPECT_EQ(mean_shift(std::vector<FeatureVector>{{{4, 4}}}, 0.5).labels, std::vector<int>{0});
}

TEST(MeanShift, TwoFarBlobs) {
  sc_test::Gen gen(35);
  const auto v = two_blobs(gen, 12, 30);
  const auto c = mean_shift(v, 2.0);
  std::vector<int> truth(24, 0);
  std::fill(truth.begin() + 12, truth.end(), 1);
  EXPECT_TRUE(sc_test::oracle::same_partition(c.labels, truth));
  expect_contiguous(c);
}

TEST(Optics, FewerPointsThanMinSamplesAreNoise) {
  const std::vector<FeatureVector> v{{{0, 0}}, {{1, 0}}, {{0, 1}}};
  const auto r = optics(pairwise_distances(v), 5, 0.05);
  EXPECT_EQ(r.clustering.labels, std::vector<int>(3, kNoise));
}

TEST(Optics, ReachabilityMatchesBruteForce) {
  sc_test::Gen gen(36);
  for (int t = 0; t < 30; ++t) {
    const auto n = static_cast<std::size_t>(gen.uniform_int(4, 20));
    const auto d = pairwise_distances(gen.blobs(n, 2, gen.uniform_int(1, 3), 0.6, 4.0));
    const int min_samples = gen.uniform_int(2, 4);
    const auto r = optics(d, min_samples, 0.05);
    const auto ref = sc_test::oracle::optics_reachability(rows(d), min_samples);
    EXPECT_EQ(r.ordering, ref.ordering);
    for (std::size_t i = 0; i < n; ++i) {
      EXPECT_DOUBLE_EQ(r.core_distance[i], ref.core[i]);
      if (std::isinf(ref.reachability[i])) {
        EXPECT_TRUE(std::isinf(r.reachability[i]));
      } else {
        EXPECT_DOUBLE_EQ(r.reachability[i], ref.reachability[i]);
      }
    }
  }
}

TEST(Optics, TwoSeparatedBlobs) {
  sc_test::Gen gen(37);
  const auto v = two_blobs(gen, 20, 25);
  const auto r = optics(pairwise_distances(v), 5, 0.05);
  const auto& labels = r.clustering.labels;
  EXPECT_EQ(r.clustering.cluster_count(), 2);
  std::vector<int> truth(40, 0);
  std::fill(truth.begin() + 20, truth.end(), 1);
  for (std::size_t i = 0; i < 40; ++i) {
    for (std::size_t j = 0; j < 40; ++j) {
      if (labels[i] != kNoise && labels[j] != kNoise) EXPECT_EQ(labels[i] == labels[j], truth[i] == truth[j]);
    }
  }
  expect_contiguous(r.clustering);
}

TEST(Optics, DeterministicOnSingleBlob) {
  sc_test::Gen gen(38);
  const auto d = pairwise_distances(gen.blobs(20, 2, 1, 1.0, 0.0));
  const auto a = optics(d, 4, 0.05);
  const auto b = optics(d, 4, 0.05);
  EXPECT_EQ(a.clustering.labels, b.clustering.labels);
  EXPECT_LE(a.clustering.cluster_count(), 2);
}
