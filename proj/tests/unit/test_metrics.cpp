#include <gtest/gtest.h>

#include <numeric>

#include "generators.hpp"
#include "oracles.hpp"
#include "scene_cluster/error.hpp"
#include "scene_cluster/evaluation.hpp"

using namespace scene_cluster;

namespace {

Dataset labelled(const std::vector<std::pair<std::string, std::vector<std::string>>>& participants) {
  std::vector<EatingOccasionRecord> records;
  for (const auto& [pid, envs] : participants) {
    for (std::size_t i = 0; i < envs.size(); ++i) {
      const std::string id = pid + "_" + std::to_string(i);
      records.push_back({pid, id, id + ".png", id + ".mask.png", envs[i]});
    }
  }
  return Dataset(std::move(records), {});
}

}  // namespace

TEST(Ari, Examples) {
  EXPECT_EQ(adjusted_rand_index({{0, 1, 1, 2}, {4, 2, 2, 9}}), 1.0);
  EXPECT_EQ(adjusted_rand_index({{0, 0, 0, 0, 0}, {0, 1, 2, 3, 4}}), 0.0);
  const PartitionPair p{{0, 0, 1, 1}, {0, 0, 0, 1}};
  EXPECT_NEAR(adjusted_rand_index(p), sc_test::oracle::ari(p.predicted, p.truth), 1e-12);
  EXPECT_NEAR(adjusted_rand_index(p), 0.0, 1e-12);
  EXPECT_EQ(adjusted_rand_index({{0, 0, 0}, {1, 1, 1}}), 1.0);
  EXPECT_EQ(adjusted_rand_index({{0}, {0}}), 1.0);
}

TEST(Nmi, Examples) {
  EXPECT_NEAR(normalized_mutual_info({{0, 0, 1, 1, 2}, {3, 3, 1, 1, 0}}), 1.0, 1e-12);
  EXPECT_NEAR(normalized_mutual_info({{0, 0, 1, 1}, {0, 1, 0, 1}}), 0.0, 1e-12);
  EXPECT_EQ(normalized_mutual_info({{0, 0, 0}, {5, 5, 5}}), 1.0);
  EXPECT_EQ(normalized_mutual_info({{0, 0, 0}, {0, 1, 2}}), 0.0);
}

TEST(Metrics, Errors) {
  EXPECT_THROW(adjusted_rand_index({{0, 1}, {0}}), InvalidArgument);
  EXPECT_THROW(normalized_mutual_info({{}, {}}), InvalidArgument);
  EXPECT_THROW(adjusted_rand_index({{0, 1}, {0, -1}}), InvalidArgument);
}

TEST(Metrics, MatchOraclesOnRandomPartitions) {
  sc_test::Gen gen(41);
  for (int t = 0; t < 300; ++t) {
    const auto n = static_cast<std::size_t>(gen.uniform_int(1, 30));
    auto pred = gen.partition(n, gen.uniform_int(1, 6));
    const auto truth = gen.partition(n, gen.uniform_int(1, 6));
    // Sprinkle predicted noise; the oracle sees it as singletons.
    int fresh = 1000;
    std::vector<int> pred_oracle = pred;
    for (std::size_t i = 0; i < n; ++i) {
      if (gen.coin(0.1)) {
        pred[i] = kNoise;
        pred_oracle[i] = fresh++;
      }
    }
    const PartitionPair p{pred, truth};
    EXPECT_NEAR(adjusted_rand_index(p), sc_test::oracle::ari(pred_oracle, truth), 1e-9);
    EXPECT_NEAR(normalized_mutual_info(p), sc_test::oracle::nmi(pred_oracle, truth), 1e-9);
  }
}

TEST(Metrics, SymmetricPermutationInvariantAndBounded) {
  sc_test::Gen gen(42);
  for (int t = 0; t < 200; ++t) {
    const auto n = static_cast<std::size_t>(gen.uniform_int(2, 25));
    const auto a = gen.partition(n, gen.uniform_int(1, 5));
    const auto b = gen.partition(n, gen.uniform_int(1, 5));
    const double ari = adjusted_rand_index({a, b});
    const double nmi = normalized_mutual_info({a, b});
    EXPECT_NEAR(ari, adjusted_rand_index({b, a}), 1e-12);
    EXPECT_NEAR(nmi, normalized_mutual_info({b, a}), 1e-12);
    std::vector<int> renamed(a);
    for (auto& v : renamed) v = 500 - v * 7;
    EXPECT_NEAR(ari, adjusted_rand_index({renamed, b}), 1e-12);
    EXPECT_NEAR(nmi, normalized_mutual_info({renamed, b}), 1e-12);
    EXPECT_GE(ari, -1.0);
    EXPECT_LE(ari, 1.0);
    EXPECT_GE(nmi, 0.0);
    EXPECT_LE(nmi, 1.0 + 1e-12);
  }
}

TEST(Metrics, AriOfShuffledPartitionAveragesZero) {
  sc_test::Gen gen(43);
  std::vector<int> truth(50);
  for (std::size_t i = 0; i < 50; ++i) truth[i] = static_cast<int>(i % 5);
  double sum = 0;
  for (int t = 0; t < 1000; ++t) {
    auto shuffled = truth;
    for (std::size_t i = shuffled.size() - 1; i > 0; --i) {
      std::swap(shuffled[i], shuffled[static_cast<std::size_t>(gen.uniform_int(0, static_cast<int>(i)))]);
    }
    sum += adjusted_rand_index({shuffled, truth});
  }
  EXPECT_LT(std::abs(sum / 1000.0), 0.05);
}

TEST(NoiseToSingletons, FreshLabels) {
  const auto out = noise_to_singletons(std::vector<int>{0, kNoise, 1, kNoise});
  EXPECT_EQ(out[0], 0);
  EXPECT_EQ(out[2], 1);
  EXPECT_NE(out[1], out[3]);
  EXPECT_GT(out[1], 1);
  EXPECT_GT(out[3], 1);
}

TEST(ScoreDataset, UnweightedMean) {
  const auto d = labelled({{"a", {"x", "x", "y", "y"}}, {"b", {"x", "y", "z"}}});
  const std::map<std::string, std::vector<int>> pred{{"a", {0, 0, 1, 1}}, {"b", {0, 0, 0}}};
  const auto r = score_dataset(d, pred);
  ASSERT_EQ(r.per_participant.size(), 2u);
  EXPECT_EQ(r.per_participant[0].ari, 1.0);
  EXPECT_EQ(r.per_participant[1].ari, 0.0);
  EXPECT_EQ(r.mean_ari, 0.5);
  EXPECT_EQ(r.per_participant[1].n_pred_clusters, 1u);
  EXPECT_EQ(r.per_participant[1].n_true_clusters, 3u);
  EXPECT_EQ(report_csv(r),
            "participant_id,ari,nmi,n_images,n_pred,n_true\n"
            "a,1.000000,1.000000,4,2,2\n"
            "b,0.000000,0.000000,3,1,3\n");
}

TEST(ScoreDataset, SingleParticipantAndErrors) {
  const auto d = labelled({{"a", {"x", "y", "y"}}});
  const auto r = score_dataset(d, {{"a", {0, 1, 0}}});
  EXPECT_EQ(r.mean_ari, r.per_participant[0].ari);
  EXPECT_EQ(r.mean_nmi, r.per_participant[0].nmi);
  EXPECT_THROW(score_dataset(d, {}), InvalidArgument);
  std::vector<EatingOccasionRecord> records{{"p", "i", "i.png", "m.png", std::nullopt}};
  EXPECT_THROW(truth_labels(Dataset(records, {}), "p"), InvalidArgument);
}
