#include <benchmark/benchmark.h>

#include <random>

#include "scene_cluster/clustering.hpp"
#include "scene_cluster/distance.hpp"
#include "scene_cluster/features.hpp"
#include "scene_cluster/preprocess.hpp"
#include "scene_cluster/synthgen.hpp"

using namespace scene_cluster;

namespace {

std::vector<FeatureVector> random_vectors(std::size_t n, std::size_t dim, std::uint64_t seed) {
  std::mt19937_64 engine(seed);
  std::normal_distribution<float> normal;
  std::vector<FeatureVector> out(n);
  for (auto& v : out) {
    v.values.resize(dim);
    for (auto& x : v.values) x = normal(engine);
  }
  return out;
}

EnvironmentSpec bench_env() {
  EnvironmentSpec env;
  env.env_id = "bench";
  env.background = {70, 120, 180};
  env.surface = {190, 160, 90};
  return env;
}

}  // namespace

static void BM_PairwiseDistances(benchmark::State& state) {
  const auto v = random_vectors(static_cast<std::size_t>(state.range(0)), 64, 1);
  for (auto _ : state) benchmark::DoNotOptimize(pairwise_distances(v));
}
BENCHMARK(BM_PairwiseDistances)->Arg(20)->Arg(60)->Arg(200);

static void BM_AffinityPropagation(benchmark::State& state) {
  const auto d = pairwise_distances(random_vectors(static_cast<std::size_t>(state.range(0)), 16, 2));
  for (auto _ : state) benchmark::DoNotOptimize(affinity_propagation(d));
}
BENCHMARK(BM_AffinityPropagation)->Arg(20)->Arg(60)->Arg(200);

static void BM_FastCorners(benchmark::State& state) {
  const auto scene = generate_scene(bench_env(), 3);
  const Rect whole{0, 0, scene.image.width() - 1, scene.image.height() - 1};
  const auto gray = to_gray(scene.image, whole);
  for (auto _ : state) benchmark::DoNotOptimize(detect_fast_corners(gray, 20));
}
BENCHMARK(BM_FastCorners);

static void BM_PreprocessImage(benchmark::State& state) {
  const auto scene = generate_scene(bench_env(), 4);
  for (auto _ : state) benchmark::DoNotOptimize(preprocess_image(scene.image, scene.mask, {}));
}
BENCHMARK(BM_PreprocessImage);

static void BM_RandomProjectionLayer2(benchmark::State& state) {
  const auto scene = generate_scene(bench_env(), 5);
  const auto img = scene.image.to_real();
  RandomProjectionExtractor ex(static_cast<int>(state.range(0)), static_cast<int>(state.range(0)), 7);
  for (auto _ : state) benchmark::DoNotOptimize(ex.extract({"p", "i", Scope::global, 2, &img}));
}
BENCHMARK(BM_RandomProjectionLayer2)->Arg(112)->Arg(224);

BENCHMARK_MAIN();
