#include <gtest/gtest.h>

#include "fixtures.hpp"
#include "scene_cluster/config.hpp"
#include "scene_cluster/evaluation.hpp"

using namespace scene_cluster;

TEST(Config, Defaults) {
  const auto cfg = parse_config("", "/base");
  EXPECT_EQ(cfg.manifest, std::filesystem::path("/base/data/manifest.csv"));
  EXPECT_EQ(cfg.cache_dir, std::filesystem::path("/base/cache"));
  EXPECT_EQ(cfg.method, Method::proposed);
  EXPECT_DOUBLE_EQ(cfg.cluster.alpha, 0.44);
  EXPECT_EQ(cfg.cluster.ap.damping, 0.5);
  EXPECT_EQ(cfg.cluster.ap.max_iterations, 500);
  EXPECT_EQ(cfg.cluster.ap.convergence_window, 50);
  EXPECT_EQ(cfg.cluster.ap.preference_mode, PreferenceMode::median);
  EXPECT_EQ(cfg.extractor.layer, 2);
  EXPECT_EQ(cfg.extract_layers, std::vector<int>{2});
  EXPECT_EQ(cfg.sweep_alphas, default_alpha_grid());
  EXPECT_EQ(cfg.sweep_layers, std::vector<int>{2});
  EXPECT_EQ(cfg.preprocess.fast_threshold, 20);
  EXPECT_EQ(cfg.cluster.baseline.dbscan_min_pts, 4);
  EXPECT_FALSE(cfg.cluster.baseline.dbscan_eps.has_value());
}

TEST(Config, FullFile) {
  const auto cfg = parse_config(R"(
# study settings
[dataset]
manifest = "synth/manifest.csv"   # relative to the config
[cache]
dir = /abs/cache
[run]
seed = 42
[features]
backend = precomputed
precomputed_dir = feats
layers = [2, 7]
layer = 4
[cluster]
method = dbscan
alpha = 0.3
[ap]
preference = -2.5
damping = 0.9
[baseline]
input = fused
dbscan_eps = 1.25
[evaluate]
validation_ids = ["p01", "p02"]
[sweep]
alphas = 0:1:0.25
heatmap = false
)",
                                "/cfg");
  EXPECT_EQ(cfg.manifest, std::filesystem::path("/cfg/synth/manifest.csv"));
  EXPECT_EQ(cfg.cache_dir, std::filesystem::path("/abs/cache"));
  EXPECT_EQ(cfg.seed, 42u);
  EXPECT_EQ(cfg.synth.seed, 42u);
  EXPECT_EQ(cfg.extractor.projection_seed, 42u);
  EXPECT_EQ(cfg.cluster.ap.tie_break_seed, 42u);
  EXPECT_EQ(cfg.extractor.backend, Backend::precomputed);
  EXPECT_EQ(cfg.extractor.precomputed_dir, std::filesystem::path("/cfg/feats"));
  EXPECT_EQ(cfg.extract_layers, (std::vector<int>{2, 4, 7}));
  EXPECT_EQ(cfg.extractor.layer, 4);
  EXPECT_EQ(cfg.method, Method::dbscan);
  EXPECT_DOUBLE_EQ(cfg.cluster.alpha, 0.3);
  EXPECT_EQ(cfg.cluster.ap.preference_mode, PreferenceMode::fixed);
  EXPECT_EQ(cfg.cluster.ap.preference, -2.5);
  EXPECT_EQ(cfg.cluster.ap.damping, 0.9);
  EXPECT_EQ(cfg.cluster.baseline.input, BaselineInput::fused);
  EXPECT_EQ(cfg.cluster.baseline.dbscan_eps, 1.25);
  EXPECT_EQ(cfg.validation_ids, (std::set<std::string>{"p01", "p02"}));
  EXPECT_EQ(cfg.sweep_alphas, (std::vector<double>{0, 0.25, 0.5, 0.75, 1}));
  EXPECT_EQ(cfg.sweep_layers, (std::vector<int>{2, 4, 7}));
  EXPECT_FALSE(cfg.sweep_heatmap);
}

TEST(Config, Errors) {
  EXPECT_THROW(parse_config("[nope]\nx = 1\n"), ConfigError);
  EXPECT_THROW(parse_config("[cluster]\nbeta = 1\n"), ConfigError);
  EXPECT_THROW(parse_config("[cluster]\nalpha = 1.5\n"), ConfigError);
  EXPECT_THROW(parse_config("[cluster]\nalpha = abc\n"), ConfigError);
  EXPECT_THROW(parse_config("[cluster]\nmethod = kmeans\n"), ConfigError);
  EXPECT_THROW(parse_config("[features]\nlayer = 3\n"), ConfigError);
  EXPECT_THROW(parse_config("[features]\nbackend = precomputed\n"), ConfigError);
  EXPECT_THROW(parse_config("[features]\nbackend = onnx\n"), ConfigError);
  EXPECT_THROW(parse_config("[ap]\ndamping = 0.2\n"), ConfigError);
  EXPECT_THROW(parse_config("[ap]\nmax_iterations = 10\nconvergence_window = 20\n"), ConfigError);
  EXPECT_THROW(parse_config("[sweep]\nalphas = 0:2:0.5\n"), ConfigError);
  EXPECT_THROW(parse_config("[baseline]\noptics_xi = 1\n"), ConfigError);
  EXPECT_THROW(parse_config("[sweep\n"), ConfigError);
  EXPECT_THROW(load_config("/nonexistent/scene.ini"), ConfigError);
}

TEST(Config, ErrorsNameSectionAndKey) {
  try {
    parse_config("[preprocess]\nexpansion = 0.5\n");
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("[preprocess] expansion"), std::string::npos);
  }
}

TEST(Config, LoadResolvesAgainstFileDirectory) {
  sc_test::TempDir dir("config");
  write_file_atomic(dir / "scene.ini", std::string_view("[dataset]\nmanifest = m.csv\n"));
  EXPECT_EQ(load_config(dir / "scene.ini").manifest, dir / "m.csv");
}
