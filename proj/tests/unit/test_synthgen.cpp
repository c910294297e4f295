#include <gtest/gtest.h>

#include <map>
#include <set>

#include "fixtures.hpp"
#include "scene_cluster/error.hpp"
#include "scene_cluster/preprocess.hpp"
#include "scene_cluster/synthgen.hpp"

using namespace scene_cluster;

namespace {

EnvironmentSpec solid_env(Rgb bg, Rgb surface) {
  EnvironmentSpec e;
  e.env_id = "e";
  e.background = bg;
  e.surface = surface;
  return e;
}

}  // namespace

TEST(Synthgen, SceneIsDeterministic) {
  const auto env = solid_env({90, 140, 200}, {180, 120, 60});
  const auto a = generate_scene(env, 5);
  const auto b = generate_scene(env, 5);
  EXPECT_EQ(encode_png(a.image), encode_png(b.image));
  EXPECT_EQ(encode_png(a.mask), encode_png(b.mask));
  EXPECT_NE(encode_png(generate_scene(env, 6).image), encode_png(a.image));
  EXPECT_THROW(generate_scene(env, 1, 100), InvalidArgument);
}

TEST(Synthgen, MarkerIsMaskedAndDetected) {
  std::size_t hits = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto env = solid_env({static_cast<std::uint8_t>(40 + seed * 9), 120, 160}, {200, 180, 90});
    const auto s = generate_scene(env, seed);
    EXPECT_EQ(s.fiducial.bbox.width(), kMarkerCells * s.fiducial.cell_size);
    for (int y = s.fiducial.bbox.min_y; y <= s.fiducial.bbox.max_y; ++y) {
      for (int x = s.fiducial.bbox.min_x; x <= s.fiducial.bbox.max_x; ++x) ASSERT_TRUE(s.mask.salient(x, y));
    }
    const auto r = preprocess_image(s.image, s.mask, {});
    if (r.fiducial && intersection_over_union(r.fiducial->bbox, s.fiducial.bbox) >= 0.7) ++hits;
  }
  EXPECT_GE(hits, 19u);
}

TEST(Synthgen, CheckerboardUsesFourTones) {
  const auto board = render_checkerboard(6, 6, 0, {0, 0, 0});
  std::set<std::tuple<int, int, int>> tones;
  for (int y = 0; y < board.height(); ++y) {
    for (int x = 0; x < board.width(); ++x) tones.emplace(board.at(x, y, 0), board.at(x, y, 1), board.at(x, y, 2));
  }
  EXPECT_EQ(tones.size(), 4u);
}

TEST(Synthgen, BackgroundTemplates) {
  auto env = solid_env({10, 20, 30}, {0, 0, 0});
  EXPECT_EQ(background_template(env, 5, 9), (Rgb{10, 20, 30}));
  env.kind = BackgroundKind::stripes;
  env.background_alt = {110, 120, 130};
  env.stripe_period = 20;
  EXPECT_EQ(background_template(env, 0, 0), (Rgb{10, 20, 30}));
  EXPECT_EQ(background_template(env, 0, 10), (Rgb{110, 120, 130}));
  const auto mean = mean_background_rgb(env);
  EXPECT_DOUBLE_EQ(mean[0], 60.0);
  env.stripes_vertical = true;
  EXPECT_EQ(background_template(env, 10, 0), (Rgb{110, 120, 130}));
}

TEST(Synthgen, AssignmentCoversEveryEnvironment) {
  for (int n = 2; n <= 40; n += 3) {
    SynthParticipantSpec spec;
    spec.participant_id = "p";
    spec.n_images = n;
    const int k = std::max(1, std::min(n / 2, 5));
    for (int e = 0; e < k; ++e) spec.environments.push_back(solid_env({0, 0, 0}, {0, 0, 0}));
    spec.assignment_seed = static_cast<std::uint64_t>(n);
    const auto a = assign_environments(spec);
    ASSERT_EQ(a.size(), static_cast<std::size_t>(n));
    std::map<std::size_t, int> counts;
    for (auto e : a) ++counts[e];
    const int guaranteed = std::min(2, n / k);
    for (int e = 0; e < k; ++e) EXPECT_GE(counts[static_cast<std::size_t>(e)], guaranteed);
    EXPECT_EQ(assign_environments(spec), a);
  }
}

TEST(Synthgen, InvalidStudyParametersAreRejected) {
  SynthParticipantSpec spec;
  spec.participant_id = "p";
  spec.n_images = 3;
  EXPECT_THROW(spec.validate(), InvalidArgument);
  spec.environments.assign(4, solid_env({0, 0, 0}, {0, 0, 0}));
  EXPECT_THROW(spec.validate(), InvalidArgument);
}

TEST(Synthgen, StudySpecsRespectOptions) {
  SynthStudyOptions opt;
  opt.participants = 8;
  opt.min_images = 6;
  opt.max_images = 20;
  opt.min_envs = 2;
  opt.max_envs = 5;
  opt.seed = 3;
  const auto specs = make_study_specs(opt);
  ASSERT_EQ(specs.size(), 8u);
  EXPECT_EQ(specs[0].participant_id, "p01");
  for (const auto& s : specs) {
    EXPECT_GE(s.n_images, 6);
    EXPECT_LE(s.n_images, 20);
    EXPECT_GE(s.environments.size(), 2u);
    EXPECT_LE(s.environments.size(), 5u);
    std::set<std::string> ids;
    for (std::size_t i = 0; i < s.environments.size(); ++i) {
      ids.insert(s.environments[i].env_id);
      for (std::size_t j = i + 1; j < s.environments.size(); ++j) {
        EXPECT_GE(environment_separation(s.environments[i], s.environments[j]), 60.0);
      }
    }
    EXPECT_EQ(ids.size(), s.environments.size());
  }
  const auto again = make_study_specs(opt);
  for (std::size_t i = 0; i < specs.size(); ++i) {
    EXPECT_EQ(again[i].n_images, specs[i].n_images);
    EXPECT_EQ(again[i].assignment_seed, specs[i].assignment_seed);
  }
}

TEST(Synthgen, DatasetOnDisk) {
  sc_test::TempDir dir("synth");
  SynthStudyOptions opt;
  opt.participants = 2;
  opt.min_images = 6;
  opt.max_images = 8;
  opt.min_envs = 2;
  opt.max_envs = 2;
  const auto d = generate_dataset(make_study_specs(opt), dir.path(), 2);
  EXPECT_TRUE(validate_dataset(d).empty());
  const auto reloaded = load_manifest(dir / "manifest.csv");
  EXPECT_EQ(reloaded.records(), d.records());
  for (const auto& r : d.records()) {
    EXPECT_TRUE(r.env_label.has_value());
    EXPECT_TRUE(std::filesystem::exists(d.resolve(r.image_path)));
    EXPECT_EQ(load_image(d.resolve(r.image_path)).width(), kSceneSize);
  }
  sc_test::TempDir other("synth2");
  generate_dataset(make_study_specs(opt), other.path(), 1);
  const auto& first = d.records().front();
  EXPECT_EQ(read_file_bytes(dir / first.image_path), read_file_bytes(other / first.image_path));
}
