#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "scene_cluster/dataset.hpp"
#include "scene_cluster/image.hpp"

namespace scene_cluster {

struct Rgb {
  std::uint8_t r = 0;
  std::uint8_t g = 0;
  std::uint8_t b = 0;
  friend bool operator==(const Rgb&, const Rgb&) = default;
};

enum class BackgroundKind { solid, stripes, noise_texture };

/// One synthetic eating environment: a background behind the eating surface
/// and the tone of the surface the food and marker rest on.
struct EnvironmentSpec {
  std::string env_id;
  BackgroundKind kind = BackgroundKind::solid;
  Rgb background;      // solid colour, first stripe colour or noise base
  Rgb background_alt;  // second stripe colour
  int stripe_period = 24;
  bool stripes_vertical = false;
  std::uint64_t texture_seed = 0;
  Rgb surface;
};

/// Mean RGB of the background texture, in 0..255 units.
std::array<double, 3> mean_background_rgb(const EnvironmentSpec& env);
/// Largest per-channel difference between two environments over the
/// background mean and the surface tone, in 0..255 units.
double environment_separation(const EnvironmentSpec& a, const EnvironmentSpec& b);

struct FiducialTruth {
  Rect bbox;
  int cell_size = 0;
};

struct SceneSample {
  Image image;
  BinarySaliencyMask mask;
  FiducialTruth fiducial;
};

inline constexpr int kSceneSize = 256;
inline constexpr int kMarkerCells = 6;
inline constexpr int kMaxJitter = 5;  // per image and channel, so two scenes differ by <= 10

/// Background template value (before per-image jitter) at (x, y).
Rgb background_template(const EnvironmentSpec& env, int x, int y, int size = kSceneSize);

/// Renders a size x size scene: environment background, eating surface, one
/// 6x6 four-tone checkerboard marker and 1-3 smoothly shaded elliptical food
/// blobs. The mask marks the blobs and the marker.
SceneSample generate_scene(const EnvironmentSpec& env, std::uint64_t seed, int size = kSceneSize);

/// Draws a checkerboard whose cells cycle through four tones so every
/// interior junction touches four distinct luminances.
Image render_checkerboard(int cells, int cell_size, int margin, Rgb background);

struct SynthParticipantSpec {
  std::string participant_id;
  int n_images = 2;
  std::vector<EnvironmentSpec> environments;
  std::uint64_t assignment_seed = 0;

  void validate() const;
};

/// Environment index of every image of the participant; every environment
/// gets at least min(2, n_images / |environments|) images.
std::vector<std::size_t> assign_environments(const SynthParticipantSpec& spec);

struct SynthStudyOptions {
  int participants = 12;
  int min_images = 10;
  int max_images = 60;
  int min_envs = 3;
  int max_envs = 12;
  std::uint64_t seed = 7;
};

/// Deterministic participant specs. Environments combine a shared set of
/// backgrounds with a shared set of surfaces, so two environments can agree
/// on one of the two but never on both.
std::vector<SynthParticipantSpec> make_study_specs(const SynthStudyOptions& options);

/// Writes `images/`, `masks/` and `manifest.csv` under out_dir and returns
/// the dataset (with env_label ground truth).
Dataset generate_dataset(const std::vector<SynthParticipantSpec>& specs, const std::filesystem::path& out_dir,
                         int jobs = 1);

/// Seed of image `index` of a participant.
std::uint64_t scene_seed(std::uint64_t assignment_seed, std::size_t index);

}  // namespace scene_cluster
