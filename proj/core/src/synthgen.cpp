#include "scene_cluster/synthgen.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include <fmt/format.h>

#include "scene_cluster/error.hpp"
#include "scene_cluster/parallel.hpp"

namespace scene_cluster {

namespace {

// Marker tones: dark, red, green, cream. Luminances ~20, 90, 142, 240.
constexpr std::array<Rgb, 4> kMarkerTones{{{20, 20, 20}, {230, 30, 30}, {60, 200, 60}, {245, 245, 200}}};

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

// mt19937_64's output sequence is fixed by the standard; the distributions
// are not, so draws are mapped by hand.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}
  int uniform_int(int lo, int hi) {
    const auto span = static_cast<std::uint64_t>(hi - lo + 1);
    return lo + static_cast<int>(engine_() % span);
  }
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  std::uint64_t next() { return engine_(); }

 private:
  std::mt19937_64 engine_;
};

std::uint8_t clamp_channel(double v) { return static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L)); }

// Smooth per-channel offsets in [-20, 20] bilinearly interpolated from a 9x9 lattice.
double texture_offset(std::uint64_t seed, double u, double v, int channel) {
  constexpr int kLattice = 9;
  const auto node = [&](int i, int j) {
    const auto h = splitmix64(seed ^ splitmix64(static_cast<std::uint64_t>((i * kLattice + j) * 3 + channel)));
    return static_cast<double>(h >> 11) * 0x1.0p-53 * 40.0 - 20.0;
  };
  const double x = u * (kLattice - 1);
  const double y = v * (kLattice - 1);
  const int i0 = std::min(static_cast<int>(x), kLattice - 2);
  const int j0 = std::min(static_cast<int>(y), kLattice - 2);
  const double fx = x - i0;
  const double fy = y - j0;
  return (1 - fx) * (1 - fy) * node(i0, j0) + fx * (1 - fy) * node(i0 + 1, j0) + (1 - fx) * fy * node(i0, j0 + 1) +
         fx * fy * node(i0 + 1, j0 + 1);
}

double channel(const Rgb& c, int k) { return k == 0 ? c.r : k == 1 ? c.g : c.b; }

}  // namespace

std::array<double, 3> mean_background_rgb(const EnvironmentSpec& env) {
  std::array<double, 3> m{};
  for (int k = 0; k < 3; ++k) {
    m[k] = env.kind == BackgroundKind::stripes ? 0.5 * (channel(env.background, k) + channel(env.background_alt, k))
                                                : channel(env.background, k);
  }
  return m;
}

double environment_separation(const EnvironmentSpec& a, const EnvironmentSpec& b) {
  const auto ma = mean_background_rgb(a);
  const auto mb = mean_background_rgb(b);
  double sep = 0.0;
  for (int k = 0; k < 3; ++k) {
    sep = std::max(sep, std::abs(ma[k] - mb[k]));
    sep = std::max(sep, std::abs(channel(a.surface, k) - channel(b.surface, k)));
  }
  return sep;
}

Rgb background_template(const EnvironmentSpec& env, int x, int y, int size) {
  switch (env.kind) {
    case BackgroundKind::solid:
      return env.background;
    case BackgroundKind::stripes: {
      const int half = std::max(1, env.stripe_period / 2);
      const int coord = env.stripes_vertical ? x : y;
      return (coord / half) % 2 == 0 ? env.background : env.background_alt;
    }
    case BackgroundKind::noise_texture: {
      const double u = static_cast<double>(x) / (size - 1);
      const double v = static_cast<double>(y) / (size - 1);
      return {clamp_channel(env.background.r + texture_offset(env.texture_seed, u, v, 0)),
              clamp_channel(env.background.g + texture_offset(env.texture_seed, u, v, 1)),
              clamp_channel(env.background.b + texture_offset(env.texture_seed, u, v, 2))};
    }
  }
  return env.background;
}

Image render_checkerboard(int cells, int cell_size, int margin, Rgb background) {
  const int side = cells * cell_size + 2 * margin;
  std::vector<std::uint8_t> rgb(static_cast<std::size_t>(side) * side * 3);
  for (int y = 0; y < side; ++y) {
    for (int x = 0; x < side; ++x) {
      Rgb c = background;
      const int bx = x - margin;
      const int by = y - margin;
      if (bx >= 0 && by >= 0 && bx < cells * cell_size && by < cells * cell_size) {
        c = kMarkerTones[static_cast<std::size_t>(((by / cell_size) % 2) * 2 + (bx / cell_size) % 2)];
      }
      auto* p = &rgb[(static_cast<std::size_t>(y) * side + x) * 3];
      p[0] = c.r;
      p[1] = c.g;
      p[2] = c.b;
    }
  }
  return {side, side, std::move(rgb)};
}

SceneSample generate_scene(const EnvironmentSpec& env, std::uint64_t seed, int size) {
  if (size < 160) {
    throw InvalidArgument(fmt::format("scene size must be >= 160, got {}", size));
  }
  Rng rng(seed);
  const std::size_t npix = static_cast<std::size_t>(size) * size;
  std::vector<std::uint8_t> rgb(npix * 3);
  std::vector<std::uint8_t> mask(npix, 0);
  const auto put = [&](int x, int y, double r, double g, double b) {
    auto* p = &rgb[(static_cast<std::size_t>(y) * size + x) * 3];
    p[0] = clamp_channel(r);
    p[1] = clamp_channel(g);
    p[2] = clamp_channel(b);
  };

  // Surface placement varies with viewpoint.
  const int surf_w = rng.uniform_int(static_cast<int>(0.45 * size), static_cast<int>(0.70 * size));
  const int surf_h = rng.uniform_int(static_cast<int>(0.40 * size), static_cast<int>(0.60 * size));
  const int surf_x = rng.uniform_int(0, size - surf_w);
  const int surf_y = rng.uniform_int(static_cast<int>(0.30 * size), size - surf_h);
  const Rect surface{surf_x, surf_y, surf_x + surf_w - 1, surf_y + surf_h - 1};

  // Jitter on every pixel: global offset in [-3, 3] plus per-pixel noise in [-2, 2].
  std::array<int, 3> offset{};
  for (auto& o : offset) o = rng.uniform_int(-3, 3);
  const auto put_jittered = [&](int x, int y, double r, double g, double b) {
    put(x, y, r + offset[0] + rng.uniform_int(-2, 2), g + offset[1] + rng.uniform_int(-2, 2),
        b + offset[2] + rng.uniform_int(-2, 2));
  };
  for (int y = 0; y < size; ++y) {
    for (int x = 0; x < size; ++x) {
      const Rgb base = surface.contains(x, y) ? env.surface : background_template(env, x, y, size);
      put_jittered(x, y, base.r, base.g, base.b);
    }
  }

  // Marker: placed so that a 2x expansion around it stays on the surface.
  const int cell = rng.uniform_int(6, 7);
  const int board = kMarkerCells * cell;
  const int lo_x = surface.min_x + board / 2 + 2;
  const int hi_x = std::max(lo_x, surface.max_x - board - board / 2 - 2);
  const int lo_y = surface.min_y + board / 2 + 2;
  const int hi_y = std::max(lo_y, surface.max_y - board - board / 2 - 2);
  const int fx = std::clamp(rng.uniform_int(lo_x, hi_x), 0, size - board);
  const int fy = std::clamp(rng.uniform_int(lo_y, hi_y), 0, size - board);
  const Rect marker{fx, fy, fx + board - 1, fy + board - 1};
  for (int y = 0; y < board; ++y) {
    for (int x = 0; x < board; ++x) {
      const Rgb c = kMarkerTones[static_cast<std::size_t>(((y / cell) % 2) * 2 + (x / cell) % 2)];
      put_jittered(fx + x, fy + y, c.r, c.g, c.b);
      mask[static_cast<std::size_t>(fy + y) * size + fx + x] = 1;
    }
  }

  // Food blobs near the surface, kept clear of the marker so components stay separate.
  const int blobs = rng.uniform_int(1, 3);
  const Rect keep_out{marker.min_x - 4, marker.min_y - 4, marker.max_x + 4, marker.max_y + 4};
  for (int b = 0; b < blobs; ++b) {
    const int rx = rng.uniform_int(10, 24);
    const int ry = rng.uniform_int(10, 24);
    const double cr = rng.uniform_int(120, 230);
    const double cg = rng.uniform_int(60, 200);
    const double cb = rng.uniform_int(20, 120);
    for (int attempt = 0; attempt < 50; ++attempt) {
      const int cx = rng.uniform_int(std::max(rx + 2, surface.min_x - 20), std::min(size - rx - 3, surface.max_x + 20));
      const int cy = rng.uniform_int(std::max(ry + 2, surface.min_y - 20), std::min(size - ry - 3, surface.max_y + 20));
      const Rect box{cx - rx, cy - ry, cx + rx, cy + ry};
      const bool overlaps = box.min_x <= keep_out.max_x && box.max_x >= keep_out.min_x &&
                            box.min_y <= keep_out.max_y && box.max_y >= keep_out.min_y;
      if (overlaps) continue;
      for (int y = box.min_y; y <= box.max_y; ++y) {
        for (int x = box.min_x; x <= box.max_x; ++x) {
          const double dx = static_cast<double>(x - cx) / rx;
          const double dy = static_cast<double>(y - cy) / ry;
          const double rho2 = dx * dx + dy * dy;
          if (rho2 > 1.0) continue;
          const double shade = 0.85 + 0.15 * (1.0 - rho2);
          put_jittered(x, y, cr * shade, cg * shade, cb * shade);
          mask[static_cast<std::size_t>(y) * size + x] = 1;
        }
      }
      break;
    }
  }

  return {Image(size, size, std::move(rgb)), BinarySaliencyMask(size, size, std::move(mask)), {marker, cell}};
}

void SynthParticipantSpec::validate() const {
  if (n_images < 2) {
    throw InvalidArgument(fmt::format("participant {} needs >= 2 images, got {}", participant_id, n_images));
  }
  if (environments.empty() || environments.size() > static_cast<std::size_t>(n_images)) {
    throw InvalidArgument(fmt::format("participant {} needs 1..{} environments, got {}", participant_id, n_images,
                                      environments.size()));
  }
}

std::vector<std::size_t> assign_environments(const SynthParticipantSpec& spec) {
  spec.validate();
  const std::size_t n = static_cast<std::size_t>(spec.n_images);
  const std::size_t k = spec.environments.size();
  const std::size_t guaranteed = std::min<std::size_t>(2, n / k);
  Rng rng(splitmix64(spec.assignment_seed));
  std::vector<std::size_t> out;
  out.reserve(n);
  for (std::size_t i = 0; i < guaranteed * k; ++i) out.push_back(i % k);
  while (out.size() < n) out.push_back(static_cast<std::size_t>(rng.uniform_int(0, static_cast<int>(k) - 1)));
  for (std::size_t i = n - 1; i > 0; --i) {
    std::swap(out[i], out[static_cast<std::size_t>(rng.uniform_int(0, static_cast<int>(i)))]);
  }
  return out;
}

std::uint64_t scene_seed(std::uint64_t assignment_seed, std::size_t index) {
  return splitmix64(assignment_seed ^ splitmix64(0xC0FFEEULL + index));
}

namespace {

// Draws colours until each is >= min_sep away (max channel difference) from all previous ones.
template <typename Draw, typename Mean>
std::vector<EnvironmentSpec> draw_separated(Rng& rng, std::size_t count, double min_sep, Draw draw, Mean mean) {
  std::vector<EnvironmentSpec> out;
  for (int attempt = 0; out.size() < count; ++attempt) {
    EnvironmentSpec candidate = draw(rng);
    const auto m = mean(candidate);
    const bool ok = attempt > 10000 || std::all_of(out.begin(), out.end(), [&](const EnvironmentSpec& other) {
                      const auto o = mean(other);
                      double sep = 0.0;
                      for (int c = 0; c < 3; ++c) sep = std::max(sep, std::abs(m[c] - o[c]));
                      return sep >= min_sep;
                    });
    if (ok) {
      out.push_back(std::move(candidate));
      attempt = 0;
    }
  }
  return out;
}

}  // namespace

std::vector<SynthParticipantSpec> make_study_specs(const SynthStudyOptions& o) {
  if (o.participants < 1 || o.min_images < 2 || o.max_images < o.min_images || o.min_envs < 1 ||
      o.max_envs < o.min_envs) {
    throw InvalidArgument("inconsistent synthetic study options");
  }
  Rng rng(splitmix64(o.seed));
  std::vector<SynthParticipantSpec> specs;
  for (int p = 0; p < o.participants; ++p) {
    SynthParticipantSpec spec;
    spec.participant_id = fmt::format("p{:02}", p + 1);
    spec.n_images = rng.uniform_int(o.min_images, o.max_images);
    const int env_cap = std::max(1, std::min(o.max_envs, spec.n_images / 3));
    const int envs = std::min(env_cap, rng.uniform_int(o.min_envs, std::max(o.min_envs, env_cap)));
    spec.assignment_seed = rng.next();

    const auto nb = static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(envs))));
    const std::size_t ns = (static_cast<std::size_t>(envs) + nb - 1) / nb;
    const auto backgrounds = draw_separated(
        rng, nb, 60.0,
        [](Rng& r) {
          EnvironmentSpec e;
          e.kind = static_cast<BackgroundKind>(r.uniform_int(0, 2));
          e.background = {static_cast<std::uint8_t>(r.uniform_int(40, 215)),
                          static_cast<std::uint8_t>(r.uniform_int(40, 215)),
                          static_cast<std::uint8_t>(r.uniform_int(40, 215))};
          const int delta = r.uniform_int(35, 60) * (r.uniform_int(0, 1) == 0 ? -1 : 1);
          e.background_alt = {clamp_channel(e.background.r + delta), clamp_channel(e.background.g + delta),
                              clamp_channel(e.background.b + delta)};
          e.stripe_period = r.uniform_int(16, 32);
          e.stripes_vertical = r.uniform_int(0, 1) == 1;
          e.texture_seed = r.next();
          return e;
        },
        [](const EnvironmentSpec& e) { return mean_background_rgb(e); });
    const auto surfaces = draw_separated(
        rng, ns, 60.0,
        [](Rng& r) {
          EnvironmentSpec e;
          e.surface = {static_cast<std::uint8_t>(r.uniform_int(40, 235)),
                       static_cast<std::uint8_t>(r.uniform_int(40, 235)),
                       static_cast<std::uint8_t>(r.uniform_int(40, 235))};
          return e;
        },
        [](const EnvironmentSpec& e) {
          return std::array<double, 3>{double(e.surface.r), double(e.surface.g), double(e.surface.b)};
        });
    for (int j = 0; j < envs; ++j) {
      EnvironmentSpec env = backgrounds[static_cast<std::size_t>(j) % nb];
      env.surface = surfaces[static_cast<std::size_t>(j) / nb].surface;
      env.env_id = fmt::format("{}_env{:02}", spec.participant_id, j + 1);
      spec.environments.push_back(std::move(env));
    }
    specs.push_back(std::move(spec));
  }
  return specs;
}

Dataset generate_dataset(const std::vector<SynthParticipantSpec>& specs, const std::filesystem::path& out_dir,
                         int jobs) {
  struct Job {
    const EnvironmentSpec* env;
    std::uint64_t seed;
    std::string image_id;
  };
  std::vector<Job> work;
  std::vector<EatingOccasionRecord> records;
  for (const auto& spec : specs) {
    const auto assignment = assign_environments(spec);
    for (std::size_t i = 0; i < assignment.size(); ++i) {
      const auto& env = spec.environments[assignment[i]];
      auto image_id = fmt::format("{}_i{:03}", spec.participant_id, i);
      records.push_back({spec.participant_id, image_id, fmt::format("images/{}.png", image_id),
                         fmt::format("masks/{}.png", image_id), env.env_id});
      work.push_back({&env, scene_seed(spec.assignment_seed, i), std::move(image_id)});
    }
  }
  std::filesystem::create_directories(out_dir / "images");
  std::filesystem::create_directories(out_dir / "masks");
  parallel_for(work.size(), jobs, [&](std::size_t i) {
    const auto scene = generate_scene(*work[i].env, work[i].seed);
    write_file_atomic(out_dir / "images" / (work[i].image_id + ".png"), encode_png(scene.image));
    write_file_atomic(out_dir / "masks" / (work[i].image_id + ".png"), encode_png(scene.mask));
  });
  Dataset d(std::move(records), out_dir);
  write_file_atomic(out_dir / "manifest.csv", format_manifest(d));
  return d;
}

}  // namespace scene_cluster
