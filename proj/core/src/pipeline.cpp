#include "scene_cluster/pipeline.hpp"

#include <cstdlib>
#include <fstream>
#include <map>
#include <mutex>

#include <fmt/format.h>

#include "scene_cluster/content_hash.hpp"
#include "scene_cluster/features.hpp"
#include "scene_cluster/image.hpp"
#include "scene_cluster/parallel.hpp"
#include "scene_cluster/preprocess.hpp"
#include "scene_cluster/synthgen.hpp"
#include "scene_cluster/tensor.hpp"

namespace scene_cluster {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr std::string_view kCacheVersion = "scene-cluster-cache/1";

std::optional<std::string> read_stamp(const fs::path& p) {
  std::ifstream in(p);
  std::string s;
  if (!in || !std::getline(in, s)) return std::nullopt;
  return s;
}

void write_stamp(const fs::path& p, std::uint64_t key) { write_file_atomic(p, hash_hex(key) + "\n"); }

bool stamp_matches(const fs::path& p, std::uint64_t key) {
  const auto s = read_stamp(p);
  return s && *s == hash_hex(key);
}

void write_json(const fs::path& p, const json& j) { write_file_atomic(p, j.dump(2) + "\n"); }

json rect_json(const Rect& r) { return json::array({r.min_x, r.min_y, r.max_x, r.max_y}); }

std::string fmt_double(double v) { return fmt::format("{:.17g}", v); }

Dataset load_dataset(const PipelineConfig& cfg, Stage stage) {
  if (!fs::exists(cfg.manifest)) {
    throw StageError(stage, "missing_input",
                     fmt::format("manifest not found: {} (run 'synth' or set [dataset] manifest)", cfg.manifest.string()));
  }
  try {
    return load_manifest(cfg.manifest);
  } catch (const Error& e) {
    throw StageError(stage, "invalid_input", fmt::format("{}: {}", cfg.manifest.string(), e.what()));
  }
}

fs::path preprocess_stamp(const CacheLayout& c, const std::string& pid) { return c.preprocess_dir(pid) / ".stamp"; }
fs::path extract_stamp(const CacheLayout& c, const std::string& pid, int layer) {
  return c.extract_dir(pid) / fmt::format(".stamp.{}", layer);
}
fs::path cluster_stamp(const CacheLayout& c, Method m, const std::string& pid) {
  auto p = c.cluster_file(m, pid);
  p.replace_extension(".stamp");
  return p;
}

std::string require_stamp(const fs::path& p, Stage stage, Stage needed, const std::string& what) {
  const auto s = read_stamp(p);
  if (!s) {
    throw StageError(stage, "missing_input",
                     fmt::format("missing '{}' output for {}; run '{}' first", to_string(needed), what, to_string(needed)));
  }
  return *s;
}

std::vector<std::string> ordered_participants(const Dataset& d) { return d.participants(); }

Method effective_method(const PipelineConfig& cfg, const RunOptions& opts) { return opts.method.value_or(cfg.method); }

}  // namespace

std::string_view to_string(Stage s) {
  switch (s) {
    case Stage::synth: return "synth";
    case Stage::preprocess: return "preprocess";
    case Stage::extract: return "extract";
    case Stage::cluster: return "cluster";
    case Stage::evaluate: return "evaluate";
    case Stage::sweep: return "sweep";
  }
  return "?";
}

Stage parse_stage(std::string_view name) {
  for (Stage s : {Stage::synth, Stage::preprocess, Stage::extract, Stage::cluster, Stage::evaluate, Stage::sweep}) {
    if (to_string(s) == name) return s;
  }
  throw InvalidArgument(fmt::format("unknown stage '{}'", name));
}

json StageError::to_json() const {
  return {{"error", {{"stage", std::string(to_string(stage_))}, {"code", code_}, {"message", what()}}}};
}

fs::path CacheLayout::preprocess_dir(const std::string& pid) const { return stage_dir(Stage::preprocess) / pid; }
fs::path CacheLayout::export_list() const { return stage_dir(Stage::preprocess) / "export_list.tsv"; }
fs::path CacheLayout::extract_dir(const std::string& pid) const { return stage_dir(Stage::extract) / pid; }
fs::path CacheLayout::cluster_file(Method m, const std::string& pid) const {
  return stage_dir(Stage::cluster) / std::string(to_string(m)) / (pid + ".json");
}
fs::path CacheLayout::report_csv(Method m) const {
  return stage_dir(Stage::evaluate) / std::string(to_string(m)) / "report.csv";
}
fs::path CacheLayout::report_json(Method m) const {
  return stage_dir(Stage::evaluate) / std::string(to_string(m)) / "summary.json";
}

fs::path effective_cache_dir(const PipelineConfig& cfg) {
  if (const char* env = std::getenv("SCENE_CLUSTER_CACHE"); env != nullptr && *env != '\0') return fs::path(env);
  return cfg.cache_dir;
}

// ---- synth -------------------------------------------------------------------

StageSummary run_synth(const PipelineConfig& cfg, const RunOptions& opts) {
  StageSummary summary;
  summary.stage = Stage::synth;
  const fs::path out_dir = cfg.manifest.parent_path().empty() ? fs::path(".") : cfg.manifest.parent_path();
  const auto& o = cfg.synth;
  const auto key = ContentHasher()
                       .update(kCacheVersion)
                       .update("synth")
                       .update(static_cast<std::uint64_t>(o.participants))
                       .update(static_cast<std::uint64_t>(o.min_images))
                       .update(static_cast<std::uint64_t>(o.max_images))
                       .update(static_cast<std::uint64_t>(o.min_envs))
                       .update(static_cast<std::uint64_t>(o.max_envs))
                       .update(o.seed)
                       .update(cfg.manifest.filename().string())
                       .digest();
  const auto stamp = out_dir / ".synth.stamp";
  summary.outputs.push_back(cfg.manifest);
  if (!opts.force && stamp_matches(stamp, key) && fs::exists(cfg.manifest)) {
    summary.cached = static_cast<std::size_t>(o.participants);
    return summary;
  }
  std::vector<SynthParticipantSpec> specs;
  try {
    specs = make_study_specs(o);
  } catch (const InvalidArgument& e) {
    throw StageError(Stage::synth, "config", e.what());
  }
  const auto d = generate_dataset(specs, out_dir, opts.jobs);
  if (cfg.manifest.filename() != "manifest.csv") write_file_atomic(cfg.manifest, format_manifest(d));
  write_stamp(stamp, key);
  summary.processed = specs.size();
  return summary;
}

// ---- preprocess --------------------------------------------------------------

StageSummary run_preprocess(const PipelineConfig& cfg, const RunOptions& opts) {
  StageSummary summary;
  summary.stage = Stage::preprocess;
  const auto d = load_dataset(cfg, Stage::preprocess);
  // Single-image participants are only flagged; they cluster as one singleton.
  std::vector<Violation> blocking;
  for (auto& v : validate_dataset(d)) {
    if (v.kind != ViolationKind::participant_too_small) blocking.push_back(std::move(v));
  }
  if (!blocking.empty()) {
    throw StageError(Stage::preprocess, "invalid_input",
                     fmt::format("{} dataset violation(s); first: {} ({}/{})", blocking.size(),
                                 blocking.front().message, blocking.front().participant_id,
                                 blocking.front().image_id));
  }
  const CacheLayout cache{effective_cache_dir(cfg)};
  const auto& pp = cfg.preprocess;
  const auto pids = ordered_participants(d);
  std::vector<bool> cached(pids.size(), false);

  parallel_for(pids.size(), opts.jobs, [&](std::size_t pi) {
    const auto& pid = pids[pi];
    ContentHasher h;
    h.update(kCacheVersion)
        .update("preprocess")
        .update(static_cast<std::uint64_t>(pp.fast_threshold))
        .update(fmt_double(pp.min_component_fraction))
        .update(fmt_double(pp.expansion))
        .update(static_cast<std::uint64_t>(opts.dump_intermediates ? 1 : 0));
    for (std::size_t idx : d.participant_records(pid)) {
      const auto& r = d.records()[idx];
      h.update(r.image_id).update_file(d.resolve(r.image_path)).update_file(d.resolve(r.mask_path));
    }
    const auto key = h.digest();
    const auto dir = cache.preprocess_dir(pid);
    if (!opts.force && stamp_matches(preprocess_stamp(cache, pid), key)) {
      cached[pi] = true;
      return;
    }
    fs::remove_all(dir);
    fs::create_directories(dir);
    for (std::size_t idx : d.participant_records(pid)) {
      const auto& r = d.records()[idx];
      const auto img = load_image(d.resolve(r.image_path));
      const auto mask = load_mask(d.resolve(r.mask_path));
      const auto res = preprocess_image(img, mask, pp);
      write_file_atomic(dir / (r.image_id + ".global.png"), encode_png(res.masked));
      json meta{{"image_id", r.image_id}, {"width", img.width()}, {"height", img.height()}};
      meta["salient_pixels"] = mask.salient_count();
      if (res.fiducial) {
        meta["fiducial"] = {{"component_id", res.fiducial->component_id},
                            {"bbox", rect_json(res.fiducial->bbox)},
                            {"interest_points", res.fiducial->interest_point_count}};
        meta["crop_rect"] = rect_json(*res.crop_rect);
        write_file_atomic(dir / (r.image_id + ".local.png"), encode_png(*res.local_crop));
      } else {
        meta["fiducial"] = nullptr;
        meta["crop_rect"] = nullptr;
      }
      if (opts.dump_intermediates) {
        json comps = json::array();
        for (const auto& c : res.components) {
          comps.push_back({{"id", c.id},
                           {"pixel_count", c.pixel_count},
                           {"bbox", rect_json(c.bbox)},
                           {"interest_points", detect_interest_points(img, c.bbox, pp.fast_threshold).size()}});
        }
        meta["components"] = std::move(comps);
      }
      write_json(dir / (r.image_id + ".json"), meta);
    }
    write_stamp(preprocess_stamp(cache, pid), key);
  });

  // Input list for the external feature exporter.
  std::vector<ExportListEntry> list;
  for (const auto& pid : pids) {
    const auto dir = fs::absolute(cache.preprocess_dir(pid));
    for (std::size_t idx : d.participant_records(pid)) {
      const auto& id = d.records()[idx].image_id;
      list.push_back({id, Scope::global, dir / (id + ".global.png")});
      if (fs::exists(dir / (id + ".local.png"))) list.push_back({id, Scope::local, dir / (id + ".local.png")});
    }
  }
  write_file_atomic(cache.export_list(), format_export_list(list));

  for (bool c : cached) (c ? summary.cached : summary.processed)++;
  summary.outputs.push_back(cache.stage_dir(Stage::preprocess));
  summary.outputs.push_back(cache.export_list());
  return summary;
}

// ---- extract -----------------------------------------------------------------

namespace {

void write_pooled(const fs::path& p, const FeatureVector& v) {
  write_tensor(p, FeatureMap(v.values.size(), 1, 1, v.values));
}

FeatureVector read_pooled(const fs::path& p) { return global_average_pool(read_tensor(p)); }

}  // namespace

StageSummary run_extract(const PipelineConfig& cfg, const RunOptions& opts) {
  StageSummary summary;
  summary.stage = Stage::extract;
  const auto d = load_dataset(cfg, Stage::extract);
  const CacheLayout cache{effective_cache_dir(cfg)};
  const auto pids = ordered_participants(d);
  const auto& spec = cfg.extractor;

  std::vector<std::string> upstream(pids.size());
  for (std::size_t pi = 0; pi < pids.size(); ++pi) {
    upstream[pi] = require_stamp(preprocess_stamp(cache, pids[pi]), Stage::extract, Stage::preprocess,
                                 fmt::format("participant {}", pids[pi]));
  }
  if (spec.backend == Backend::inference && spec.engine == InferenceEngine::onnx && !fs::exists(spec.model_path)) {
    throw StageError(Stage::extract, "missing_input", fmt::format("model not found: {}", spec.model_path.string()));
  }
  if (spec.backend == Backend::precomputed && !fs::is_directory(spec.precomputed_dir)) {
    throw StageError(Stage::extract, "missing_input",
                     fmt::format("precomputed feature directory not found: {}", spec.precomputed_dir.string()));
  }
  const std::uint64_t model_hash =
      spec.backend == Backend::inference && spec.engine == InferenceEngine::onnx
          ? ContentHasher().update_file(spec.model_path).digest()
          : 0;

  std::vector<std::size_t> cached_count(pids.size(), 0);
  parallel_for(pids.size(), opts.jobs, [&](std::size_t pi) {
    const auto& pid = pids[pi];
    const auto in_dir = cache.preprocess_dir(pid);
    const auto out_dir = cache.extract_dir(pid);
    fs::create_directories(out_dir);
    std::unique_ptr<FeatureExtractor> extractor;
    for (int layer : cfg.extract_layers) {
      ContentHasher h;
      h.update(kCacheVersion)
          .update("extract")
          .update(upstream[pi])
          .update(static_cast<std::uint64_t>(layer))
          .update(static_cast<std::uint64_t>(spec.backend == Backend::precomputed ? 0 : 1))
          .update(static_cast<std::uint64_t>(spec.engine == InferenceEngine::onnx ? 1 : 0))
          .update(static_cast<std::uint64_t>(spec.input_width))
          .update(static_cast<std::uint64_t>(spec.input_height));
      if (spec.backend == Backend::inference) {
        h.update(spec.engine == InferenceEngine::onnx ? model_hash : spec.projection_seed);
      }
      PrecomputedExtractor located(spec.precomputed_dir);
      if (spec.backend == Backend::precomputed) {
        for (std::size_t idx : d.participant_records(pid)) {
          const auto& id = d.records()[idx].image_id;
          for (Scope scope : {Scope::global, Scope::local}) {
            const auto p = located.locate({pid, id, scope, layer, nullptr});
            h.update(std::string(to_string(scope)));
            if (p) {
              h.update_file(*p);
            } else {
              h.update("absent");
            }
          }
        }
      }
      const auto key = h.digest();
      const auto stamp = extract_stamp(cache, pid, layer);
      if (!opts.force && stamp_matches(stamp, key)) {
        ++cached_count[pi];
        continue;
      }
      fs::remove(stamp);
      if (!extractor) extractor = make_extractor(spec);
      for (std::size_t idx : d.participant_records(pid)) {
        const auto& id = d.records()[idx].image_id;
        const auto local_png = in_dir / (id + ".local.png");
        const bool has_fm = fs::exists(local_png);
        FeatureVector g;
        FeatureVector l;
        if (spec.backend == Backend::precomputed) {
          g = global_average_pool(extractor->extract({pid, id, Scope::global, layer, nullptr}));
          // Without a fiducial there is no local map; l falls back to g.
          if (has_fm) {
            l = global_average_pool(extractor->extract({pid, id, Scope::local, layer, nullptr}));
          } else {
            l = g;
          }
        } else {
          const auto masked = load_real_image(in_dir / (id + ".global.png"));
          std::optional<MaskedImage> crop;
          if (has_fm) crop = load_real_image(local_png);
          std::tie(g, l) = compute_features(*extractor, pid, id, masked, crop ? &*crop : nullptr, layer);
        }
        write_pooled(out_dir / tensor_file_name(id, Scope::global, layer), g);
        write_pooled(out_dir / tensor_file_name(id, Scope::local, layer), l);
      }
      write_stamp(stamp, key);
    }
  });

  const std::size_t total = pids.size() * cfg.extract_layers.size();
  for (auto c : cached_count) summary.cached += c;
  summary.processed = total - summary.cached;
  summary.outputs.push_back(cache.stage_dir(Stage::extract));
  return summary;
}

LayerFeatures load_cached_features(const PipelineConfig& cfg, const Dataset& d, const std::string& pid, int layer) {
  const CacheLayout cache{effective_cache_dir(cfg)};
  LayerFeatures out;
  for (std::size_t idx : d.participant_records(pid)) {
    const auto& id = d.records()[idx].image_id;
    out.global.push_back(read_pooled(cache.extract_dir(pid) / tensor_file_name(id, Scope::global, layer)));
    out.local.push_back(read_pooled(cache.extract_dir(pid) / tensor_file_name(id, Scope::local, layer)));
  }
  return out;
}

// ---- cluster -----------------------------------------------------------------

StageSummary run_cluster(const PipelineConfig& cfg, const RunOptions& opts) {
  StageSummary summary;
  summary.stage = Stage::cluster;
  const auto d = load_dataset(cfg, Stage::cluster);
  const CacheLayout cache{effective_cache_dir(cfg)};
  const auto pids = ordered_participants(d);
  const Method method = effective_method(cfg, opts);
  const int layer = cfg.extractor.layer;
  const auto& cp = cfg.cluster;
  const bool needs_pixels = method != Method::proposed && method != Method::ap &&
                            cp.baseline.input == BaselineInput::pixels;

  std::vector<std::string> upstream(pids.size());
  for (std::size_t pi = 0; pi < pids.size(); ++pi) {
    upstream[pi] = require_stamp(extract_stamp(cache, pids[pi], layer), Stage::cluster, Stage::extract,
                                 fmt::format("participant {} at layer {}", pids[pi], layer));
  }

  std::vector<bool> cached(pids.size(), false);
  parallel_for(pids.size(), opts.jobs, [&](std::size_t pi) {
    const auto& pid = pids[pi];
    ContentHasher h;
    h.update(kCacheVersion)
        .update("cluster")
        .update(upstream[pi])
        .update(to_string(method))
        .update(fmt_double(cp.alpha))
        .update(fmt_double(cp.ap.damping))
        .update(static_cast<std::uint64_t>(cp.ap.max_iterations))
        .update(static_cast<std::uint64_t>(cp.ap.convergence_window))
        .update(cp.ap.preference_mode == PreferenceMode::median ? "median" : fmt_double(cp.ap.preference))
        .update(cp.ap.tie_break_seed)
        .update(to_string(cp.baseline.input))
        .update(cp.baseline.dbscan_eps ? fmt_double(*cp.baseline.dbscan_eps) : "auto")
        .update(static_cast<std::uint64_t>(cp.baseline.dbscan_min_pts))
        .update(cp.baseline.meanshift_bandwidth ? fmt_double(*cp.baseline.meanshift_bandwidth) : "auto")
        .update(static_cast<std::uint64_t>(cp.baseline.optics_min_samples))
        .update(fmt_double(cp.baseline.optics_xi));
    if (needs_pixels) {
      for (std::size_t idx : d.participant_records(pid)) h.update_file(d.resolve(d.records()[idx].image_path));
    }
    const auto key = h.digest();
    const auto stamp = cluster_stamp(cache, method, pid);
    const auto out = cache.cluster_file(method, pid);
    if (!opts.force && stamp_matches(stamp, key) && fs::exists(out)) {
      cached[pi] = true;
      return;
    }
    auto lf = load_cached_features(cfg, d, pid, layer);
    ParticipantFeatures pf{std::move(lf.global), std::move(lf.local), {}};
    if (needs_pixels) {
      for (std::size_t idx : d.participant_records(pid)) {
        pf.pixels.push_back(downscaled_pixels(load_image(d.resolve(d.records()[idx].image_path))));
      }
    }
    const auto pc = cluster_participant(pf, method, cp);
    auto j = clustering_to_json(pid, method, pc);
    j["params"]["layer"] = layer;
    fs::create_directories(out.parent_path());
    write_json(out, j);
    write_stamp(stamp, key);
  });
  for (bool c : cached) (c ? summary.cached : summary.processed)++;
  summary.outputs.push_back(cache.stage_dir(Stage::cluster) / std::string(to_string(method)));
  return summary;
}

// ---- evaluate ----------------------------------------------------------------

StageSummary run_evaluate(const PipelineConfig& cfg, const RunOptions& opts) {
  StageSummary summary;
  summary.stage = Stage::evaluate;
  const auto d = load_dataset(cfg, Stage::evaluate);
  const CacheLayout cache{effective_cache_dir(cfg)};
  const Method method = effective_method(cfg, opts);
  DatasetSplit split;
  try {
    split = split_by_participants(d, cfg.validation_ids);
  } catch (const Error& e) {
    throw StageError(Stage::evaluate, "config", e.what());
  }
  if (split.test.empty()) {
    throw StageError(Stage::evaluate, "config", "no test participants: every participant is in validation_ids");
  }

  ContentHasher h;
  h.update(kCacheVersion).update("evaluate").update(to_string(method));
  std::map<std::string, std::vector<int>> predicted;
  for (const auto& pid : split.test.participants()) {
    const auto path = cache.cluster_file(method, pid);
    h.update(require_stamp(cluster_stamp(cache, method, pid), Stage::evaluate, Stage::cluster,
                           fmt::format("participant {} (method {})", pid, to_string(method))));
    json j;
    try {
      const auto bytes = read_file_bytes(path);
      j = json::parse(bytes.begin(), bytes.end());
      predicted[pid] = j.at("labels").get<std::vector<int>>();
    } catch (const std::exception& e) {
      throw StageError(Stage::evaluate, "invalid_input", fmt::format("{}: {}", path.string(), e.what()));
    }
    if (predicted[pid].size() != split.test.participant_records(pid).size()) {
      throw StageError(Stage::evaluate, "invalid_input",
                       fmt::format("{}: {} labels for {} images", path.string(), predicted[pid].size(),
                                   split.test.participant_records(pid).size()));
    }
  }
  for (const auto& r : split.test.records()) h.update(r.participant_id).update(r.image_id).update(r.env_label.value_or(""));
  const auto key = h.digest();
  const auto stamp = cache.report_csv(method).parent_path() / ".stamp";
  summary.outputs = {cache.report_csv(method), cache.report_json(method)};
  if (!opts.force && stamp_matches(stamp, key) && fs::exists(cache.report_csv(method)) &&
      fs::exists(cache.report_json(method))) {
    summary.cached = split.test.participants().size();
    return summary;
  }
  ScoreReport report;
  try {
    report = score_dataset(split.test, predicted);
  } catch (const InvalidArgument& e) {
    throw StageError(Stage::evaluate, "invalid_input", e.what());
  }
  fs::create_directories(cache.report_csv(method).parent_path());
  write_file_atomic(cache.report_csv(method), report_csv(report));
  auto sj = report_summary_json(report);
  sj["method"] = std::string(to_string(method));
  write_json(cache.report_json(method), sj);
  write_stamp(stamp, key);
  summary.processed = report.per_participant.size();
  return summary;
}

// ---- sweep -------------------------------------------------------------------

StageSummary run_sweep(const PipelineConfig& cfg, const RunOptions& opts) {
  StageSummary summary;
  summary.stage = Stage::sweep;
  const auto d = load_dataset(cfg, Stage::sweep);
  const CacheLayout cache{effective_cache_dir(cfg)};
  Dataset val;
  if (cfg.validation_ids.empty()) {
    val = d;
  } else {
    try {
      val = split_by_participants(d, cfg.validation_ids).validation;
    } catch (const Error& e) {
      throw StageError(Stage::sweep, "config", e.what());
    }
  }
  ContentHasher h;
  h.update(kCacheVersion).update("sweep");
  for (double a : cfg.sweep_alphas) h.update(fmt_double(a));
  for (int m : cfg.sweep_layers) h.update(static_cast<std::uint64_t>(m));
  for (const auto& pid : val.participants()) {
    for (int m : cfg.sweep_layers) {
      h.update(require_stamp(extract_stamp(cache, pid, m), Stage::sweep, Stage::extract,
                             fmt::format("participant {} at layer {} (add it to [features] layers)", pid, m)));
    }
  }
  const auto& ap = cfg.cluster.ap;
  h.update(fmt_double(ap.damping))
      .update(static_cast<std::uint64_t>(ap.max_iterations))
      .update(static_cast<std::uint64_t>(ap.convergence_window))
      .update(ap.preference_mode == PreferenceMode::median ? "median" : fmt_double(ap.preference))
      .update(ap.tie_break_seed)
      .update(static_cast<std::uint64_t>(cfg.sweep_heatmap ? 1 : 0));
  const auto key = h.digest();
  const auto dir = cache.stage_dir(Stage::sweep);
  summary.outputs = {dir / "grid.csv", dir / "summary.json"};
  if (cfg.sweep_heatmap) summary.outputs.push_back(dir / "heatmap.png");
  const auto stamp = dir / ".stamp";
  const bool outputs_exist =
      std::all_of(summary.outputs.begin(), summary.outputs.end(), [](const fs::path& p) { return fs::exists(p); });
  if (!opts.force && stamp_matches(stamp, key) && outputs_exist) {
    summary.cached = cfg.sweep_alphas.size() * cfg.sweep_layers.size();
    return summary;
  }
  const LayerFeatureLoader loader = [&](const std::string& pid, int layer) {
    return load_cached_features(cfg, val, pid, layer);
  };
  const auto grid = sweep(val, cfg.sweep_alphas, cfg.sweep_layers, loader, ap, opts.jobs);
  fs::create_directories(dir);
  write_file_atomic(dir / "grid.csv", sweep_grid_csv(grid));
  write_json(dir / "summary.json", sweep_summary_json(grid));
  if (cfg.sweep_heatmap) write_file_atomic(dir / "heatmap.png", sweep_heatmap_png(grid));
  write_stamp(stamp, key);
  summary.processed = grid.mean_ari.size();
  return summary;
}

StageSummary run_stage(Stage stage, const PipelineConfig& cfg, const RunOptions& opts) {
  try {
    switch (stage) {
      case Stage::synth: return run_synth(cfg, opts);
      case Stage::preprocess: return run_preprocess(cfg, opts);
      case Stage::extract: return run_extract(cfg, opts);
      case Stage::cluster: return run_cluster(cfg, opts);
      case Stage::evaluate: return run_evaluate(cfg, opts);
      case Stage::sweep: return run_sweep(cfg, opts);
    }
  } catch (const StageError&) {
    throw;
  } catch (const std::exception& e) {
    throw StageError(stage, "failed", e.what());
  }
  throw StageError(stage, "failed", "unknown stage");
}

}  // namespace scene_cluster
