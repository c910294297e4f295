#include "scene_cluster/config.hpp"

#include <algorithm>
#include <charconv>
#include <map>
#include <sstream>

#include <boost/algorithm/string.hpp>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <fmt/format.h>

#include "scene_cluster/evaluation.hpp"
#include "scene_cluster/image.hpp"

namespace scene_cluster {

namespace pt = boost::property_tree;

namespace {

const std::map<std::string, std::set<std::string>>& known_keys() {
  static const std::map<std::string, std::set<std::string>> keys{
      {"dataset", {"manifest"}},
      {"cache", {"dir"}},
      {"synth", {"participants", "min_images", "max_images", "min_envs", "max_envs", "seed"}},
      {"preprocess", {"fast_threshold", "min_component_fraction", "expansion"}},
      {"features",
       {"backend", "layer", "layers", "width", "height", "model", "precomputed_dir", "projection_seed"}},
      {"cluster", {"method", "alpha"}},
      {"ap", {"damping", "max_iterations", "convergence_window", "preference"}},
      {"baseline",
       {"input", "dbscan_eps", "dbscan_min_pts", "meanshift_bandwidth", "optics_min_samples", "optics_xi"}},
      {"evaluate", {"validation_ids"}},
      {"sweep", {"alphas", "layers", "heatmap"}},
      {"run", {"seed"}},
  };
  return keys;
}

std::string unquote(std::string v) {
  boost::algorithm::trim(v);
  if (v.size() >= 2 && (v.front() == '"' || v.front() == '\'') && v.back() == v.front()) {
    v = v.substr(1, v.size() - 2);
  }
  return v;
}

class Section {
 public:
  Section(std::string name, const pt::ptree* tree) : name_(std::move(name)), tree_(tree) {}

  [[nodiscard]] std::optional<std::string> raw(const std::string& key) const {
    if (tree_ == nullptr) return std::nullopt;
    const auto v = tree_->get_optional<std::string>(key);
    if (!v) return std::nullopt;
    return unquote(*v);
  }

  [[nodiscard]] std::string str(const std::string& key, std::string fallback) const {
    return raw(key).value_or(std::move(fallback));
  }

  template <typename T>
  [[nodiscard]] T number(const std::string& key, T fallback) const {
    const auto v = raw(key);
    return v ? parse_number<T>(key, *v) : fallback;
  }

  template <typename T>
  [[nodiscard]] std::optional<T> optional_number(const std::string& key) const {
    const auto v = raw(key);
    if (!v || *v == "auto" || v->empty()) return std::nullopt;
    return parse_number<T>(key, *v);
  }

  [[nodiscard]] bool boolean(const std::string& key, bool fallback) const {
    const auto v = raw(key);
    if (!v) return fallback;
    if (*v == "true" || *v == "1" || *v == "yes") return true;
    if (*v == "false" || *v == "0" || *v == "no") return false;
    throw ConfigError(fmt::format("[{}] {}: expected a boolean, got '{}'", name_, key, *v));
  }

  [[nodiscard]] std::optional<std::vector<std::string>> list(const std::string& key) const {
    auto v = raw(key);
    if (!v) return std::nullopt;
    std::string s = *v;
    if (!s.empty() && s.front() == '[' && s.back() == ']') s = s.substr(1, s.size() - 2);
    std::vector<std::string> items;
    boost::algorithm::split(items, s, boost::is_any_of(","));
    std::vector<std::string> out;
    for (auto& item : items) {
      auto t = unquote(item);
      if (!t.empty()) out.push_back(std::move(t));
    }
    return out;
  }

  [[nodiscard]] std::optional<std::vector<int>> int_list(const std::string& key) const {
    const auto items = list(key);
    if (!items) return std::nullopt;
    std::vector<int> out;
    for (const auto& item : *items) out.push_back(parse_number<int>(key, item));
    return out;
  }

  template <typename T>
  T parse_number(const std::string& key, const std::string& v) const {
    T out{};
    const auto* end = v.data() + v.size();
    const auto [ptr, ec] = std::from_chars(v.data(), end, out);
    if (ec != std::errc{} || ptr != end) {
      throw ConfigError(fmt::format("[{}] {}: expected a number, got '{}'", name_, key, v));
    }
    return out;
  }

  [[noreturn]] void fail(const std::string& key, const std::string& what) const {
    throw ConfigError(fmt::format("[{}] {}: {}", name_, key, what));
  }

 private:
  std::string name_;
  const pt::ptree* tree_;
};

std::filesystem::path resolve_path(const std::filesystem::path& base, const std::string& p) {
  if (p.empty()) return {};
  std::filesystem::path path(p);
  return path.is_absolute() || base.empty() ? path : base / path;
}

}  // namespace

PipelineConfig parse_config(std::string_view text, const std::filesystem::path& base_dir) {
  pt::ptree tree;
  try {
    // read_ini only knows ';' comments. '#' starts a comment at the line
    // start or after whitespace, outside quotes.
    std::string cleaned;
    std::istringstream lines{std::string(text)};
    for (std::string line; std::getline(lines, line);) {
      char quote = 0;
      for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quote != 0) {
          if (c == quote) quote = 0;
        } else if (c == '"' || c == '\'') {
          quote = c;
        } else if (c == '#' && (i == 0 || line[i - 1] == ' ' || line[i - 1] == '\t')) {
          line.erase(i);
          break;
        }
      }
      cleaned += line;
      cleaned += '\n';
    }
    std::istringstream in{cleaned};
    pt::ini_parser::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(fmt::format("malformed config at line {}: {}", e.line(), e.message()));
  }

  PipelineConfig cfg;
  for (const auto& [name, section] : tree) {
    const auto known = known_keys().find(name);
    if (known == known_keys().end()) {
      if (section.empty()) throw ConfigError(fmt::format("key '{}' outside of any section", name));
      throw ConfigError(fmt::format("unknown section [{}]", name));
    }
    for (const auto& entry : section) {
      if (!known->second.contains(entry.first)) {
        throw ConfigError(fmt::format("unknown key '{}' in [{}]", entry.first, name));
      }
    }
  }

  const auto section = [&](const std::string& name) {
    const auto child = tree.get_child_optional(name);
    return Section(name, child ? &*child : nullptr);
  };

  try {
    const auto run = section("run");
    cfg.seed = run.number<std::uint64_t>("seed", 0);

    const auto dataset = section("dataset");
    cfg.manifest = resolve_path(base_dir, dataset.str("manifest", "data/manifest.csv"));
    cfg.cache_dir = resolve_path(base_dir, section("cache").str("dir", "cache"));

    const auto synth = section("synth");
    cfg.synth.participants = synth.number("participants", cfg.synth.participants);
    cfg.synth.min_images = synth.number("min_images", cfg.synth.min_images);
    cfg.synth.max_images = synth.number("max_images", cfg.synth.max_images);
    cfg.synth.min_envs = synth.number("min_envs", cfg.synth.min_envs);
    cfg.synth.max_envs = synth.number("max_envs", cfg.synth.max_envs);
    cfg.synth.seed = synth.number<std::uint64_t>("seed", cfg.seed);

    const auto pre = section("preprocess");
    cfg.preprocess.fast_threshold = pre.number("fast_threshold", cfg.preprocess.fast_threshold);
    cfg.preprocess.min_component_fraction = pre.number("min_component_fraction", cfg.preprocess.min_component_fraction);
    cfg.preprocess.expansion = pre.number("expansion", cfg.preprocess.expansion);
    if (cfg.preprocess.fast_threshold < 1 || cfg.preprocess.fast_threshold > 254) {
      pre.fail("fast_threshold", "must be in [1, 254]");
    }
    if (!(cfg.preprocess.min_component_fraction >= 0.0 && cfg.preprocess.min_component_fraction < 1.0)) {
      pre.fail("min_component_fraction", "must be in [0, 1)");
    }
    if (!(cfg.preprocess.expansion >= 1.0)) pre.fail("expansion", "must be >= 1");

    const auto feat = section("features");
    const auto backend = feat.str("backend", "projection");
    if (backend == "projection") {
      cfg.extractor.backend = Backend::inference;
      cfg.extractor.engine = InferenceEngine::random_projection;
    } else if (backend == "onnx") {
      cfg.extractor.backend = Backend::inference;
      cfg.extractor.engine = InferenceEngine::onnx;
    } else if (backend == "precomputed") {
      cfg.extractor.backend = Backend::precomputed;
    } else {
      feat.fail("backend", fmt::format("expected projection, onnx or precomputed, got '{}'", backend));
    }
    cfg.extractor.layer = feat.number("layer", cfg.extractor.layer);
    cfg.extractor.input_width = feat.number("width", cfg.extractor.input_width);
    cfg.extractor.input_height = feat.number("height", cfg.extractor.input_height);
    cfg.extractor.model_path = resolve_path(base_dir, feat.str("model", ""));
    cfg.extractor.precomputed_dir = resolve_path(base_dir, feat.str("precomputed_dir", ""));
    cfg.extractor.projection_seed = feat.number<std::uint64_t>("projection_seed", cfg.seed);
    cfg.extract_layers = feat.int_list("layers").value_or(std::vector<int>{cfg.extractor.layer});
    if (std::find(cfg.extract_layers.begin(), cfg.extract_layers.end(), cfg.extractor.layer) ==
        cfg.extract_layers.end()) {
      cfg.extract_layers.push_back(cfg.extractor.layer);
    }
    std::sort(cfg.extract_layers.begin(), cfg.extract_layers.end());
    cfg.extract_layers.erase(std::unique(cfg.extract_layers.begin(), cfg.extract_layers.end()),
                             cfg.extract_layers.end());
    for (int m : cfg.extract_layers) {
      if (!is_pre_pool_layer(m)) feat.fail("layers", fmt::format("layer {} is not one of 2, 4, 7, 10, 13", m));
    }
    if (cfg.extractor.input_width < 32 || cfg.extractor.input_height < 32) {
      feat.fail("width", "input size must be at least 32x32");
    }
    if (cfg.extractor.backend == Backend::precomputed && cfg.extractor.precomputed_dir.empty()) {
      feat.fail("precomputed_dir", "required for the precomputed backend");
    }
    if (cfg.extractor.backend == Backend::inference && cfg.extractor.engine == InferenceEngine::onnx &&
        cfg.extractor.model_path.empty()) {
      feat.fail("model", "required for the onnx backend");
    }

    const auto cl = section("cluster");
    try {
      cfg.method = parse_method(cl.str("method", "proposed"));
    } catch (const Error& e) {
      cl.fail("method", e.what());
    }
    cfg.cluster.alpha = cl.number("alpha", kDefaultAlpha);
    if (!(cfg.cluster.alpha >= 0.0 && cfg.cluster.alpha <= 1.0)) cl.fail("alpha", "must be in [0, 1]");

    const auto ap = section("ap");
    cfg.cluster.ap.damping = ap.number("damping", cfg.cluster.ap.damping);
    cfg.cluster.ap.max_iterations = ap.number("max_iterations", cfg.cluster.ap.max_iterations);
    cfg.cluster.ap.convergence_window = ap.number("convergence_window", cfg.cluster.ap.convergence_window);
    const auto pref = ap.str("preference", "median");
    if (pref != "median") {
      cfg.cluster.ap.preference_mode = PreferenceMode::fixed;
      cfg.cluster.ap.preference = ap.parse_number<double>("preference", pref);
    }
    cfg.cluster.ap.tie_break_seed = cfg.seed;
    try {
      cfg.cluster.ap.validate();
    } catch (const Error& e) {
      throw ConfigError(fmt::format("[ap] {}", e.what()));
    }

    const auto bl = section("baseline");
    try {
      cfg.cluster.baseline.input = parse_baseline_input(bl.str("input", "pixels"));
    } catch (const Error& e) {
      bl.fail("input", e.what());
    }
    cfg.cluster.baseline.dbscan_eps = bl.optional_number<double>("dbscan_eps");
    cfg.cluster.baseline.dbscan_min_pts = bl.number("dbscan_min_pts", cfg.cluster.baseline.dbscan_min_pts);
    cfg.cluster.baseline.meanshift_bandwidth = bl.optional_number<double>("meanshift_bandwidth");
    cfg.cluster.baseline.optics_min_samples = bl.number("optics_min_samples", cfg.cluster.baseline.optics_min_samples);
    cfg.cluster.baseline.optics_xi = bl.number("optics_xi", cfg.cluster.baseline.optics_xi);
    if (cfg.cluster.baseline.dbscan_eps && !(*cfg.cluster.baseline.dbscan_eps > 0.0)) {
      bl.fail("dbscan_eps", "must be > 0");
    }
    if (cfg.cluster.baseline.meanshift_bandwidth && !(*cfg.cluster.baseline.meanshift_bandwidth > 0.0)) {
      bl.fail("meanshift_bandwidth", "must be > 0");
    }
    if (cfg.cluster.baseline.dbscan_min_pts < 1) bl.fail("dbscan_min_pts", "must be >= 1");
    if (cfg.cluster.baseline.optics_min_samples < 2) bl.fail("optics_min_samples", "must be >= 2");
    if (!(cfg.cluster.baseline.optics_xi > 0.0 && cfg.cluster.baseline.optics_xi < 1.0)) {
      bl.fail("optics_xi", "must be in (0, 1)");
    }

    if (const auto ids = section("evaluate").list("validation_ids")) {
      cfg.validation_ids.insert(ids->begin(), ids->end());
    }

    const auto sw = section("sweep");
    if (const auto alphas = sw.raw("alphas")) {
      try {
        auto text = *alphas;
        if (!text.empty() && text.front() == '[' && text.back() == ']') text = text.substr(1, text.size() - 2);
        cfg.sweep_alphas = parse_alpha_grid(text);
      } catch (const Error& e) {
        sw.fail("alphas", e.what());
      }
    } else {
      cfg.sweep_alphas = default_alpha_grid();
    }
    cfg.sweep_layers = sw.int_list("layers").value_or(cfg.extract_layers);
    for (int m : cfg.sweep_layers) {
      if (!is_pre_pool_layer(m)) sw.fail("layers", fmt::format("layer {} is not one of 2, 4, 7, 10, 13", m));
    }
    cfg.sweep_heatmap = sw.boolean("heatmap", true);
  } catch (const pt::ptree_error& e) {
    throw ConfigError(e.what());
  }
  return cfg;
}

PipelineConfig load_config(const std::filesystem::path& path) {
  std::vector<std::uint8_t> bytes;
  try {
    bytes = read_file_bytes(path);
  } catch (const Error& e) {
    throw ConfigError(fmt::format("cannot read config {}: {}", path.string(), e.what()));
  }
  const std::string text(bytes.begin(), bytes.end());
  return parse_config(text, path.parent_path());
}

}  // namespace scene_cluster
