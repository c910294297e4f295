#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include <fmt/format.h>
#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include "scene_cluster/error.hpp"
#include "scene_cluster/evaluation.hpp"
#include "scene_cluster/parallel.hpp"

namespace scene_cluster {

std::vector<double> default_alpha_grid() {
  std::vector<double> out;
  out.reserve(101);
  for (int i = 0; i <= 100; ++i) out.push_back(i / 100.0);
  return out;
}

std::vector<double> parse_alpha_grid(std::string_view text) {
  const std::string s(text);
  std::vector<double> out;
  const auto number = [&](const std::string& token) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(token, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != token.size()) {
      throw InvalidArgument(fmt::format("bad number '{}' in alpha grid '{}'", token, text));
    }
    return v;
  };
  if (s.find(':') != std::string::npos) {
    std::vector<std::string> parts;
    std::stringstream ss(s);
    for (std::string part; std::getline(ss, part, ':');) parts.push_back(part);
    if (parts.size() != 3) {
      throw InvalidArgument(fmt::format("alpha range '{}' must be start:stop:step", text));
    }
    const double start = number(parts[0]);
    const double stop = number(parts[1]);
    const double step = number(parts[2]);
    if (!(step > 0.0) || stop < start) {
      throw InvalidArgument(fmt::format("alpha range '{}' is empty or has a non-positive step", text));
    }
    const auto count = static_cast<long>(std::floor((stop - start) / step + 1e-9));
    for (long i = 0; i <= count; ++i) {
      // Snap to 12 decimals so 0:1:0.01 yields exactly i / 100.
      out.push_back(std::round((start + static_cast<double>(i) * step) * 1e12) / 1e12);
    }
  } else {
    std::stringstream ss(s);
    for (std::string part; std::getline(ss, part, ',');) {
      part.erase(0, part.find_first_not_of(" \t"));
      part.erase(part.find_last_not_of(" \t") + 1);
      if (!part.empty()) out.push_back(number(part));
    }
  }
  if (out.empty()) {
    throw InvalidArgument("alpha grid is empty");
  }
  for (double a : out) static_cast<void>(FusionWeight{a});
  return out;
}

SweepGrid sweep(const Dataset& d_val, std::span<const double> alphas, std::span<const int> layers,
                const LayerFeatureLoader& load, const APConfig& ap, int jobs) {
  if (alphas.empty() || layers.empty()) {
    throw InvalidArgument("sweep needs at least one alpha and one layer");
  }
  if (d_val.participants().empty()) {
    throw InvalidArgument("sweep needs at least one validation participant");
  }
  for (double a : alphas) static_cast<void>(FusionWeight{a});
  SweepGrid grid;
  grid.alphas.assign(alphas.begin(), alphas.end());
  grid.layers.assign(layers.begin(), layers.end());
  grid.mean_ari.assign(alphas.size() * layers.size(), 0.0);
  grid.mean_nmi.assign(alphas.size() * layers.size(), 0.0);

  const auto& pids = d_val.participants();
  std::vector<std::vector<int>> truth;
  for (const auto& pid : pids) truth.push_back(truth_labels(d_val, pid));

  for (std::size_t li = 0; li < layers.size(); ++li) {
    struct Cached {
      DistanceMatrix local;
      DistanceMatrix global;
    };
    std::vector<Cached> cache(pids.size());
    for (std::size_t p = 0; p < pids.size(); ++p) {
      auto f = load(pids[p], layers[li]);
      if (f.global.size() != truth[p].size() || f.local.size() != truth[p].size()) {
        throw InvalidArgument(fmt::format("features for participant {} at layer {} cover {} / {} images, expected {}",
                                          pids[p], layers[li], f.global.size(), f.local.size(), truth[p].size()));
      }
      cache[p] = {pairwise_distances(f.local), pairwise_distances(f.global)};
    }
    parallel_for(alphas.size(), jobs, [&](std::size_t ai) {
      const FusionWeight w(alphas[ai]);
      double ari_sum = 0.0;
      double nmi_sum = 0.0;
      for (std::size_t p = 0; p < pids.size(); ++p) {
        std::vector<int> labels;
        if (truth[p].size() == 1) {
          labels = {0};
        } else {
          labels = affinity_propagation(fuse(cache[p].local, cache[p].global, w), ap).labels;
        }
        const PartitionPair pair{std::move(labels), truth[p]};
        ari_sum += adjusted_rand_index(pair);
        nmi_sum += normalized_mutual_info(pair);
      }
      grid.mean_ari[ai * layers.size() + li] = ari_sum / static_cast<double>(pids.size());
      grid.mean_nmi[ai * layers.size() + li] = nmi_sum / static_cast<double>(pids.size());
    });
  }

  // Visit cells by ascending alpha, then ascending layer; keep the first maximum.
  std::vector<std::size_t> alpha_order(alphas.size());
  std::iota(alpha_order.begin(), alpha_order.end(), std::size_t{0});
  std::stable_sort(alpha_order.begin(), alpha_order.end(), [&](auto a, auto b) { return alphas[a] < alphas[b]; });
  std::vector<std::size_t> layer_order(layers.size());
  std::iota(layer_order.begin(), layer_order.end(), std::size_t{0});
  std::stable_sort(layer_order.begin(), layer_order.end(), [&](auto a, auto b) { return layers[a] < layers[b]; });
  bool first = true;
  for (auto ai : alpha_order) {
    for (auto li : layer_order) {
      const double v = grid.ari(ai, li);
      if (first || v > grid.best_ari) {
        grid.best_ari = v;
        grid.best_alpha = alphas[ai];
        grid.best_layer = layers[li];
        first = false;
      }
    }
  }
  return grid;
}

std::string sweep_grid_csv(const SweepGrid& g) {
  std::string out = "alpha";
  for (int m : g.layers) out += fmt::format(",layer_{}", m);
  out += '\n';
  for (std::size_t ai = 0; ai < g.alphas.size(); ++ai) {
    out += fmt::format("{}", g.alphas[ai]);
    for (std::size_t li = 0; li < g.layers.size(); ++li) out += fmt::format(",{:.6f}", g.ari(ai, li));
    out += '\n';
  }
  return out;
}

nlohmann::json sweep_summary_json(const SweepGrid& g) {
  nlohmann::json cells = nlohmann::json::array();
  for (std::size_t ai = 0; ai < g.alphas.size(); ++ai) {
    for (std::size_t li = 0; li < g.layers.size(); ++li) {
      cells.push_back({{"alpha", g.alphas[ai]}, {"layer", g.layers[li]}, {"mean_ari", g.ari(ai, li)},
                       {"mean_nmi", g.nmi(ai, li)}});
    }
  }
  return {{"best", {{"alpha", g.best_alpha}, {"layer", g.best_layer}, {"mean_ari", g.best_ari}}},
          {"alphas", g.alphas.size()},
          {"layers", g.layers},
          {"cells", cells}};
}

std::vector<std::uint8_t> sweep_heatmap_png(const SweepGrid& g) {
  constexpr int kCell = 8;
  const int cols = static_cast<int>(g.alphas.size());
  const int rows = static_cast<int>(g.layers.size());
  cv::Mat values(rows, cols, CV_8UC1);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      // ARI in [-1, 1] mapped onto [0, 255].
      const double v = std::clamp((g.ari(static_cast<std::size_t>(c), static_cast<std::size_t>(r)) + 1.0) / 2.0, 0.0, 1.0);
      values.at<std::uint8_t>(r, c) = static_cast<std::uint8_t>(std::lround(v * 255.0));
    }
  }
  cv::Mat big;
  cv::resize(values, big, cv::Size(cols * kCell, rows * kCell * 4), 0.0, 0.0, cv::INTER_NEAREST);
  cv::Mat colored;
  cv::applyColorMap(big, colored, cv::COLORMAP_VIRIDIS);
  std::vector<std::uint8_t> out;
  if (!cv::imencode(".png", colored, out)) {
    throw IoError("heat-map PNG encoding failed");
  }
  return out;
}

}  // namespace scene_cluster
