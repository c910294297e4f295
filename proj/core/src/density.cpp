#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <numeric>

#include <fmt/format.h>

#include "scene_cluster/clustering.hpp"
#include "scene_cluster/error.hpp"

namespace scene_cluster {

Clustering dbscan(const DistanceMatrix& d, double eps, int min_pts) {
  if (!(eps > 0.0)) {
    throw InvalidArgument(fmt::format("DBSCAN eps must be positive, got {}", eps));
  }
  if (min_pts < 1) {
    throw InvalidArgument(fmt::format("DBSCAN min_pts must be >= 1, got {}", min_pts));
  }
  const std::size_t n = d.size();
  std::vector<std::vector<std::size_t>> neighbours(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (d(i, j) <= eps) neighbours[i].push_back(j);
    }
  }
  const auto is_core = [&](std::size_t i) { return neighbours[i].size() >= static_cast<std::size_t>(min_pts); };

  constexpr int kUnvisited = -2;
  std::vector<int> labels(n, kUnvisited);
  int next = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (labels[i] != kUnvisited) continue;
    if (!is_core(i)) {
      labels[i] = kNoise;
      continue;
    }
    const int cluster = next++;
    labels[i] = cluster;
    std::deque<std::size_t> queue(neighbours[i].begin(), neighbours[i].end());
    while (!queue.empty()) {
      const std::size_t j = queue.front();
      queue.pop_front();
      if (labels[j] == kNoise) labels[j] = cluster;  // border point
      if (labels[j] != kUnvisited) continue;
      labels[j] = cluster;
      if (is_core(j)) queue.insert(queue.end(), neighbours[j].begin(), neighbours[j].end());
    }
  }
  Clustering c;
  c.labels = std::move(labels);
  return c;
}

namespace {

double squared_distance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += (a[k] - b[k]) * (a[k] - b[k]);
  return s;
}

}  // namespace

Clustering mean_shift(std::span<const FeatureVector> vectors, double bandwidth) {
  if (!(bandwidth > 0.0)) {
    throw InvalidArgument(fmt::format("mean-shift bandwidth must be positive, got {}", bandwidth));
  }
  const std::size_t n = vectors.size();
  if (n == 0) return {};
  const std::size_t dim = vectors[0].dim();
  std::vector<std::vector<double>> points(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (vectors[i].dim() != dim) {
      throw InvalidArgument("mean-shift vectors differ in dimension");
    }
    points[i].assign(vectors[i].values.begin(), vectors[i].values.end());
  }

  const double radius2 = bandwidth * bandwidth;
  const double stop = 1e-4 * bandwidth;
  constexpr int kMaxIterations = 300;
  struct Mode {
    std::vector<double> position;
    std::size_t support;
    std::size_t seed;
  };
  std::vector<Mode> modes;
  for (std::size_t s = 0; s < n; ++s) {
    std::vector<double> x = points[s];
    std::size_t support = 0;
    for (int it = 0; it < kMaxIterations; ++it) {
      std::vector<double> mean(dim, 0.0);
      support = 0;
      for (const auto& p : points) {
        if (squared_distance(p, x) <= radius2) {
          for (std::size_t k = 0; k < dim; ++k) mean[k] += p[k];
          ++support;
        }
      }
      if (support == 0) break;
      for (auto& m : mean) m /= static_cast<double>(support);
      const double shift = std::sqrt(squared_distance(mean, x));
      x = std::move(mean);
      if (shift < stop) break;
    }
    modes.push_back({std::move(x), support, s});
  }

  std::stable_sort(modes.begin(), modes.end(), [](const Mode& a, const Mode& b) { return a.support > b.support; });
  const double merge2 = (bandwidth / 2.0) * (bandwidth / 2.0);
  std::vector<const Mode*> kept;
  for (const auto& m : modes) {
    const bool close = std::any_of(kept.begin(), kept.end(),
                                   [&](const Mode* k) { return squared_distance(k->position, m.position) <= merge2; });
    if (!close) kept.push_back(&m);
  }

  Clustering c;
  c.labels.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < kept.size(); ++k) {
      const double dd = squared_distance(points[i], kept[k]->position);
      if (dd < best_d) {
        best_d = dd;
        best = k;
      }
    }
    c.labels[i] = static_cast<int>(best);
  }
  c.labels = compact_labels(c.labels);
  return c;
}

namespace {

struct SteepArea {
  std::size_t start;
  std::size_t end;
  double mib;
};

// Extends a steep region while at most min_samples consecutive non-steep
// points continue in the same direction.
std::size_t extend_region(const std::vector<bool>& steep, const std::vector<bool>& xward, std::size_t start,
                          int min_samples) {
  const std::size_t n = steep.size();
  int non_xward = 0;
  std::size_t end = start;
  for (std::size_t index = start; index < n; ++index) {
    if (steep[index]) {
      non_xward = 0;
      end = index;
    } else if (!xward[index]) {
      ++non_xward;
      if (non_xward > min_samples) break;
    } else {
      return end;
    }
  }
  return end;
}

void filter_steep_down_areas(std::vector<SteepArea>& areas, double mib, double xi_complement,
                             const std::vector<double>& plot) {
  if (std::isinf(mib)) {
    areas.clear();
    return;
  }
  std::erase_if(areas, [&](const SteepArea& a) { return mib > plot[a.start] * xi_complement; });
  for (auto& a : areas) a.mib = std::max(a.mib, mib);
}

bool correct_predecessor(const std::vector<double>& plot, const std::vector<long>& predecessor_plot,
                         const std::vector<std::size_t>& ordering, std::size_t& s, std::size_t& e) {
  while (s < e) {
    if (plot[s] > plot[e]) return true;
    const long p_e = predecessor_plot[e];
    for (std::size_t i = s; i < e; ++i) {
      if (p_e == static_cast<long>(ordering[i])) return true;
    }
    --e;
  }
  return false;
}

std::vector<std::pair<std::size_t, std::size_t>> xi_clusters(std::vector<double> plot,
                                                             const std::vector<long>& predecessor_plot,
                                                             const std::vector<std::size_t>& ordering, double xi,
                                                             int min_samples, int min_cluster_size) {
  const std::size_t n = plot.size();
  plot.push_back(std::numeric_limits<double>::infinity());
  const double xi_complement = 1.0 - xi;
  std::vector<bool> steep_up(n), steep_down(n), down(n), up(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double ratio = plot[i] / plot[i + 1];  // NaN for inf/inf: every comparison is false
    steep_up[i] = ratio <= xi_complement;
    steep_down[i] = ratio >= 1.0 / xi_complement;
    down[i] = ratio > 1.0;
    up[i] = ratio < 1.0;
  }

  std::vector<SteepArea> sdas;
  std::vector<std::pair<std::size_t, std::size_t>> clusters;
  std::size_t index = 0;
  double mib = 0.0;
  for (std::size_t steep_index = 0; steep_index < n; ++steep_index) {
    if (!(steep_up[steep_index] || steep_down[steep_index]) || steep_index < index) continue;
    for (std::size_t k = index; k <= steep_index; ++k) mib = std::max(mib, plot[k]);

    if (steep_down[steep_index]) {
      filter_steep_down_areas(sdas, mib, xi_complement, plot);
      const std::size_t d_end = extend_region(steep_down, up, steep_index, min_samples);
      sdas.push_back({steep_index, d_end, 0.0});
      index = d_end + 1;
      mib = plot[index];
    } else {
      filter_steep_down_areas(sdas, mib, xi_complement, plot);
      const std::size_t u_start = steep_index;
      const std::size_t u_end = extend_region(steep_up, down, u_start, min_samples);
      index = u_end + 1;
      mib = plot[index];

      std::vector<std::pair<std::size_t, std::size_t>> found;
      for (const auto& sda : sdas) {
        std::size_t c_start = sda.start;
        std::size_t c_end = u_end;
        if (plot[c_end + 1] * xi_complement < sda.mib) continue;
        const double d_max = plot[sda.start];
        if (d_max * xi_complement >= plot[c_end + 1]) {
          while (plot[c_start + 1] > plot[c_end + 1] && c_start < sda.end) ++c_start;
        } else if (plot[c_end + 1] * xi_complement >= d_max) {
          while (c_end > u_start && plot[c_end - 1] > d_max) --c_end;
        }
        if (!correct_predecessor(plot, predecessor_plot, ordering, c_start, c_end)) continue;
        if (c_end - c_start + 1 < static_cast<std::size_t>(min_cluster_size)) continue;
        if (c_start > sda.end) continue;
        if (c_end < u_start) continue;
        found.emplace_back(c_start, c_end);
      }
      // Smaller (inner) clusters first.
      clusters.insert(clusters.end(), found.rbegin(), found.rend());
    }
  }
  return clusters;
}

}  // namespace

OpticsResult optics(const DistanceMatrix& d, int min_samples, double xi, std::optional<int> min_cluster_size) {
  if (min_samples < 2) {
    throw InvalidArgument(fmt::format("OPTICS min_samples must be >= 2, got {}", min_samples));
  }
  if (!(xi > 0.0 && xi < 1.0)) {
    throw InvalidArgument(fmt::format("OPTICS xi must lie in (0, 1), got {}", xi));
  }
  const int min_size = min_cluster_size.value_or(min_samples);
  if (min_size < 1) {
    throw InvalidArgument("OPTICS min_cluster_size must be >= 1");
  }
  const std::size_t n = d.size();
  constexpr double kInf = std::numeric_limits<double>::infinity();
  OpticsResult res;
  res.reachability.assign(n, kInf);
  res.core_distance.assign(n, kInf);
  res.predecessor.assign(n, -1);
  res.clustering.labels.assign(n, kNoise);
  if (n < static_cast<std::size_t>(min_samples)) {
    res.ordering.resize(n);
    std::iota(res.ordering.begin(), res.ordering.end(), std::size_t{0});
    return res;
  }

  // Core distance: distance to the min_samples-th nearest item, counting the item itself.
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> row(d.entries().begin() + static_cast<long>(i * n),
                            d.entries().begin() + static_cast<long>((i + 1) * n));
    std::nth_element(row.begin(), row.begin() + (min_samples - 1), row.end());
    res.core_distance[i] = row[static_cast<std::size_t>(min_samples - 1)];
  }

  std::vector<bool> processed(n, false);
  for (std::size_t step = 0; step < n; ++step) {
    // Next point: smallest reachability among unprocessed, ties to the lowest index.
    std::size_t point = n;
    for (std::size_t i = 0; i < n; ++i) {
      if (processed[i]) continue;
      if (point == n || res.reachability[i] < res.reachability[point]) point = i;
    }
    processed[point] = true;
    res.ordering.push_back(point);
    for (std::size_t o = 0; o < n; ++o) {
      if (processed[o]) continue;
      const double reach = std::max(res.core_distance[point], d(point, o));
      if (reach < res.reachability[o]) {
        res.reachability[o] = reach;
        res.predecessor[o] = static_cast<long>(point);
      }
    }
  }

  std::vector<double> plot(n);
  std::vector<long> predecessor_plot(n);
  for (std::size_t i = 0; i < n; ++i) {
    plot[i] = res.reachability[res.ordering[i]];
    predecessor_plot[i] = res.predecessor[res.ordering[i]];
  }
  const auto clusters = xi_clusters(plot, predecessor_plot, res.ordering, xi, min_samples, min_size);

  std::vector<int> ordered(n, kNoise);
  int label = 0;
  for (const auto& [s, e] : clusters) {
    const bool free = std::all_of(ordered.begin() + static_cast<long>(s), ordered.begin() + static_cast<long>(e) + 1,
                                  [](int l) { return l == kNoise; });
    if (free) {
      std::fill(ordered.begin() + static_cast<long>(s), ordered.begin() + static_cast<long>(e) + 1, label);
      ++label;
    }
  }
  for (std::size_t i = 0; i < n; ++i) res.clustering.labels[res.ordering[i]] = ordered[i];
  res.clustering.labels = compact_labels(res.clustering.labels);
  return res;
}

}  // namespace scene_cluster
