#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include <fmt/format.h>

#include "scene_cluster/clustering.hpp"
#include "scene_cluster/error.hpp"

namespace scene_cluster {

int Clustering::cluster_count() const {
  int max_label = -1;
  for (int l : labels) max_label = std::max(max_label, l);
  return max_label + 1;
}

std::vector<int> compact_labels(std::span<const int> labels) {
  std::vector<int> out(labels.size(), kNoise);
  std::vector<std::pair<int, int>> mapping;  // original -> compact
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0) continue;
    auto it = std::find_if(mapping.begin(), mapping.end(), [&](const auto& m) { return m.first == labels[i]; });
    if (it == mapping.end()) {
      mapping.emplace_back(labels[i], static_cast<int>(mapping.size()));
      out[i] = mapping.back().second;
    } else {
      out[i] = it->second;
    }
  }
  return out;
}

void APConfig::validate() const {
  if (!(damping >= 0.5 && damping < 1.0)) {
    throw InvalidArgument(fmt::format("AP damping must lie in [0.5, 1), got {}", damping));
  }
  if (convergence_window < 1 || max_iterations < convergence_window) {
    throw InvalidArgument(fmt::format("AP needs max_iterations >= convergence_window >= 1, got {} and {}",
                                      max_iterations, convergence_window));
  }
  if (preference_mode == PreferenceMode::fixed && !std::isfinite(preference)) {
    throw InvalidArgument("AP preference must be finite");
  }
}

Similarities ap_similarities(const DistanceMatrix& d, const APConfig& cfg) {
  const std::size_t n = d.size();
  Similarities s{n, std::vector<double>(n * n)};
  std::vector<double> off;
  off.reserve(n * (n - 1));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < n; ++k) {
      s(i, k) = -d(i, k);
      if (i != k) off.push_back(s(i, k));
    }
  }
  double pref = cfg.preference;
  if (cfg.preference_mode == PreferenceMode::median) {
    if (off.empty()) {
      pref = 0.0;
    } else {
      std::sort(off.begin(), off.end());
      const std::size_t m = off.size();
      pref = m % 2 == 1 ? off[m / 2] : 0.5 * (off[m / 2 - 1] + off[m / 2]);
    }
  }
  for (std::size_t k = 0; k < n; ++k) s(k, k) = pref;
  return s;
}

void add_tie_break_jitter(Similarities& s, std::uint64_t seed) {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < s.n; ++i) {
    for (std::size_t k = 0; k < s.n; ++k) {
      if (i == k) continue;
      lo = std::min(lo, s(i, k));
      hi = std::max(hi, s(i, k));
    }
  }
  const double range = hi > lo ? hi - lo : 0.0;
  if (range == 0.0) return;
  const double scale = 1e-10 * range;
  std::mt19937_64 engine(seed);
  for (auto& v : s.s) {
    const double u = static_cast<double>(engine() >> 11) * 0x1.0p-53 - 0.5;
    v += scale * u;
  }
}

MessagePassingResult ap_message_passing(const Similarities& s, const APConfig& cfg) {
  cfg.validate();
  const std::size_t n = s.n;
  const double lambda = cfg.damping;
  std::vector<double> r(n * n, 0.0);
  std::vector<double> a(n * n, 0.0);
  std::vector<std::size_t> previous;
  std::vector<std::size_t> current;
  int stable = 0;
  MessagePassingResult out;

  for (int it = 1; it <= cfg.max_iterations; ++it) {
    // r(i,k) <- s(i,k) - max_{k' != k} (a(i,k') + s(i,k'))
    for (std::size_t i = 0; i < n; ++i) {
      double best = -std::numeric_limits<double>::infinity();
      double second = best;
      std::size_t best_k = 0;
      for (std::size_t k = 0; k < n; ++k) {
        const double v = a[i * n + k] + s(i, k);
        if (v > best) {
          second = best;
          best = v;
          best_k = k;
        } else if (v > second) {
          second = v;
        }
      }
      for (std::size_t k = 0; k < n; ++k) {
        const double fresh = s(i, k) - (k == best_k ? second : best);
        r[i * n + k] = lambda * r[i * n + k] + (1.0 - lambda) * fresh;
      }
    }
    // a(i,k) <- min(0, r(k,k) + sum_{i' not in {i,k}} max(0, r(i',k)));  a(k,k) <- sum_{i' != k} max(0, r(i',k))
    for (std::size_t k = 0; k < n; ++k) {
      double positive = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        if (i != k) positive += std::max(0.0, r[i * n + k]);
      }
      const double rkk = r[k * n + k];
      for (std::size_t i = 0; i < n; ++i) {
        const double fresh = i == k ? positive : std::min(0.0, rkk + positive - std::max(0.0, r[i * n + k]));
        a[i * n + k] = lambda * a[i * n + k] + (1.0 - lambda) * fresh;
      }
    }

    current.clear();
    for (std::size_t k = 0; k < n; ++k) {
      if (r[k * n + k] + a[k * n + k] > 0.0) current.push_back(k);
    }
    stable = (it > 1 && current == previous) ? stable + 1 : 1;
    previous = current;
    out.iterations = static_cast<std::size_t>(it);
    if (stable >= cfg.convergence_window && !current.empty()) {
      out.converged = true;
      break;
    }
  }
  out.exemplars = current;
  out.evidence.resize(n);
  for (std::size_t k = 0; k < n; ++k) out.evidence[k] = r[k * n + k] + a[k * n + k];
  return out;
}

namespace {

Clustering assign_to_exemplars(const Similarities& s, std::vector<std::size_t> exemplars) {
  Clustering c;
  c.labels.assign(s.n, 0);
  for (std::size_t i = 0; i < s.n; ++i) {
    std::size_t best = 0;
    for (std::size_t e = 0; e < exemplars.size(); ++e) {
      if (exemplars[e] == i) {
        best = e;
        break;
      }
      if (s(i, exemplars[e]) > s(i, exemplars[best])) best = e;
    }
    c.labels[i] = static_cast<int>(best);
  }
  c.exemplars = std::move(exemplars);
  return c;
}

}  // namespace

Clustering affinity_propagation(Similarities s, const APConfig& cfg) {
  cfg.validate();
  const std::size_t n = s.n;
  if (n == 0) {
    throw InvalidArgument("affinity propagation needs at least one item");
  }
  if (n == 1) {
    return {{0}, {0}, true, 0};
  }

  // Constant similarities and preferences carry no information to break ties with.
  bool uniform_off = true;
  bool uniform_pref = true;
  for (std::size_t i = 0; i < n; ++i) {
    uniform_pref = uniform_pref && s(i, i) == s(0, 0);
    for (std::size_t k = 0; k < n; ++k) {
      if (i != k) uniform_off = uniform_off && s(i, k) == s(0, 1);
    }
  }
  if (uniform_off && uniform_pref) {
    Clustering c;
    c.converged = true;
    if (s(0, 0) > s(0, 1)) {
      for (std::size_t i = 0; i < n; ++i) {
        c.labels.push_back(static_cast<int>(i));
        c.exemplars.push_back(i);
      }
    } else {
      c.labels.assign(n, 0);
      c.exemplars = {0};
    }
    return c;
  }

  Similarities jittered = s;
  add_tie_break_jitter(jittered, cfg.tie_break_seed);
  auto mp = ap_message_passing(jittered, cfg);
  auto exemplars = mp.exemplars;
  if (exemplars.empty()) {
    // No point accumulated positive evidence: fall back to the single best candidate.
    const auto best = std::max_element(mp.evidence.begin(), mp.evidence.end());
    exemplars.push_back(static_cast<std::size_t>(best - mp.evidence.begin()));
  }
  Clustering c = assign_to_exemplars(s, std::move(exemplars));
  c.converged = mp.converged;
  c.iterations = mp.iterations;
  return c;
}

Clustering affinity_propagation(const DistanceMatrix& d, const APConfig& cfg) {
  cfg.validate();
  return affinity_propagation(ap_similarities(d, cfg), cfg);
}

}  // namespace scene_cluster
