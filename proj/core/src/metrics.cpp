#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include <fmt/format.h>

#include "scene_cluster/error.hpp"
#include "scene_cluster/evaluation.hpp"

namespace scene_cluster {

namespace {

struct Contingency {
  std::size_t n = 0;
  std::map<std::pair<int, int>, std::size_t> joint;
  std::map<int, std::size_t> rows;  // predicted sizes
  std::map<int, std::size_t> cols;  // truth sizes
};

Contingency contingency(const PartitionPair& p) {
  if (p.predicted.size() != p.truth.size()) {
    throw InvalidArgument(
        fmt::format("length mismatch: {} predicted vs {} truth labels", p.predicted.size(), p.truth.size()));
  }
  if (p.predicted.empty()) {
    throw InvalidArgument("partition pair is empty");
  }
  if (std::any_of(p.truth.begin(), p.truth.end(), [](int l) { return l < 0; })) {
    throw InvalidArgument("truth labels may not contain noise");
  }
  const auto pred = noise_to_singletons(p.predicted);
  Contingency c;
  c.n = pred.size();
  for (std::size_t i = 0; i < c.n; ++i) {
    ++c.joint[{pred[i], p.truth[i]}];
    ++c.rows[pred[i]];
    ++c.cols[p.truth[i]];
  }
  return c;
}

double choose2(std::size_t k) { return 0.5 * static_cast<double>(k) * (static_cast<double>(k) - 1.0); }

}  // namespace

std::vector<int> noise_to_singletons(std::span<const int> labels) {
  int next = 0;
  for (int l : labels) next = std::max(next, l + 1);
  std::vector<int> out(labels.begin(), labels.end());
  for (auto& l : out) {
    if (l < 0) l = next++;
  }
  return out;
}

double adjusted_rand_index(const PartitionPair& p) {
  const auto c = contingency(p);
  double index = 0.0;
  for (const auto& [_, v] : c.joint) index += choose2(v);
  double sum_a = 0.0;
  for (const auto& [_, v] : c.rows) sum_a += choose2(v);
  double sum_b = 0.0;
  for (const auto& [_, v] : c.cols) sum_b += choose2(v);
  const double total = choose2(c.n);
  if (total == 0.0) return 1.0;
  const double expected = sum_a * sum_b / total;
  const double max_index = 0.5 * (sum_a + sum_b);
  if (max_index == expected) return 1.0;
  return std::clamp((index - expected) / (max_index - expected), -1.0, 1.0);
}

double normalized_mutual_info(const PartitionPair& p) {
  const auto c = contingency(p);
  const double n = static_cast<double>(c.n);
  const auto entropy = [n](const std::map<int, std::size_t>& sizes) {
    double h = 0.0;
    for (const auto& [_, v] : sizes) {
      const double q = static_cast<double>(v) / n;
      h -= q * std::log(q);
    }
    return h;
  };
  const double hu = entropy(c.rows);
  const double hv = entropy(c.cols);
  if (c.rows.size() == 1 && c.cols.size() == 1) return 1.0;
  double mi = 0.0;
  for (const auto& [key, v] : c.joint) {
    const double nij = static_cast<double>(v);
    const double a = static_cast<double>(c.rows.at(key.first));
    const double b = static_cast<double>(c.cols.at(key.second));
    mi += nij / n * std::log(n * nij / (a * b));
  }
  const double denom = 0.5 * (hu + hv);
  if (denom <= 0.0) return 1.0;
  return std::clamp(mi / denom, 0.0, 1.0);
}

std::vector<int> truth_labels(const Dataset& d, const std::string& participant_id) {
  std::vector<int> out;
  std::map<std::string, int> ids;
  for (std::size_t idx : d.participant_records(participant_id)) {
    const auto& r = d.records()[idx];
    if (!r.env_label) {
      throw InvalidArgument(fmt::format("participant {} missing truth labels (image {})", participant_id, r.image_id));
    }
    auto [it, _] = ids.try_emplace(*r.env_label, static_cast<int>(ids.size()));
    out.push_back(it->second);
  }
  return out;
}

ScoreReport score_dataset(const Dataset& d, const std::map<std::string, std::vector<int>>& predicted) {
  ScoreReport report;
  for (const auto& pid : d.participants()) {
    auto it = predicted.find(pid);
    if (it == predicted.end()) {
      throw InvalidArgument(fmt::format("no clustering for participant {}", pid));
    }
    PartitionPair pair{it->second, truth_labels(d, pid)};
    ParticipantScore s;
    s.participant_id = pid;
    s.ari = adjusted_rand_index(pair);
    s.nmi = normalized_mutual_info(pair);
    s.n_images = pair.truth.size();
    const auto pred = noise_to_singletons(pair.predicted);
    s.n_pred_clusters = std::set<int>(pred.begin(), pred.end()).size();
    s.n_true_clusters = std::set<int>(pair.truth.begin(), pair.truth.end()).size();
    report.per_participant.push_back(std::move(s));
  }
  if (!report.per_participant.empty()) {
    for (const auto& s : report.per_participant) {
      report.mean_ari += s.ari;
      report.mean_nmi += s.nmi;
    }
    report.mean_ari /= static_cast<double>(report.per_participant.size());
    report.mean_nmi /= static_cast<double>(report.per_participant.size());
  }
  return report;
}

std::string report_csv(const ScoreReport& r) {
  std::string out = "participant_id,ari,nmi,n_images,n_pred,n_true\n";
  for (const auto& s : r.per_participant) {
    out += fmt::format("{},{:.6f},{:.6f},{},{},{}\n", s.participant_id, s.ari, s.nmi, s.n_images, s.n_pred_clusters,
                       s.n_true_clusters);
  }
  return out;
}

nlohmann::json report_summary_json(const ScoreReport& r) {
  return {{"participants", r.per_participant.size()}, {"mean_ari", r.mean_ari}, {"mean_nmi", r.mean_nmi}};
}

}  // namespace scene_cluster
