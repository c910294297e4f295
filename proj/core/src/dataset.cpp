#include "scene_cluster/dataset.hpp"

#include <algorithm>
#include <sstream>

#include <fmt/format.h>

#include "scene_cluster/error.hpp"
#include "scene_cluster/image.hpp"

namespace scene_cluster {

Dataset::Dataset(std::vector<EatingOccasionRecord> records, std::filesystem::path base_dir)
    : records_(std::move(records)), base_dir_(std::move(base_dir)) {
  std::set<std::pair<std::string, std::string>> keys;
  for (std::size_t i = 0; i < records_.size(); ++i) {
    const auto& r = records_[i];
    if (!keys.emplace(r.participant_id, r.image_id).second) {
      throw InvalidArgument(fmt::format("duplicate record ({}, {})", r.participant_id, r.image_id));
    }
    auto [it, inserted] = index_.try_emplace(r.participant_id);
    if (inserted) {
      participant_order_.push_back(r.participant_id);
    }
    it->second.push_back(i);
  }
}

bool Dataset::has_participant(std::string_view id) const { return index_.contains(std::string(id)); }

const std::vector<std::size_t>& Dataset::participant_records(std::string_view id) const {
  auto it = index_.find(std::string(id));
  if (it == index_.end()) {
    throw InvalidArgument(fmt::format("unknown participant '{}'", id));
  }
  return it->second;
}

std::filesystem::path Dataset::resolve(const std::string& path) const {
  std::filesystem::path p(path);
  return p.is_absolute() || base_dir_.empty() ? p : base_dir_ / p;
}

namespace {

// RFC 4180 field splitting for a single physical line ("" escapes a quote).
std::optional<std::vector<std::string>> split_csv_line(const std::string& line) {
  std::vector<std::string> fields(1);
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        fields.back() += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        fields.back() += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.emplace_back();
    } else {
      fields.back() += c;
    }
  }
  if (quoted) return std::nullopt;
  return fields;
}

std::string csv_field(const std::string& value) {
  if (value.find_first_of(",\"\n\r") == std::string::npos) {
    return value;
  }
  std::string out = "\"";
  for (char c : value) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

}  // namespace

Dataset parse_manifest(std::string_view text, const std::filesystem::path& base_dir) {
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t row = 0;
  bool saw_header = false;
  std::vector<EatingOccasionRecord> records;
  while (std::getline(in, line)) {
    ++row;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!saw_header) {
      if (line.starts_with("\xEF\xBB\xBF")) line.erase(0, 3);
      if (line != kManifestHeader) {
        throw InvalidArgument(fmt::format("row {}: expected header '{}'", row, kManifestHeader));
      }
      saw_header = true;
      continue;
    }
    if (line.empty()) continue;
    auto parsed = split_csv_line(line);
    if (!parsed) {
      throw InvalidArgument(fmt::format("row {}: unterminated quoted field", row));
    }
    auto& fields = *parsed;
    if (fields.size() != 5) {
      throw InvalidArgument(fmt::format("row {}: expected 5 fields, got {}", row, fields.size()));
    }
    for (std::size_t f = 0; f < 4; ++f) {
      if (fields[f].empty()) {
        throw InvalidArgument(fmt::format("row {}: field {} is empty", row, f + 1));
      }
    }
    EatingOccasionRecord r{fields[0], fields[1], fields[2], fields[3], std::nullopt};
    if (!fields[4].empty()) r.env_label = fields[4];
    records.push_back(std::move(r));
  }
  if (records.empty()) {
    throw InvalidArgument("no records");
  }
  return Dataset(std::move(records), base_dir);
}

Dataset load_manifest(const std::filesystem::path& path) {
  const auto bytes = read_file_bytes(path);
  return parse_manifest(std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()),
                        path.parent_path());
}

std::string format_manifest(const Dataset& d) {
  std::string out(kManifestHeader);
  out += '\n';
  for (const auto& r : d.records()) {
    out += fmt::format("{},{},{},{},{}\n", csv_field(r.participant_id), csv_field(r.image_id),
                       csv_field(r.image_path), csv_field(r.mask_path), csv_field(r.env_label.value_or("")));
  }
  return out;
}

std::vector<Violation> validate_dataset(const Dataset& d) {
  std::vector<Violation> out;
  for (const auto& r : d.records()) {
    std::optional<std::pair<int, int>> image_dims;
    std::optional<std::pair<int, int>> mask_dims;
    try {
      const Image img = load_image(d.resolve(r.image_path));
      image_dims = {img.width(), img.height()};
    } catch (const InvalidArgument& e) {
      out.push_back({ViolationKind::image_too_small, r.participant_id, r.image_id, e.what()});
    } catch (const Error& e) {
      out.push_back({ViolationKind::unreadable_image, r.participant_id, r.image_id, e.what()});
    }
    try {
      const BinarySaliencyMask m = load_mask(d.resolve(r.mask_path));
      mask_dims = {m.width(), m.height()};
    } catch (const Error& e) {
      out.push_back({ViolationKind::unreadable_mask, r.participant_id, r.image_id, e.what()});
    }
    if (image_dims && mask_dims && *image_dims != *mask_dims) {
      out.push_back({ViolationKind::dimension_mismatch, r.participant_id, r.image_id,
                     fmt::format("dimension mismatch: image {}x{}, mask {}x{}", image_dims->first,
                                 image_dims->second, mask_dims->first, mask_dims->second)});
    }
  }
  for (const auto& p : d.participants()) {
    const auto n = d.participant_records(p).size();
    if (n < 2) {
      out.push_back({ViolationKind::participant_too_small, p, {},
                     fmt::format("participant too small: {} has {} record", p, n)});
    }
  }
  return out;
}

Dataset select_participants(const Dataset& d, const std::set<std::string>& ids) {
  std::vector<EatingOccasionRecord> kept;
  for (const auto& r : d.records()) {
    if (ids.contains(r.participant_id)) kept.push_back(r);
  }
  return Dataset(std::move(kept), d.base_dir());
}

DatasetSplit split_by_participants(const Dataset& d, const std::set<std::string>& validation_ids) {
  for (const auto& id : validation_ids) {
    if (!d.has_participant(id)) {
      throw InvalidArgument(fmt::format("unknown participant id '{}' in validation set", id));
    }
  }
  std::vector<EatingOccasionRecord> val;
  std::vector<EatingOccasionRecord> test;
  for (const auto& r : d.records()) {
    (validation_ids.contains(r.participant_id) ? val : test).push_back(r);
  }
  return {Dataset(std::move(val), d.base_dir()), Dataset(std::move(test), d.base_dir())};
}

}  // namespace scene_cluster
