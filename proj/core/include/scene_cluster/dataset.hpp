#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace scene_cluster {

/// One eating-occasion photo. Paths are kept exactly as written in the
/// manifest; relative paths resolve against Dataset::base_dir().
struct EatingOccasionRecord {
  std::string participant_id;
  std::string image_id;
  std::string image_path;
  std::string mask_path;
  std::optional<std::string> env_label;

  friend bool operator==(const EatingOccasionRecord&, const EatingOccasionRecord&) = default;
};

/// Ordered record list plus a participant index. Immutable once built.
/// Construction rejects duplicate (participant_id, image_id) keys.
class Dataset {
 public:
  Dataset() = default;
  explicit Dataset(std::vector<EatingOccasionRecord> records, std::filesystem::path base_dir = {});

  [[nodiscard]] const std::vector<EatingOccasionRecord>& records() const { return records_; }
  [[nodiscard]] std::size_t size() const { return records_.size(); }
  [[nodiscard]] bool empty() const { return records_.empty(); }
  [[nodiscard]] const std::filesystem::path& base_dir() const { return base_dir_; }

  /// Participant ids in order of first appearance.
  [[nodiscard]] const std::vector<std::string>& participants() const { return participant_order_; }
  [[nodiscard]] bool has_participant(std::string_view id) const;
  /// Record indices of one participant, in manifest order. Throws for unknown ids.
  [[nodiscard]] const std::vector<std::size_t>& participant_records(std::string_view id) const;

  [[nodiscard]] std::filesystem::path resolve(const std::string& path) const;

 private:
  std::vector<EatingOccasionRecord> records_;
  std::filesystem::path base_dir_;
  std::vector<std::string> participant_order_;
  std::unordered_map<std::string, std::vector<std::size_t>> index_;
};

struct DatasetSplit {
  Dataset validation;
  Dataset test;
};

enum class ViolationKind { unreadable_image, unreadable_mask, image_too_small, dimension_mismatch, participant_too_small };

struct Violation {
  ViolationKind kind;
  std::string participant_id;
  std::string image_id;  // empty for participant-level violations
  std::string message;

  friend bool operator==(const Violation&, const Violation&) = default;
};

inline constexpr std::string_view kManifestHeader = "participant_id,image_id,image_path,mask_path,env_label";

/// Parses manifest CSV text. `base_dir` is recorded for resolving relative paths.
Dataset parse_manifest(std::string_view text, const std::filesystem::path& base_dir = {});
Dataset load_manifest(const std::filesystem::path& path);
/// Header plus one row per record, quoting fields only when needed.
std::string format_manifest(const Dataset& d);

/// Checks every record's image/mask pair and participant sizes. Never throws
/// for data problems; the returned list is empty iff the dataset is usable.
std::vector<Violation> validate_dataset(const Dataset& d);

DatasetSplit split_by_participants(const Dataset& d, const std::set<std::string>& validation_ids);

/// Subset of `d` holding only the listed participants (in `d` order).
Dataset select_participants(const Dataset& d, const std::set<std::string>& ids);

}  // namespace scene_cluster
