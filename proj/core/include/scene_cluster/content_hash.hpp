#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <string_view>

namespace scene_cluster {

/// Incremental 64-bit content hash (leading 8 bytes of SHA-256, big-endian).
/// Every update is length-prefixed, so ("ab", "c") and ("a", "bc") differ.
class ContentHasher {
 public:
  ContentHasher();
  ~ContentHasher();
  ContentHasher(const ContentHasher&) = delete;
  ContentHasher& operator=(const ContentHasher&) = delete;

  ContentHasher& update(std::span<const std::uint8_t> bytes);
  ContentHasher& update(std::string_view text);
  ContentHasher& update(std::uint64_t value);
  ContentHasher& update_file(const std::filesystem::path& path);

  /// Finalizes; the hasher must not be updated afterwards.
  std::uint64_t digest();

 private:
  struct State;
  std::unique_ptr<State> state_;
};

std::uint64_t content_hash(std::string_view text);
/// 16 lowercase hex digits.
std::string hash_hex(std::uint64_t h);

}  // namespace scene_cluster
