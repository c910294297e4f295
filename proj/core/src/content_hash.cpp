#include "scene_cluster/content_hash.hpp"

#include <array>

#include <fmt/format.h>
#include <openssl/evp.h>

#include "scene_cluster/error.hpp"
#include "scene_cluster/image.hpp"

namespace scene_cluster {

struct ContentHasher::State {
  EVP_MD_CTX* ctx = nullptr;
  bool finished = false;
};

ContentHasher::ContentHasher() : state_(std::make_unique<State>()) {
  state_->ctx = EVP_MD_CTX_new();
  if (state_->ctx == nullptr || EVP_DigestInit_ex(state_->ctx, EVP_sha256(), nullptr) != 1) {
    throw Error("cannot initialize SHA-256");
  }
}

ContentHasher::~ContentHasher() { EVP_MD_CTX_free(state_->ctx); }

ContentHasher& ContentHasher::update(std::span<const std::uint8_t> bytes) {
  if (state_->finished) throw Error("hasher already finalized");
  std::array<std::uint8_t, 8> len{};
  const auto n = static_cast<std::uint64_t>(bytes.size());
  for (int i = 0; i < 8; ++i) len[static_cast<std::size_t>(i)] = static_cast<std::uint8_t>(n >> (8 * i));
  EVP_DigestUpdate(state_->ctx, len.data(), len.size());
  if (!bytes.empty()) EVP_DigestUpdate(state_->ctx, bytes.data(), bytes.size());
  return *this;
}

ContentHasher& ContentHasher::update(std::string_view text) {
  return update(std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

ContentHasher& ContentHasher::update(std::uint64_t value) {
  std::array<std::uint8_t, 8> le{};
  for (int i = 0; i < 8; ++i) le[static_cast<std::size_t>(i)] = static_cast<std::uint8_t>(value >> (8 * i));
  return update(std::span<const std::uint8_t>(le));
}

ContentHasher& ContentHasher::update_file(const std::filesystem::path& path) {
  const auto bytes = read_file_bytes(path);
  return update(std::span<const std::uint8_t>(bytes));
}

std::uint64_t ContentHasher::digest() {
  if (state_->finished) throw Error("hasher already finalized");
  std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
  unsigned int len = 0;
  EVP_DigestFinal_ex(state_->ctx, md.data(), &len);
  state_->finished = true;
  std::uint64_t h = 0;
  for (int i = 0; i < 8; ++i) h = (h << 8) | md[static_cast<std::size_t>(i)];
  return h;
}

std::uint64_t content_hash(std::string_view text) { return ContentHasher().update(text).digest(); }

std::string hash_hex(std::uint64_t h) { return fmt::format("{:016x}", h); }

}  // namespace scene_cluster
