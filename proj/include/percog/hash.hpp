#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace percog {

/// FNV-1a 64-bit. Used for content-addressing artifacts in run manifests and
/// for stage-skip signatures; not a cryptographic hash.
inline std::uint64_t fnv1a(std::string_view data, std::uint64_t h = 1469598103934665603ULL) {
  for (char c : data) {
    h ^= static_cast<std::uint64_t>(static_cast<unsigned char>(c));
    h *= 1099511628211ULL;
  }
  return h;
}

std::string hex64(std::uint64_t h);

/// Hash of a file's full contents; throws std::runtime_error if unreadable.
std::string hash_file(const std::string& path);

inline std::string hash_string(std::string_view s) { return hex64(fnv1a(s)); }

}  // namespace percog
