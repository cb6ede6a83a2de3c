#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace evlat {

/// FNV-1a 64-bit; used for stream splitting and artifact fingerprints so
/// outputs stay identical across standard libraries.
inline std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

std::string to_hex(std::uint64_t x);

/// FNV-1a fingerprint of a file's bytes, as a hex string.
std::string hash_file(const std::string& path);

}  // namespace evlat
