#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace omnigraph {

/// 64-bit FNV-1a. Used for deterministic content digests (attempt outcomes,
/// mock tool payload tags, trace file fingerprints). Not cryptographic.
inline std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t h = 0xcbf29ce484222325ull) {
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

/// Fixed-width lowercase hex rendering of a digest.
inline std::string digest_hex(std::uint64_t h) {
  static const char* hexd = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[static_cast<std::size_t>(i)] = hexd[h & 0xf];
    h >>= 4;
  }
  return out;
}

inline std::string digest_hex(std::string_view bytes) { return digest_hex(fnv1a64(bytes)); }

}  // namespace omnigraph
