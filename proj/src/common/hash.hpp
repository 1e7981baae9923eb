#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace s2d {

// FNV-1a, 64 bit. Content fingerprints for manifests and batch metadata.
constexpr std::uint64_t fnv1a(std::string_view data, std::uint64_t h = 0xcbf29ce484222325ULL) noexcept {
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t v);

}  // namespace s2d
