// Copyright 2026 The sepasr Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#ifndef SEPASR_RANDOM_HPP
#define SEPASR_RANDOM_HPP

#include <cstdint>
#include <random>
#include <string_view>

namespace sepasr {

// One master seed per experiment; every component derives its own stream by
// labeled hashing so that changing iteration order or parallelizing work
// cannot change any drawn value.

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t master, std::string_view label,
                                 std::uint64_t index = 0) {
  std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a over the label bytes
  for (char c : label) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return splitmix64(splitmix64(master ^ h) ^ index);
}

inline std::mt19937_64 make_rng(std::uint64_t master, std::string_view label,
                                std::uint64_t index = 0) {
  return std::mt19937_64(derive_seed(master, label, index));
}

}  // namespace sepasr

#endif  // SEPASR_RANDOM_HPP
