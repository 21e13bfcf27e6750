#include "core/rng.hpp"

namespace sa {

std::uint64_t hash_str(std::uint64_t h, std::string_view s) {
  std::uint64_t x = h ^ 0xcbf29ce484222325ull;
  for (unsigned char c : s) {
    x ^= c;
    x *= 0x100000001b3ull;
  }
  return mix64(x);
}

std::uint64_t CounterRng::derive(std::uint64_t seed,
                                 std::initializer_list<std::uint64_t> parts) {
  std::uint64_t key = mix64(seed);
  for (std::uint64_t p : parts) key = mix64(key ^ mix64(p));
  return key;
}

std::uint64_t CounterRng::derive_labeled(std::uint64_t seed, std::string_view label,
                                         std::initializer_list<std::uint64_t> parts) {
  return derive(hash_str(seed, label), parts);
}

}  // namespace sa
