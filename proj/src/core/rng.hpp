#pragma once

#include <cstdint>
#include <initializer_list>
#include <string_view>

namespace sa {

// splitmix64 finalizer. Pure integer arithmetic, identical on every platform.
constexpr std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

// FNV-1a over the bytes of s, folded into h.
std::uint64_t hash_str(std::uint64_t h, std::string_view s);

// Counter-based generator: the n-th output is a pure function of (key, n).
// Substreams are derived by mixing labels into the key, so parallel callers
// get schedule-independent, reproducible draws.
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t key) : key_(key) {}

  std::uint64_t next_u64() {
    return mix64(key_ + 0x9e3779b97f4a7c15ull * ++counter_);
  }

  // Uniform in [0, 1) with 53 bits of precision.
  double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Uniform in [0, n). Lemire multiply-shift; n must be > 0.
  std::uint64_t next_below(std::uint64_t n) {
    return static_cast<std::uint64_t>(
        (static_cast<unsigned __int128>(next_u64()) * n) >> 64);
  }

  static std::uint64_t derive(std::uint64_t seed,
                              std::initializer_list<std::uint64_t> parts);
  static std::uint64_t derive_labeled(std::uint64_t seed, std::string_view label,
                                      std::initializer_list<std::uint64_t> parts);

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace sa
