#pragma once

#include <cstdint>
#include <string_view>

namespace vsbbm {

// Stateless 64-bit mixer (splitmix64 finalizer). Bijective on uint64.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// FNV-1a over the bytes of a label, then mixed.
std::uint64_t hash_label(std::string_view label) noexcept;

// Key for a sub-stream: derived from a parent key and an index. Used for
// per-node streams so that draws do not depend on traversal order.
constexpr std::uint64_t derive_key(std::uint64_t parent, std::uint64_t index) noexcept {
  return mix64(parent ^ mix64(index ^ 0xd1b54a32d192ed03ULL));
}

// Counter-based generator: the i-th output is a pure function of (key, i).
// Cheap to construct, so one instance per tree node / replicate is fine.
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t key) noexcept : key_(key) {}

  std::uint64_t next_u64() noexcept {
    return mix64(key_ ^ mix64(counter_++ * 0x9e3779b97f4a7c15ULL));
  }
  // Uniform on the open interval (0, 1).
  double uniform() noexcept {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
  }
  // Exp(rate) by inversion.
  double exponential(double rate = 1.0) noexcept;
  // Standard normal by inversion (one uniform per draw).
  double normal() noexcept;

  std::uint64_t key() const noexcept { return key_; }
  std::uint64_t counter() const noexcept { return counter_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

// Inverse of the standard normal CDF (Wichura AS241, ~1e-16 relative).
double normal_quantile(double p) noexcept;

// Derived seed for (master, replicate, stream label). Stable across versions:
// only mix64 and FNV-1a are involved.
std::uint64_t seed_stream(std::uint64_t master, std::uint64_t replicate,
                          std::string_view stream) noexcept;

}  // namespace vsbbm
