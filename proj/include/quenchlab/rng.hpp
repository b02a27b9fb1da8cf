#pragma once

// Counter-based random numbers. Every draw is a pure function of
// (seed, stream, key), so any subset of sites can be regenerated in any
// order and parallel fills agree bit-for-bit with sequential ones.

#include <cmath>
#include <cstdint>
#include <numbers>

namespace quenchlab {

struct SiteKey {
  std::int64_t a = 0;
  std::int64_t b = 0;
  std::int64_t c = 0;
  std::int64_t d = 0;
};

inline constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

class KeyedStream {
 public:
  constexpr KeyedStream() = default;
  constexpr explicit KeyedStream(std::uint64_t seed, std::uint64_t stream = 0) noexcept
      : root_(mix64(mix64(seed) ^ (stream * 0xd1342543de82ef95ULL + 0x632be59bd9b4e019ULL))) {}

  constexpr std::uint64_t bits(const SiteKey& k, std::uint64_t sub = 0) const noexcept {
    std::uint64_t h = root_;
    h = mix64(h ^ static_cast<std::uint64_t>(k.a));
    h = mix64(h ^ static_cast<std::uint64_t>(k.b));
    h = mix64(h ^ static_cast<std::uint64_t>(k.c));
    h = mix64(h ^ static_cast<std::uint64_t>(k.d));
    return mix64(h ^ sub);
  }

  // Uniform on the open interval (0, 1).
  double uniform(const SiteKey& k, std::uint64_t sub = 0) const noexcept {
    return (static_cast<double>(bits(k, sub) >> 11) + 0.5) * 0x1.0p-53;
  }

  double normal(const SiteKey& k) const noexcept {
    const double u1 = uniform(k, 0);
    const double u2 = uniform(k, 1);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  // A derived stream, independent of this one for practical purposes.
  constexpr KeyedStream derive(std::uint64_t stream) const noexcept {
    KeyedStream s;
    s.root_ = mix64(root_ ^ mix64(stream + 0x7f4a7c159e3779b9ULL));
    return s;
  }

 private:
  std::uint64_t root_ = 0;
};

}  // namespace quenchlab
