#pragma once

/// \file rng.hpp
/// Counter-based random streams.
///
/// A stream is addressed by (seed, path, component, lane) and its i-th raw
/// output is a pure function of that address and i, so draws never depend on
/// which thread produced them or in which order paths were visited.

#include <cmath>
#include <cstdint>
#include <numbers>

namespace hitlab {

namespace detail {

inline constexpr std::uint64_t golden_gamma = 0x9e3779b97f4a7c15ULL;

/// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z)
{
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace detail

class Stream
{
 public:
  Stream(std::uint64_t seed, std::uint64_t path, std::uint64_t component = 0,
         std::uint64_t lane = 0)
  {
    using detail::mix64;
    std::uint64_t k = mix64(seed + detail::golden_gamma);
    k = mix64(k ^ (path + 0x632be59bd9b4e019ULL));
    k = mix64(k ^ (component * 0xd1b54a32d192ed03ULL + 0x8cb92ba72f3d8dd7ULL));
    k = mix64(k ^ (lane * 0xaef17502108ef2d9ULL + 0x2545f4914f6cdd1dULL));
    key_ = k;
  }

  std::uint64_t next_u64() { return detail::mix64(key_ + (++counter_) * detail::golden_gamma); }

  /// Uniform on (0, 1), never exactly 0 or 1.
  double uniform() { return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53; }

  /// Standard normal by Box-Muller; the second variate of each pair is kept.
  double normal()
  {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double u = uniform(), v = uniform();
    const double r = std::sqrt(-2.0 * std::log(u));
    const double a = 2.0 * std::numbers::pi * v;
    spare_ = r * std::sin(a);
    has_spare_ = true;
    return r * std::cos(a);
  }

  template <class It>
  void fill_normal(It first, It last)
  {
    for (; first != last; ++first) *first = normal();
  }

 private:
  std::uint64_t key_ = 0;
  std::uint64_t counter_ = 0;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace hitlab
