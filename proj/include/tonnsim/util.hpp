#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

namespace tonnsim {

inline constexpr double kTau = 6.283185307179586476925286766559;

// Canonical phase representative in [0, 2*pi).
inline double wrap_angle(double a) {
  double w = std::fmod(a, kTau);
  if (w < 0.0) w += kTau;
  // fmod of a tiny negative can round up to exactly 2*pi after the add
  if (w >= kTau) w = 0.0;
  return w;
}

// splitmix64; used to derive independent stream seeds from a base seed.
inline std::uint64_t mix_seed(std::uint64_t base, std::uint64_t tag) {
  std::uint64_t z = base + 0x9e3779b97f4a7c15ULL * (tag + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Round to k significant decimal figures (k >= 1). round_sig(1171.15, 3) == 1170.
inline double round_sig(double x, int k) {
  if (x == 0.0 || !std::isfinite(x)) return x;
  double mag = std::floor(std::log10(std::fabs(x)));
  double scale = std::pow(10.0, static_cast<double>(k - 1) - mag);
  return std::round(x * scale) / scale;
}

using Rng = std::mt19937_64;

inline double draw_normal(Rng& rng) {
  std::normal_distribution<double> d(0.0, 1.0);
  return d(rng);
}

inline double draw_uniform(Rng& rng, double lo, double hi) {
  std::uniform_real_distribution<double> d(lo, hi);
  return d(rng);
}

}  // namespace tonnsim
