#include "ssvcqr/rng.hpp"

#include <cmath>

namespace ssvcqr {

namespace {

constexpr std::uint64_t kGamma = 0x9E3779B97F4A7C15ULL;

// SplitMix64 finalizer (Stafford mix13).
std::uint64_t mix64(std::uint64_t z) {
  z ^= z >> 30;
  z *= 0xBF58476D1CE4E5B9ULL;
  z ^= z >> 27;
  z *= 0x94D049BB133111EBULL;
  z ^= z >> 31;
  return z;
}

}  // namespace

CounterRng::CounterRng(std::uint64_t seed, std::uint64_t stream)
    : key_(mix64(mix64(seed + kGamma) ^ mix64(stream * kGamma + 1))) {}

CounterRng CounterRng::substream(std::uint64_t id) const {
  CounterRng r(key_, id + 0x51ED2701A9B3C24FULL);
  return r;
}

std::uint64_t CounterRng::next_u64() {
  return mix64(key_ + (++counter_) * kGamma);
}

double CounterRng::next_double() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double CounterRng::uniform(double a, double b) {
  return a + next_double() * (b - a);
}

double CounterRng::normal() {
  // Guard u1 away from 0 so the log is finite.
  double u1 = next_double();
  double u2 = next_double();
  if (u1 < 0x1.0p-53) u1 = 0x1.0p-53;
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

double CounterRng::exponential() {
  double u = next_double();
  if (u >= 1.0) u = 1.0 - 0x1.0p-53;
  return -std::log1p(-u);
}

double CounterRng::cauchy() {
  double u = next_double();
  if (u <= 0.0) u = 0x1.0p-53;
  return std::tan(M_PI * (u - 0.5));
}

double CounterRng::student_t3() {
  const double z = normal();
  double chi2 = 0.0;
  for (int i = 0; i < 3; ++i) {
    const double g = normal();
    chi2 += g * g;
  }
  return z / std::sqrt(chi2 / 3.0);
}

}  // namespace ssvcqr
