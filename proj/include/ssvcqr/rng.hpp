#pragma once

#include <cstdint>

namespace ssvcqr {

/**
 * Counter-based pseudo-random generator.
 *
 * Output i of a stream is a SplitMix64-style hash of (key, i), where the key
 * mixes the user seed and a stream id. Substreams are derived by hashing a
 * new id into the key, so replicates, folds, and test sets each get an
 * independent stream that depends only on (seed, id) and not on call order
 * elsewhere in the program.
 */
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t seed, std::uint64_t stream = 0);

  /// Independent generator identified by (this stream, id).
  CounterRng substream(std::uint64_t id) const;

  std::uint64_t next_u64();

  /// Uniform on [0,1) with 53 random bits.
  double next_double();

  double uniform(double a, double b);

  /// Standard normal via Box-Muller (cosine branch).
  double normal();

  /// Unit-rate exponential by inverse CDF.
  double exponential();

  /// Standard Cauchy by inverse CDF.
  double cauchy();

  /// Student t with 3 degrees of freedom: N / sqrt(chi2_3 / 3).
  double student_t3();

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace ssvcqr
