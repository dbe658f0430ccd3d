#pragma once

#include <cstdint>
#include <limits>

namespace mikt::envs {

/// xoshiro256** seeded through splitmix64.
///
/// Satisfies UniformRandomBitGenerator. Draw sequences are fully determined
/// by the seed; normal() uses Box-Muller and caches the second variate, so
/// the cache is part of the stream position.
class RngStream {
 public:
  using result_type = std::uint64_t;
  static constexpr const char* kAlgorithm = "xoshiro256**";

  explicit RngStream(std::uint64_t seed = 0);

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }
  result_type operator()();

  // Uniform on [0, 1) with 53 random bits.
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  double normal();
  // Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n);

  std::uint64_t seed() const { return seed_; }
  std::uint64_t draws() const { return draws_; }

  // Independent child stream (e.g. per environment worker).
  RngStream split(std::uint64_t stream_id) const;

 private:
  std::uint64_t seed_;
  std::uint64_t s_[4];
  std::uint64_t draws_ = 0;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace mikt::envs
