#pragma once

#include <cstdint>

namespace heavyclip {

/// Counter-based random stream keyed by (seed, stream id).
///
/// Every draw is a pure function of (seed, stream id, counter), so a stream
/// can be recreated anywhere and replays bit-identically. Sub-streams for a
/// trial, an iteration or a restart are derived with `child`, which makes the
/// draws independent of the order in which trials execute.
class RngStream {
 public:
  RngStream(std::uint64_t seed, std::uint64_t stream_id);

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream_id() const { return stream_; }
  std::uint64_t counter() const { return counter_; }

  /// Deterministic sub-stream; distinct ids give unrelated streams.
  RngStream child(std::uint64_t id) const;

  std::uint64_t next_u64();

  /// Uniform on the open interval (0, 1); never returns 0 or 1.
  double uniform_open();

  /// Standard normal draw (inverse-CDF of `uniform_open`).
  double normal();

  /// Uniform integer in [0, bound).
  std::uint64_t below(std::uint64_t bound);

  // UniformRandomBitGenerator interface.
  using result_type = std::uint64_t;
  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return ~result_type{0}; }
  result_type operator()() { return next_u64(); }

 private:
  std::uint64_t seed_;
  std::uint64_t stream_;
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

/// SplitMix64 finalizer; a bijective 64-bit mixer.
std::uint64_t mix64(std::uint64_t z);

/// Inverse of the standard normal CDF (Wichura AS241, ~1e-16 relative).
double normal_quantile(double p);

/// Standard normal CDF.
double normal_cdf(double x);

}  // namespace heavyclip
