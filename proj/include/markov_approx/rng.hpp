#pragma once

#include <array>
#include <cstdint>
#include <limits>
#include <random>

namespace markov_approx {

/// Counter-based random stream (Philox4x32-10).
///
/// A stream is identified by (seed, stream_id); the block counter advances as
/// draws are consumed. Two streams with distinct identifiers never share a
/// Philox input block, so they are independent by construction and can be
/// handed to separate workers without coordination.
class RngStream {
 public:
  using result_type = std::uint64_t;

  RngStream() : RngStream(0, 0) {}
  RngStream(std::uint64_t seed, std::uint64_t stream_id);

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()();

  /// Uniform on the open interval (0, 1), 53 bits of resolution.
  double uniform();
  double normal() { return normal_(*this); }
  double exponential() { return exponential_(*this); }

  /// Derived stream whose identifier is a hash of (stream_id, index).
  /// Children of the same parent with different indices are distinct streams.
  RngStream child(std::uint64_t index) const;

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream_id() const { return stream_id_; }
  std::uint64_t counter() const { return counter_; }

 private:
  void refill();

  std::uint64_t seed_;
  std::uint64_t stream_id_;
  std::uint64_t counter_ = 0;
  std::array<std::uint64_t, 2> block_{};
  int cursor_ = 2;
  std::normal_distribution<double> normal_;
  std::exponential_distribution<double> exponential_;
};

std::uint64_t splitmix64(std::uint64_t x);

// Raw Philox4x32-10 block function.
std::array<std::uint32_t, 4> philox4x32_10(std::array<std::uint32_t, 4> ctr,
                                           std::array<std::uint32_t, 2> key);

}  // namespace markov_approx
