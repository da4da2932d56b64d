#pragma once

#include <cstdint>

#include "lbtsim/time.hpp"

namespace lbtsim {

// Seeded per-node random stream (PCG32). std <random> distributions are not
// bit-portable across standard libraries, so the bounded draw is implemented
// here. Streams are keyed by (seed, stream_id): every node owns a stream and
// adding a node never disturbs the draw sequence of another.
class RngStream {
 public:
  RngStream() : RngStream(0, 0) {}
  RngStream(std::uint64_t seed, std::uint64_t stream_id);

  std::uint32_t next_u32();

  // Unbiased draw in [0, bound), bound >= 1.
  std::uint32_t uniform_u32(std::uint32_t bound);

  // Uniform integer microseconds on the closed range [lo, hi].
  // lo > hi is a programming error and throws.
  Duration uniform_us(Duration lo, Duration hi);

  // Uniform double in (0, 1).
  double uniform01();

  // Exponentially distributed duration (>= 1 us), for Poisson arrivals.
  Duration exponential_us(double mean_us);

  static const char* algorithm() { return "pcg32"; }

  std::uint64_t stream_id() const { return stream_id_; }

 private:
  std::uint64_t state_;
  std::uint64_t inc_;
  std::uint64_t stream_id_;
};

std::uint64_t splitmix64(std::uint64_t x);

}  // namespace lbtsim
