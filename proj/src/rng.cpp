#include "lbtsim/rng.hpp"

#include <cmath>
#include <stdexcept>

namespace lbtsim {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

RngStream::RngStream(std::uint64_t seed, std::uint64_t stream_id)
    : state_(0), inc_(0), stream_id_(stream_id) {
  // Reference PCG32 seeding: the stream selector must be odd.
  const std::uint64_t initseq = splitmix64(stream_id ^ 0x5851f42d4c957f2dULL);
  const std::uint64_t initstate = splitmix64(seed ^ splitmix64(stream_id));
  inc_ = (initseq << 1u) | 1u;
  next_u32();
  state_ += initstate;
  next_u32();
}

std::uint32_t RngStream::next_u32() {
  const std::uint64_t old = state_;
  state_ = old * 6364136223846793005ULL + inc_;
  const auto xorshifted = static_cast<std::uint32_t>(((old >> 18u) ^ old) >> 27u);
  const auto rot = static_cast<std::uint32_t>(old >> 59u);
  return (xorshifted >> rot) | (xorshifted << ((32u - rot) & 31u));
}

std::uint32_t RngStream::uniform_u32(std::uint32_t bound) {
  if (bound == 0) throw std::logic_error("RngStream::uniform_u32: bound must be >= 1");
  // Debiased modulo (Lemire-style rejection on the low slice).
  const std::uint32_t threshold = -bound % bound;
  for (;;) {
    const std::uint32_t r = next_u32();
    if (r >= threshold) return r % bound;
  }
}

Duration RngStream::uniform_us(Duration lo, Duration hi) {
  if (lo > hi) throw std::logic_error("RngStream::uniform_us: lo > hi");
  const std::uint64_t span = static_cast<std::uint64_t>(hi - lo) + 1;
  if (span == 1) return lo;
  if (span > 0xffffffffULL)
    throw std::logic_error("RngStream::uniform_us: span exceeds 32-bit range");
  return lo + static_cast<Duration>(uniform_u32(static_cast<std::uint32_t>(span)));
}

double RngStream::uniform01() {
  return (static_cast<double>(next_u32()) + 0.5) * 0x1p-32;
}

Duration RngStream::exponential_us(double mean_us) {
  if (mean_us <= 0.0) throw std::logic_error("RngStream::exponential_us: mean must be positive");
  const double d = -mean_us * std::log(uniform01());
  const auto us = static_cast<Duration>(d);
  return us < 1 ? 1 : us;
}

}  // namespace lbtsim
