#pragma once

#include <cstdint>
#include <limits>

namespace lbtsim {

// All simulation timing is integer microseconds. Every protocol constant
// (5 ms back-off, 4.7 ms sleep, 11.75 s run window) is exactly representable,
// so runs replay bit-identically.
using SimTime = std::int64_t;
using Duration = std::int64_t;

constexpr Duration kMillisecond = 1'000;
constexpr Duration kSecond = 1'000'000;
constexpr SimTime kNever = std::numeric_limits<SimTime>::max();

}  // namespace lbtsim
