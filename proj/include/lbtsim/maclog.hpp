#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "lbtsim/time.hpp"

namespace lbtsim {

enum class DriverCall : std::uint8_t {
  Send,
  Listen,
  LowPowerListen,
  PacketReceivedIrq,
  TxDoneIrq,
  SniffStart,
  SniffEnd,
};
constexpr int kDriverCallCount = 7;

const char* to_string(DriverCall c);

// One row of the per-node MAC/driver event log. The log is the ground truth
// for the trace-replay energy oracle and for post-hoc back-off auditing, so
// every driver-level transition lands here.
struct MacLogRow {
  enum class Type : std::uint8_t {
    Driver,       // a = DriverCall
    Phase,        // a = from, b = to (MacPhase values)
    DrawTps,      // a = drawn value (us)
    DrawPre,      // a = drawn value (us)
    TxStart,      // a = required idle wait (us), b = 1 if the node had deferred
    StatsReset,
    StatsFreeze,
  };
  SimTime time = 0;
  int node = -1;
  Type type = Type::Driver;
  std::int64_t a = 0;
  std::int64_t b = 0;
};

struct MacEventLog {
  std::vector<MacLogRow> rows;

  void driver(SimTime t, int node, DriverCall c) {
    rows.push_back({t, node, MacLogRow::Type::Driver, static_cast<std::int64_t>(c), 0});
  }
  void push(SimTime t, int node, MacLogRow::Type ty, std::int64_t a = 0, std::int64_t b = 0) {
    rows.push_back({t, node, ty, a, b});
  }
};

std::string describe(const MacLogRow& row);

}  // namespace lbtsim
