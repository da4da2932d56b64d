#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "lbtsim/maclog.hpp"
#include "lbtsim/time.hpp"

namespace lbtsim {

// Radio power states of the accounting automaton. SLEEP_LPL models the whole
// duty cycle at its average current; the alternating sleep/sniff refinement
// is selected per configuration.
enum class PowerState : std::uint8_t { SleepLpl, Rx, Tx, Idle };
constexpr int kPowerStateCount = 4;

const char* to_string(PowerState s);

struct EnergyParams {
  std::int64_t supply_mv = 3'000;
  std::int64_t i_rx_ua = 23'000;   // continuous RX
  std::int64_t i_lpl_ua = 1'500;   // duty-cycle average
  std::int64_t i_tx_ua = 45'000;   // at 14 dBm
  std::int64_t i_idle_ua = 1'000;
  std::int64_t i_sleep_ua = 1;     // raw sleep, alternating model only
  bool alternating_lpl = false;    // fire sniff transitions instead of averaging
  // Per-call transition energies in pJ, zero unless configured.
  std::map<DriverCall, std::int64_t> e_tran_pj;
  // Optional automaton reshaping loaded from the parameter file; applied on
  // top of the default edge set.
  struct CustomEdge {
    PowerState from;
    DriverCall call;
    PowerState to;
    std::int64_t e_tran_pj = 0;
  };
  std::vector<CustomEdge> custom_edges;

  // mV * uA = nW; the result must be whole microwatts so that uW * us = pJ
  // holds without any scaling elsewhere.
  std::int64_t power_uw(std::int64_t current_ua) const;
};

// Deterministic automaton: at most one edge per (state, driver call), each
// edge carrying a fixed transition energy.
struct EnergyDfaModel {
  struct Edge {
    bool defined = false;
    PowerState to = PowerState::Idle;
    std::int64_t e_tran_pj = 0;
  };

  std::array<std::int64_t, kPowerStateCount> state_power_uw{};
  Edge table[kPowerStateCount][kDriverCallCount];

  void set_edge(PowerState from, DriverCall call, PowerState to, std::int64_t e_tran_pj = 0);
  const Edge& edge(PowerState from, DriverCall call) const;

  static EnergyDfaModel from_params(const EnergyParams& p);
};

// Online per-node ledger: accumulated += P(state) * t_in_state + E_tran at
// every driver call. Integer picojoules throughout.
class EnergyLedger {
 public:
  EnergyLedger() = default;
  EnergyLedger(const EnergyDfaModel* model, PowerState initial, SimTime t0)
      : model_(model), state_(initial), entry_(t0) {}

  // Applies one driver call; throws on an undefined (state, call) pair.
  std::int64_t on_transition(DriverCall call, SimTime now);

  // Zeroes the counter and restamps the open interval; state is unchanged.
  void reset(SimTime now);

  // Settles the open state interval up to now and returns the total.
  std::int64_t freeze(SimTime now);

  std::int64_t accumulated() const { return accumulated_pj_; }
  PowerState state() const { return state_; }

 private:
  const EnergyDfaModel* model_ = nullptr;
  PowerState state_ = PowerState::Idle;
  SimTime entry_ = 0;
  std::int64_t accumulated_pj_ = 0;
};

// Independent oracle: refolds P*t + E_tran over a node's driver-call log,
// honoring reset/freeze markers. Returns {value at last freeze, final value}.
struct ReplayResult {
  std::int64_t frozen_pj = 0;
  bool saw_freeze = false;
  std::int64_t final_pj = 0;
};
ReplayResult replay_energy(const std::vector<MacLogRow>& rows, int node,
                           const EnergyDfaModel& model, SimTime end_time);

}  // namespace lbtsim
