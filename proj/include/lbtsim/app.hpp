#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "lbtsim/channel.hpp"
#include "lbtsim/energy.hpp"
#include "lbtsim/mac.hpp"

namespace lbtsim {

struct Inventory {
  std::uint16_t product = 0;
  std::uint16_t quantity = 0;
};

struct PayloadSizes {
  std::uint16_t poll = 2;
  std::uint16_t reply = 2;
  std::uint16_t start_stop = 2;
  std::uint16_t unicast = 2;
};

struct NodeStats {
  std::int64_t tx_framed = 0;  // replies aired inside the start/stop window
  std::int64_t tx_raw = 0;
  std::int64_t rx_framed = 0;  // receptions inside the window (stop included)
  std::int64_t rx_raw = 0;
  std::int64_t polls_rx_framed = 0;
  std::int64_t energy_framed_pj = 0;
  bool froze = false;
};

struct ApStats {
  std::int64_t rx_replies_framed = 0;
  std::int64_t rx_raw = 0;
  std::int64_t polls_sent = 0;
  std::int64_t energy_framed_pj = 0;
};

struct ReplySeen {
  int node;
  std::uint16_t quantity;
  SimTime at;
};

struct RunStats {
  std::uint16_t run_id = 0;
  int n_nodes = 0;
  std::vector<int> active_set;  // node ids holding the polled product
  SimTime window_start = 0;
  SimTime window_end = 0;
  std::vector<NodeStats> node;  // index i -> node id i+1
  ApStats ap;
  std::vector<std::vector<ReplySeen>> replies_per_poll;

  std::int64_t sum_n_tx() const;
  std::optional<double> throughput() const;  // N_RX / sum N_TX, undefined if 0
  std::vector<std::int64_t> active_energies_pj() const;
};

// Greedy supplier pick over replies in arrival order until the requested
// quantity is covered. Illustrative only; no effect on measured metrics.
std::vector<int> select_suppliers(const std::vector<ReplySeen>& replies,
                                  std::int64_t requested_qty);

struct UnicastOutcome {
  bool success = false;
  int attempts = 0;
};

struct WarehouseConfig {
  int n_nodes = 38;
  int n_active = 1;
  std::vector<int> active_set;  // explicit override; else 1..n_active
  std::uint16_t product_id = 7;
  std::uint16_t quantity_each = 1;
  int poll_count = 10;
  Duration poll_first_offset_us = 500'000;
  Duration poll_spacing_us = 1'000'000;
  Duration window_us = 11'750'000;
  Duration unicast_timeout_us = 100'000;
  int unicast_retries = 3;
  bool collect_in_band = false;  // exchange the statistics over the air after stop
  PayloadSizes payloads;
  RadioParams radio;
  MacParams mac;
  EnergyParams energy;

  std::vector<int> resolved_active_set() const;
  void validate() const;
};

struct NodeEnergyCheck {
  int node;
  bool has_frozen = false;
  std::int64_t frozen_pj = 0;
  std::int64_t final_pj = 0;
};

// Everything one simulation produces, plus its own audit trail.
struct RunResult {
  RunStats stats;
  std::vector<TransmissionRecord> records;
  std::vector<JamInterval> jams;
  MacEventLog log;
  std::vector<NodeEnergyCheck> energy_checks;
  MacMode mode = MacMode::Lbt;
  Duration t_fixed_us = 5'000;
  SimTime end_time = 0;
  std::uint64_t trace_hash = 0;
  std::vector<std::string> violations;

  // Poisson-load runs only.
  double g_measured = 0.0;
  double utilization = 0.0;
  std::int64_t attempts = 0;
  std::int64_t drops = 0;
};

// One product-poll measurement run: start broadcast, poll_count polls,
// stop broadcast; statistics and energy framed by the start/stop window.
RunResult run_experiment(const WarehouseConfig& cfg, std::uint64_t seed);

// Poisson offered load, uncontrolled access: the classic utilization-vs-load
// baseline. offered_load is in frames per frame airtime across the network.
struct PoissonConfig {
  int n_nodes = 38;
  double offered_load = 0.5;
  std::uint16_t payload = 16;
  PreambleMode preamble = PreambleMode::Normal;
  Duration duration_us = 11'750'000;
  RadioParams radio;
  EnergyParams energy;
};
RunResult run_poisson(const PoissonConfig& cfg, std::uint64_t seed);

// Scripted contention timeline: a jammer holds the channel while three
// devices queue a packet; forced back-off draws of 1.0 / 0.5 / 2.5 ms
// reproduce accesses at +6000, +5500 and +7500 us.
struct ScriptedJamResult {
  RunResult run;
  SimTime jam_end = 0;
};
ScriptedJamResult run_fig5_scenario(const RadioParams& radio = {},
                                    const EnergyParams& energy = {});

// The assembled network: one always-on access point (id 0) plus duty-cycled
// nodes (ids 1..n) on a shared channel. run_experiment() wraps the canonical
// measurement run; tests drive the pieces directly.
class WarehouseNet {
 public:
  WarehouseNet(const WarehouseConfig& cfg, std::uint64_t seed);

  Simulator& sim() { return sim_; }
  Channel& channel() { return *channel_; }
  NodeAgent& ap() { return *agents_[0]; }
  NodeAgent& node(int id) { return *agents_[id]; }
  const EnergyDfaModel& dfa() const { return dfa_; }
  MacEventLog& log() { return log_; }
  RunStats& stats() { return stats_; }

  // Radios up at the current sim time; duty-cycle phases come from the
  // per-node random streams.
  void boot();

  // Schedules the full measurement program: start broadcast after boot_delay,
  // then the poll train, then the stop broadcast closing the window.
  void schedule_run(Duration boot_delay_us = 100'000);

  // Sequence-numbered reliable request from the AP; retransmits on timeout
  // until the retry budget is spent.
  void unicast_request(int dst, std::function<void(UnicastOutcome)> done);

  // Runs the simulation to its horizon, settles energy, audits the run and
  // packages everything.
  RunResult finish();

  SimTime horizon() const { return horizon_; }

 private:
  void ap_send(Frame f);
  void ap_on_sent(const Frame& f, SimTime now);
  void ap_on_receive(const Frame& f, SimTime now);
  void node_on_receive(int id, const Frame& f, SimTime now);
  void node_on_sent(int id, const Frame& f, SimTime now);
  void send_unicast_attempt(int key);
  void arm_unicast_timeout(int key);
  void collect_stats_in_band(int next_node);

  WarehouseConfig cfg_;
  std::uint64_t seed_;
  Simulator sim_;
  EnergyDfaModel dfa_;
  std::unique_ptr<Channel> channel_;
  MacEventLog log_;
  std::vector<std::unique_ptr<NodeAgent>> agents_;  // [0] = AP
  std::vector<Inventory> inventory_;                // per node id (index 1..n)
  std::vector<bool> window_open_;                   // per node id
  RunStats stats_;
  bool ap_window_open_ = false;
  std::uint8_t ap_seq_ = 0;
  std::vector<std::uint8_t> node_seq_;
  SimTime horizon_ = 0;
  std::vector<std::string> violations_;

  struct PendingUnicast {
    int dst = 0;
    std::uint8_t seq = 0;
    int attempts = 0;
    int retries_left = 0;
    EventHandle timer{};
    std::function<void(UnicastOutcome)> done;
  };
  std::vector<std::pair<int, PendingUnicast>> pending_unicasts_;  // key -> req
  int next_unicast_key_ = 1;
};

}  // namespace lbtsim
