#pragma once

#include <deque>
#include <functional>
#include <optional>

#include "lbtsim/channel.hpp"
#include "lbtsim/energy.hpp"
#include "lbtsim/frame.hpp"
#include "lbtsim/maclog.hpp"
#include "lbtsim/rng.hpp"
#include "lbtsim/sim.hpp"

namespace lbtsim {

enum class MacMode : std::uint8_t { Lbt, Aloha };
enum class TpsPolicy : std::uint8_t { RedrawPerRound, RetainPerPacket };
enum class MacPhase : std::uint8_t { Idle, PreBackoff, CcaCounting, DeferredBusy, Transmitting };

const char* to_string(MacPhase p);

struct MacParams {
  Duration t_fixed_us = 5'000;        // t_F
  Duration t_ps_max_us = 5'000;       // random part upper bound
  Duration pre_backoff_max_us = 5'000;  // broadcast replies only
  TpsPolicy tps_policy = TpsPolicy::RedrawPerRound;
  MacMode mode = MacMode::Lbt;
};

// One radio device: the low-power-listening receive path and the
// listen-before-talk transmit path, instrumented with the energy DFA.
//
// Receive side: the radio sleeps and wakes every sleep_us for sniff_on_us.
// A sniff window overlapping a live frame's preamble locks the radio into RX
// until that frame ends; a mismatched destination address drops it back to
// sleep as soon as the header is in. A device configured as always-on (the
// access point) simply stays in RX.
//
// Transmit side: a pending frame first listens for t_F; any sensed activity
// halts the attempt and, from the next idle edge on, the device must wait the
// full t_L = t_F + t_PS. Broadcast replies are preceded by an extra random
// pre-backoff so simultaneous responders spread out. Low-power listening is
// suspended while a transmission is pending.
class NodeAgent final : public ChannelListener {
 public:
  NodeAgent(Simulator& sim, Channel& channel, const MacParams& mac,
            const EnergyDfaModel& dfa, NodeId id, RngStream rng, MacEventLog* log,
            bool always_rx, bool alternating_lpl);

  NodeAgent(const NodeAgent&) = delete;
  NodeAgent& operator=(const NodeAgent&) = delete;

  // Brings the radio up. Duty-cycled devices take a wake-grid phase offset in
  // [0, lpl period); always-on devices ignore it.
  void start(SimTime now, Duration first_wake_offset = 0);

  // Queues a frame for transmission. One frame may wait behind the one in
  // service; anything deeper is a configuration error.
  void request_send(const Frame& frame);

  bool is_transmitting() const { return phase_ == MacPhase::Transmitting; }
  bool has_pending() const { return pending_.has_value() || queued_.has_value(); }
  MacPhase phase() const { return phase_; }
  NodeId id() const { return id_; }

  EnergyLedger& ledger() { return ledger_; }
  const EnergyLedger& ledger() const { return ledger_; }
  void stats_reset(SimTime now);
  std::int64_t stats_freeze(SimTime now);

  // Scripted back-off draws for reproduced scenarios and tests; consumed
  // before the RNG is asked.
  void force_tps_draws(std::deque<Duration> values) { forced_tps_ = std::move(values); }
  void force_pre_draws(std::deque<Duration> values) { forced_pre_ = std::move(values); }

  // App hooks.
  std::function<void(const Frame&, SimTime)> on_receive;
  std::function<void(const Frame&, SimTime)> on_sent;

  // ChannelListener
  void on_channel_busy(SimTime now) override;
  void on_channel_idle(SimTime now) override;
  void on_frame_start(const TransmissionRecord& rec) override;
  void on_frame_end(const TransmissionRecord& rec) override;

 private:
  enum class RadioOp : std::uint8_t {
    Sleeping,      // LPL, wake grid armed
    Sniffing,      // inside a sniff window (alternating mode only)
    Dormant,       // asleep with sniffing suspended (pre-backoff)
    RxLocked,      // following one frame
    RxContinuous,  // full RX (always-on device or CCA in progress)
    Transmitting,
  };

  void drv(DriverCall call);
  void set_phase(MacPhase p);

  Duration draw_tps();
  Duration draw_pre();

  // LPL receive path
  void enter_sleep(SimTime first_wake);
  void leave_sleep_bookkeeping();
  void cancel_rx_bookkeeping();  // lock/sniff/header events + lock target
  bool in_sniff_window(SimTime t) const;
  SimTime next_wake_at_or_after(SimTime t) const;
  void consider_lock(const TransmissionRecord& rec);
  void do_lock(const TransmissionRecord& rec);
  void unlock_to_sleep();
  void sniff_wake();   // alternating mode
  void sniff_done();   // alternating mode

  // LBT transmit path
  void start_pending(const Frame& frame);
  void enter_cca();
  void fire_tx();
  void finish_own_tx(const TransmissionRecord& rec);

  Simulator& sim_;
  Channel& channel_;
  const RadioParams& radio_;
  MacParams mac_;
  NodeId id_;
  RngStream rng_;
  MacEventLog* log_;
  bool always_rx_;
  bool alternating_lpl_;
  EnergyLedger ledger_;

  // radio state
  RadioOp op_ = RadioOp::Sleeping;
  SimTime first_wake_ = 0;      // wake grid anchor while sleeping
  SimTime rx_since_ = kNever;   // RX entry instant (preamble sync rule)
  int locked_record_ = -1;
  EventHandle lock_event_{};
  SimTime lock_event_time_ = kNever;
  EventHandle header_event_{};
  EventHandle sniff_event_{};

  // MAC state
  MacPhase phase_ = MacPhase::Idle;
  std::optional<Frame> pending_;
  std::optional<Frame> queued_;
  bool sensed_activity_ = false;
  Duration retained_tps_ = -1;
  Duration required_wait_ = 0;
  SimTime tx_deadline_ = kNever;
  EventHandle tx_timer_{};
  EventHandle pre_timer_{};

  std::deque<Duration> forced_tps_;
  std::deque<Duration> forced_pre_;
};

}  // namespace lbtsim
