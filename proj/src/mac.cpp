#include "lbtsim/mac.hpp"

#include <stdexcept>
#include <string>

namespace lbtsim {

const char* to_string(MacPhase p) {
  switch (p) {
    case MacPhase::Idle: return "idle";
    case MacPhase::PreBackoff: return "pre-backoff";
    case MacPhase::CcaCounting: return "cca-counting";
    case MacPhase::DeferredBusy: return "deferred-busy";
    case MacPhase::Transmitting: return "transmitting";
  }
  return "?";
}

NodeAgent::NodeAgent(Simulator& sim, Channel& channel, const MacParams& mac,
                     const EnergyDfaModel& dfa, NodeId id, RngStream rng,
                     MacEventLog* log, bool always_rx, bool alternating_lpl)
    : sim_(sim),
      channel_(channel),
      radio_(channel.radio()),
      mac_(mac),
      id_(id),
      rng_(rng),
      log_(log),
      always_rx_(always_rx),
      alternating_lpl_(alternating_lpl),
      ledger_(&dfa, PowerState::Idle, sim.now()) {
  if (id < 0 || id >= static_cast<int>(kBroadcastAddr))
    throw std::invalid_argument("node id must fit an 8-bit unicast address");
}

void NodeAgent::drv(DriverCall call) {
  const SimTime now = sim_.now();
  const PowerState before = ledger_.state();
  ledger_.on_transition(call, now);
  if (log_) log_->driver(now, id_, call);
  const PowerState after = ledger_.state();
  if (after == PowerState::Rx) {
    if (before != PowerState::Rx) rx_since_ = now;
  } else {
    rx_since_ = kNever;
  }
}

void NodeAgent::set_phase(MacPhase p) {
  if (p == phase_) return;
  if (log_)
    log_->push(sim_.now(), id_, MacLogRow::Type::Phase, static_cast<std::int64_t>(phase_),
               static_cast<std::int64_t>(p));
  phase_ = p;
}

Duration NodeAgent::draw_tps() {
  Duration v;
  if (!forced_tps_.empty()) {
    v = forced_tps_.front();
    forced_tps_.pop_front();
  } else {
    v = rng_.uniform_us(0, mac_.t_ps_max_us);
  }
  if (log_) log_->push(sim_.now(), id_, MacLogRow::Type::DrawTps, v);
  return v;
}

Duration NodeAgent::draw_pre() {
  Duration v;
  if (!forced_pre_.empty()) {
    v = forced_pre_.front();
    forced_pre_.pop_front();
  } else {
    v = rng_.uniform_us(0, mac_.pre_backoff_max_us);
  }
  if (log_) log_->push(sim_.now(), id_, MacLogRow::Type::DrawPre, v);
  return v;
}

void NodeAgent::start(SimTime now, Duration first_wake_offset) {
  if (sim_.now() != now)
    throw std::logic_error("NodeAgent::start must be called at the current sim time");
  if (always_rx_) {
    drv(DriverCall::Listen);
    op_ = RadioOp::RxContinuous;
  } else {
    drv(DriverCall::LowPowerListen);
    enter_sleep(now + first_wake_offset);
  }
}

void NodeAgent::stats_reset(SimTime now) {
  ledger_.reset(now);
  if (log_) log_->push(now, id_, MacLogRow::Type::StatsReset);
}

std::int64_t NodeAgent::stats_freeze(SimTime now) {
  const std::int64_t pj = ledger_.freeze(now);
  if (log_) log_->push(now, id_, MacLogRow::Type::StatsFreeze);
  return pj;
}

// ---------------------------------------------------------------- LPL / RX

void NodeAgent::enter_sleep(SimTime first_wake) {
  op_ = RadioOp::Sleeping;
  first_wake_ = first_wake;
  locked_record_ = -1;
  if (alternating_lpl_) {
    sniff_event_ =
        sim_.schedule(first_wake, EventKind::SniffWakeup, id_, [this] { sniff_wake(); });
  } else {
    for (int idx : channel_.live()) consider_lock(channel_.records()[idx]);
  }
}

void NodeAgent::leave_sleep_bookkeeping() {
  if (lock_event_.id) {
    sim_.cancel(lock_event_);
    lock_event_ = {};
    lock_event_time_ = kNever;
  }
  if (sniff_event_.id) {
    sim_.cancel(sniff_event_);
    sniff_event_ = {};
  }
}

void NodeAgent::cancel_rx_bookkeeping() {
  leave_sleep_bookkeeping();
  if (header_event_.id) {
    sim_.cancel(header_event_);
    header_event_ = {};
  }
  locked_record_ = -1;
}

bool NodeAgent::in_sniff_window(SimTime t) const {
  if (t < first_wake_) return false;
  return (t - first_wake_) % radio_.lpl_period_us() < radio_.sniff_on_us;
}

SimTime NodeAgent::next_wake_at_or_after(SimTime t) const {
  if (t <= first_wake_) return first_wake_;
  const Duration period = radio_.lpl_period_us();
  const Duration k = (t - first_wake_ + period - 1) / period;
  return first_wake_ + k * period;
}

void NodeAgent::consider_lock(const TransmissionRecord& rec) {
  if (rec.sender == id_) return;
  const SimTime now = sim_.now();
  const SimTime preamble_end = rec.start + preamble_us(rec.frame, radio_);
  if (now >= preamble_end) return;
  const SimTime candidate = in_sniff_window(now) ? now : next_wake_at_or_after(now);
  if (candidate >= preamble_end) return;  // would wake too late: frame missed
  if (lock_event_.id && lock_event_time_ <= candidate) return;
  if (lock_event_.id) sim_.cancel(lock_event_);
  const int index = rec.index;
  lock_event_ = sim_.schedule(candidate, EventKind::SniffWakeup, id_,
                              [this, index] { lock_event_ = {}; lock_event_time_ = kNever;
                                              if (op_ == RadioOp::Sleeping)
                                                do_lock(channel_.records()[index]); });
  lock_event_time_ = candidate;
}

void NodeAgent::do_lock(const TransmissionRecord& rec) {
  leave_sleep_bookkeeping();
  if (ledger_.state() == PowerState::SleepLpl) drv(DriverCall::Listen);
  op_ = RadioOp::RxLocked;
  locked_record_ = rec.index;
  const bool addressed =
      rec.frame.dst == static_cast<std::uint8_t>(id_) || rec.frame.dst == kBroadcastAddr;
  if (!addressed) {
    // Follow only until the destination field is in, then give up the frame.
    const SimTime drop_at = rec.start + header_done_offset_us(rec.frame, radio_);
    header_event_ = sim_.schedule(drop_at, EventKind::Timer, id_, [this] {
      header_event_ = {};
      if (op_ == RadioOp::RxLocked) unlock_to_sleep();
    });
  }
}

void NodeAgent::unlock_to_sleep() {
  if (header_event_.id) {
    sim_.cancel(header_event_);
    header_event_ = {};
  }
  locked_record_ = -1;
  drv(DriverCall::LowPowerListen);
  enter_sleep(sim_.now() + radio_.sleep_us);
}

void NodeAgent::sniff_wake() {
  sniff_event_ = {};
  if (op_ != RadioOp::Sleeping) return;
  drv(DriverCall::SniffStart);
  op_ = RadioOp::Sniffing;
  const SimTime now = sim_.now();
  for (int idx : channel_.live()) {
    const auto& rec = channel_.records()[idx];
    if (rec.sender == id_) continue;
    if (now < rec.start + preamble_us(rec.frame, radio_)) {
      do_lock(rec);
      return;
    }
  }
  sniff_event_ = sim_.schedule(now + radio_.sniff_on_us, EventKind::SniffWakeup, id_,
                               [this] { sniff_done(); });
}

void NodeAgent::sniff_done() {
  sniff_event_ = {};
  if (op_ != RadioOp::Sniffing) return;
  drv(DriverCall::SniffEnd);
  enter_sleep(sim_.now() + radio_.sleep_us);
}

// ---------------------------------------------------------------- LBT / TX

void NodeAgent::request_send(const Frame& frame) {
  if (pending_) {
    if (queued_)
      throw std::logic_error("node " + std::to_string(id_) +
                             ": tx queue depth exceeded (deeper queuing is a config error)");
    queued_ = frame;
    return;
  }
  start_pending(frame);
}

void NodeAgent::start_pending(const Frame& frame) {
  pending_ = frame;
  pending_->src = static_cast<std::uint8_t>(id_);
  sensed_activity_ = false;
  retained_tps_ = -1;

  if (mac_.mode == MacMode::Aloha) {
    // Uncontrolled access: no carrier sense, no back-off.
    cancel_rx_bookkeeping();
    set_phase(MacPhase::Transmitting);
    if (log_) log_->push(sim_.now(), id_, MacLogRow::Type::TxStart, 0, 0);
    op_ = RadioOp::Transmitting;
    drv(DriverCall::Send);
    channel_.begin_transmission(id_, *pending_);
    return;
  }

  if (mac_.tps_policy == TpsPolicy::RetainPerPacket) retained_tps_ = draw_tps();

  if (frame.kind == FrameKind::Reply) {
    // Reply to a broadcast: random delay first, so simultaneous responders
    // separate. The radio sleeps through it; sniffing stays suspended.
    set_phase(MacPhase::PreBackoff);
    const Duration pre = draw_pre();
    cancel_rx_bookkeeping();
    switch (ledger_.state()) {
      case PowerState::SleepLpl: break;
      case PowerState::Rx:
        drv(op_ == RadioOp::Sniffing ? DriverCall::SniffEnd : DriverCall::LowPowerListen);
        break;
      case PowerState::Idle: drv(DriverCall::LowPowerListen); break;
      case PowerState::Tx: throw std::logic_error("pre-backoff while transmitting");
    }
    op_ = RadioOp::Dormant;
    pre_timer_ = sim_.schedule(sim_.now() + pre, EventKind::Timer, id_, [this] {
      pre_timer_ = {};
      enter_cca();
    });
    return;
  }

  enter_cca();
}

void NodeAgent::enter_cca() {
  const SimTime now = sim_.now();
  // CCA listens continuously from here on.
  cancel_rx_bookkeeping();
  switch (ledger_.state()) {
    case PowerState::SleepLpl:
    case PowerState::Idle: drv(DriverCall::Listen); break;
    case PowerState::Rx: break;
    case PowerState::Tx: throw std::logic_error("cca entry while transmitting");
  }
  op_ = RadioOp::RxContinuous;

  if (channel_.is_busy(now)) {
    sensed_activity_ = true;
    set_phase(MacPhase::DeferredBusy);
    return;
  }
  // Clean first listen: transmit after exactly t_F, the random part stays zero.
  set_phase(MacPhase::CcaCounting);
  required_wait_ = mac_.t_fixed_us;
  tx_deadline_ = now + required_wait_;
  tx_timer_ = sim_.schedule(tx_deadline_, EventKind::Timer, id_, [this] { fire_tx(); });
}

void NodeAgent::on_channel_busy(SimTime now) {
  // Activity beginning exactly at the deadline is outside the (half-open)
  // listen window; the transmission fires this same instant.
  if (phase_ == MacPhase::CcaCounting && now < tx_deadline_) {
    sim_.cancel(tx_timer_);
    tx_timer_ = {};
    sensed_activity_ = true;
    set_phase(MacPhase::DeferredBusy);
  }
}

void NodeAgent::on_channel_idle(SimTime now) {
  if (phase_ != MacPhase::DeferredBusy) return;
  // Once activity was sensed the device owes the full t_L = t_F + t_PS.
  const Duration tps =
      mac_.tps_policy == TpsPolicy::RetainPerPacket ? retained_tps_ : draw_tps();
  required_wait_ = mac_.t_fixed_us + tps;
  tx_deadline_ = now + required_wait_;
  tx_timer_ = sim_.schedule(tx_deadline_, EventKind::Timer, id_, [this] { fire_tx(); });
  set_phase(MacPhase::CcaCounting);
}

void NodeAgent::fire_tx() {
  tx_timer_ = {};
  set_phase(MacPhase::Transmitting);
  if (log_)
    log_->push(sim_.now(), id_, MacLogRow::Type::TxStart, required_wait_,
               sensed_activity_ ? 1 : 0);
  op_ = RadioOp::Transmitting;
  drv(DriverCall::Send);
  channel_.begin_transmission(id_, *pending_);
}

void NodeAgent::finish_own_tx(const TransmissionRecord& rec) {
  const SimTime now = sim_.now();
  drv(DriverCall::TxDoneIrq);
  set_phase(MacPhase::Idle);
  pending_.reset();
  sensed_activity_ = false;
  retained_tps_ = -1;
  if (on_sent) on_sent(rec.frame, now);

  if (queued_) {
    const Frame next = *queued_;
    queued_.reset();
    start_pending(next);
  } else if (always_rx_) {
    drv(DriverCall::Listen);
    op_ = RadioOp::RxContinuous;
  } else {
    drv(DriverCall::LowPowerListen);
    enter_sleep(now + radio_.sleep_us);
  }
}

// ------------------------------------------------------------- frame flow

void NodeAgent::on_frame_start(const TransmissionRecord& rec) {
  if (rec.sender == id_) return;
  if (alternating_lpl_) {
    if (op_ == RadioOp::Sniffing) do_lock(rec);
  } else {
    if (op_ == RadioOp::Sleeping) consider_lock(rec);
  }
}

void NodeAgent::on_frame_end(const TransmissionRecord& rec) {
  if (rec.sender == id_) {
    finish_own_tx(rec);  // any state mismatch surfaces as a DFA error
    return;
  }
  const SimTime now = sim_.now();
  const bool was_locked_on_it = op_ == RadioOp::RxLocked && locked_record_ == rec.index;
  bool synced = was_locked_on_it;
  if (op_ == RadioOp::RxContinuous &&
      rx_since_ < rec.start + preamble_us(rec.frame, radio_))
    synced = true;
  const bool addressed =
      rec.frame.dst == static_cast<std::uint8_t>(id_) || rec.frame.dst == kBroadcastAddr;

  if (synced && addressed && !rec.collided) {
    drv(DriverCall::PacketReceivedIrq);
    if (on_receive) on_receive(rec.frame, now);  // may queue a transmission
  }
  // If the app callback started a pending transmission the radio has already
  // been re-dispositioned; only a still-locked radio resumes duty cycling.
  if (was_locked_on_it && op_ == RadioOp::RxLocked && locked_record_ == rec.index)
    unlock_to_sleep();
}

}  // namespace lbtsim
