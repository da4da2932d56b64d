#include "lbtsim/sim.hpp"

#include <stdexcept>
#include <string>

namespace lbtsim {

const char* to_string(EventKind k) {
  switch (k) {
    case EventKind::Timer: return "timer";
    case EventKind::FrameEnd: return "frame-end";
    case EventKind::SniffWakeup: return "sniff-wakeup";
    case EventKind::JamStart: return "jam-start";
    case EventKind::JamEnd: return "jam-end";
    case EventKind::IdleCheck: return "idle-check";
    case EventKind::AppCommand: return "app-command";
  }
  return "?";
}

namespace {
inline std::uint64_t fnv1a_mix(std::uint64_t h, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) {
    h ^= (v >> (i * 8)) & 0xff;
    h *= 0x100000001b3ULL;
  }
  return h;
}
}  // namespace

EventHandle Simulator::schedule(SimTime due, EventKind kind, int target,
                                std::function<void()> fn) {
  if (due < clock_)
    throw std::logic_error("Simulator::schedule: event in the past (due=" +
                           std::to_string(due) + " now=" + std::to_string(clock_) + ")");
  const std::uint64_t seq = next_seq_++;
  heap_.push(QEntry{due, seq});
  live_.emplace(seq, Pending{kind, target, std::move(fn)});
  ++n_scheduled_;
  return EventHandle{seq};
}

bool Simulator::cancel(EventHandle h) {
  if (h.id == 0) return false;
  auto it = live_.find(h.id);
  if (it == live_.end()) return false;
  live_.erase(it);
  ++n_cancelled_;
  return true;
}

std::uint64_t Simulator::run_until(SimTime t_end) {
  if (t_end < clock_)
    throw std::logic_error("Simulator::run_until: t_end before current clock");
  std::uint64_t fired = 0;
  while (!heap_.empty() && heap_.top().due <= t_end) {
    const QEntry top = heap_.top();
    heap_.pop();
    auto it = live_.find(top.seq);
    if (it == live_.end()) continue;  // cancelled, lazily dropped
    clock_ = top.due;
    Pending p = std::move(it->second);
    live_.erase(it);
    trace_hash_ = fnv1a_mix(trace_hash_, static_cast<std::uint64_t>(top.due));
    trace_hash_ = fnv1a_mix(trace_hash_, top.seq);
    trace_hash_ = fnv1a_mix(trace_hash_, (static_cast<std::uint64_t>(p.kind) << 32) ^
                                             static_cast<std::uint32_t>(p.target));
    ++n_fired_;
    ++fired;
    p.fn();
  }
  clock_ = t_end;
  return fired;
}

}  // namespace lbtsim
