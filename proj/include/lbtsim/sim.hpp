#pragma once

#include <cstdint>
#include <functional>
#include <queue>
#include <unordered_map>
#include <vector>

#include "lbtsim/time.hpp"

namespace lbtsim {

enum class EventKind : std::uint8_t {
  Timer,
  FrameEnd,
  SniffWakeup,
  JamStart,
  JamEnd,
  IdleCheck,
  AppCommand,
};

const char* to_string(EventKind k);

struct EventHandle {
  std::uint64_t id = 0;  // 0 = invalid
};

// Deterministic discrete-event kernel. Events fire in strict (due, seq)
// order; seq is the insertion sequence number, so ties break FIFO.
class Simulator {
 public:
  SimTime now() const { return clock_; }

  // Scheduling in the past is a programming error and throws.
  EventHandle schedule(SimTime due, EventKind kind, int target, std::function<void()> fn);

  // True if the event was still pending and is now removed.
  bool cancel(EventHandle h);

  // Fires every event with due <= t_end in (due, seq) order, then sets the
  // clock to t_end. Returns how many events fired during this call.
  std::uint64_t run_until(SimTime t_end);

  std::uint64_t scheduled_count() const { return n_scheduled_; }
  std::uint64_t fired_count() const { return n_fired_; }
  std::uint64_t cancelled_count() const { return n_cancelled_; }
  std::uint64_t pending_count() const { return live_.size(); }

  // FNV-1a over the fired-event sequence; equal hashes mean equal replays.
  std::uint64_t trace_hash() const { return trace_hash_; }

 private:
  struct QEntry {
    SimTime due;
    std::uint64_t seq;
    bool operator>(const QEntry& o) const {
      return due != o.due ? due > o.due : seq > o.seq;
    }
  };
  struct Pending {
    EventKind kind;
    int target;
    std::function<void()> fn;
  };

  SimTime clock_ = 0;
  std::uint64_t next_seq_ = 1;
  std::priority_queue<QEntry, std::vector<QEntry>, std::greater<QEntry>> heap_;
  std::unordered_map<std::uint64_t, Pending> live_;
  std::uint64_t n_scheduled_ = 0, n_fired_ = 0, n_cancelled_ = 0;
  std::uint64_t trace_hash_ = 0xcbf29ce484222325ULL;
};

}  // namespace lbtsim
