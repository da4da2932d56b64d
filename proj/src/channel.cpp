#include "lbtsim/channel.hpp"

#include <algorithm>
#include <sstream>
#include <stdexcept>
#include <string>

namespace lbtsim {

namespace {
constexpr int kChannelTarget = -1;

inline bool overlaps(SimTime a_start, SimTime a_end, SimTime b_start, SimTime b_end) {
  return a_start < b_end && b_start < a_end;
}
}  // namespace

Channel::Channel(Simulator& sim, const RadioParams& params) : sim_(sim), params_(params) {
  params_.validate();
}

void Channel::subscribe(ChannelListener* l) { listeners_.push_back(l); }

void Channel::add_jam(JamInterval jam) {
  if (jam.end <= jam.start) throw std::invalid_argument("jam interval must have end > start");
  jams_.push_back(jam);
  // A jam destroys frames already in the air when it is registered mid-run.
  for (int idx : live_) {
    auto& r = records_[idx];
    if (overlaps(r.start, r.end, jam.start, jam.end)) r.collided = true;
  }
  sim_.schedule(jam.start, EventKind::JamStart, kChannelTarget, [this] {
    ++live_jams_;
    source_started(sim_.now());
  });
  sim_.schedule(jam.end, EventKind::JamEnd, kChannelTarget, [this] {
    --live_jams_;
    source_ended(sim_.now());
  });
}

TransmissionRecord Channel::begin_transmission(NodeId sender, const Frame& frame) {
  const SimTime now = sim_.now();
  for (int idx : live_)
    if (records_[idx].sender == sender)
      throw std::logic_error("channel: sender " + std::to_string(sender) +
                             " already transmitting");

  TransmissionRecord rec;
  rec.index = static_cast<int>(records_.size());
  rec.sender = sender;
  rec.frame = frame;
  rec.start = now;
  rec.end = now + airtime_us(frame, params_);

  for (int idx : live_) {
    auto& other = records_[idx];
    if (overlaps(rec.start, rec.end, other.start, other.end)) {
      other.collided = true;
      rec.collided = true;
    }
  }
  for (const auto& jam : jams_) {
    if (overlaps(rec.start, rec.end, jam.start, jam.end)) rec.collided = true;
  }

  records_.push_back(rec);
  live_.push_back(rec.index);
  const int index = rec.index;
  sim_.schedule(rec.end, EventKind::FrameEnd, sender, [this, index] { frame_ended(index); });

  source_started(now);
  // Notify with a snapshot: a handler may start another transmission and
  // reallocate records_.
  const TransmissionRecord snapshot = records_[index];
  for (auto* l : listeners_) l->on_frame_start(snapshot);
  return snapshot;
}

void Channel::frame_ended(int index) {
  live_.erase(std::find(live_.begin(), live_.end(), index));
  // Deliver before the idle edge: receivers finish the frame on a channel
  // that is still formally busy with it.
  const TransmissionRecord snapshot = records_[index];
  for (auto* l : listeners_) l->on_frame_end(snapshot);
  source_ended(sim_.now());
}

void Channel::source_started(SimTime now) {
  ++activity_;
  if (activity_ == 1 && !notified_busy_) {
    notified_busy_ = true;
    for (auto* l : listeners_) l->on_channel_busy(now);
  }
}

void Channel::source_ended(SimTime now) {
  --activity_;
  if (activity_ == 0 && !idle_check_pending_) {
    // Deferred to the end of this instant so that zero-gap back-to-back
    // frames never produce a spurious idle edge between them.
    idle_check_pending_ = true;
    sim_.schedule(now, EventKind::IdleCheck, kChannelTarget, [this] {
      idle_check_pending_ = false;
      if (activity_ == 0 && notified_busy_) {
        notified_busy_ = false;
        for (auto* l : listeners_) l->on_channel_idle(sim_.now());
      }
    });
  }
}

bool Channel::is_busy(SimTime now) const {
  for (int idx : live_) {
    const auto& r = records_[idx];
    if (r.start <= now && now < r.end) return true;
  }
  for (const auto& jam : jams_)
    if (jam.start <= now && now < jam.end) return true;
  return false;
}

std::string timeline_csv(const Channel& ch) {
  struct Row {
    SimTime start, end;
    int sender;
    const char* kind;
    bool collided;
  };
  std::vector<Row> rows;
  rows.reserve(ch.records().size() + ch.jams().size());
  for (const auto& r : ch.records())
    rows.push_back({r.start, r.end, r.sender, to_string(r.frame.kind), r.collided});
  for (const auto& j : ch.jams()) rows.push_back({j.start, j.end, -1, "jam", false});
  std::stable_sort(rows.begin(), rows.end(),
                   [](const Row& a, const Row& b) { return a.start < b.start; });

  std::ostringstream os;
  os << "start_us,end_us,sender,kind,collided\n";
  for (const auto& r : rows)
    os << r.start << ',' << r.end << ',' << r.sender << ',' << r.kind << ','
       << (r.collided ? 1 : 0) << '\n';
  return os.str();
}

}  // namespace lbtsim
