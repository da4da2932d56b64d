#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "lbtsim/frame.hpp"
#include "lbtsim/sim.hpp"
#include "lbtsim/time.hpp"

namespace lbtsim {

// One occupancy interval on the medium. collided is true iff [start, end)
// overlaps any other record or jam interval; overlap destroys all parties
// (no capture).
struct TransmissionRecord {
  int index = -1;
  NodeId sender = -1;
  Frame frame;
  SimTime start = 0;
  SimTime end = 0;
  bool collided = false;
};

struct JamInterval {
  SimTime start = 0;
  SimTime end = 0;
};

class ChannelListener {
 public:
  virtual ~ChannelListener() = default;
  // Edge-triggered carrier state, with zero-gap busy intervals merged.
  virtual void on_channel_busy(SimTime now) = 0;
  virtual void on_channel_idle(SimTime now) = 0;
  // Raw frame boundaries, fired for every transmission (not for jams).
  virtual void on_frame_start(const TransmissionRecord& rec) = 0;
  virtual void on_frame_end(const TransmissionRecord& rec) = 0;
};

// The shared medium. Hall-scale distances sit below the 1 us tick, so
// propagation delay is zero and everyone observes the same busy/idle state.
class Channel {
 public:
  Channel(Simulator& sim, const RadioParams& params);

  void subscribe(ChannelListener* l);  // notification order = subscription order

  // Jam intervals count as occupancy and collide with anything they overlap.
  void add_jam(JamInterval jam);

  // Starts a frame at now and schedules its end. A sender with a frame still
  // in the air is a programming error. Returns a snapshot of the new record.
  TransmissionRecord begin_transmission(NodeId sender, const Frame& frame);

  // True iff any transmission or jam covers now (half-open intervals).
  bool is_busy(SimTime now) const;

  const std::vector<TransmissionRecord>& records() const { return records_; }
  const std::vector<int>& live() const { return live_; }
  const std::vector<JamInterval>& jams() const { return jams_; }
  const RadioParams& radio() const { return params_; }

 private:
  void source_started(SimTime now);
  void source_ended(SimTime now);
  void frame_ended(int index);

  Simulator& sim_;
  RadioParams params_;
  std::vector<ChannelListener*> listeners_;
  std::vector<TransmissionRecord> records_;
  std::vector<JamInterval> jams_;
  std::vector<int> live_;      // indices of records in the air
  int live_jams_ = 0;
  int activity_ = 0;           // live transmissions + live jams
  bool notified_busy_ = false;
  bool idle_check_pending_ = false;
};

// timeline.csv: start_us,end_us,sender,kind,collided (jams appear as rows).
std::string timeline_csv(const Channel& ch);

}  // namespace lbtsim
