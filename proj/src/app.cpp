#include "lbtsim/app.hpp"

#include <algorithm>
#include <stdexcept>

#include "lbtsim/verify.hpp"

namespace lbtsim {

std::int64_t RunStats::sum_n_tx() const {
  std::int64_t sum = 0;
  for (int id : active_set) sum += node[id - 1].tx_framed;
  return sum;
}

std::optional<double> RunStats::throughput() const {
  const std::int64_t denom = sum_n_tx();
  if (denom <= 0) return std::nullopt;
  return static_cast<double>(ap.rx_replies_framed) / static_cast<double>(denom);
}

std::vector<std::int64_t> RunStats::active_energies_pj() const {
  std::vector<std::int64_t> out;
  out.reserve(active_set.size());
  for (int id : active_set) out.push_back(node[id - 1].energy_framed_pj);
  return out;
}

std::vector<int> select_suppliers(const std::vector<ReplySeen>& replies,
                                  std::int64_t requested_qty) {
  std::vector<int> picked;
  std::int64_t covered = 0;
  for (const auto& r : replies) {
    if (covered >= requested_qty) break;
    picked.push_back(r.node);
    covered += r.quantity;
  }
  return picked;
}

std::vector<int> WarehouseConfig::resolved_active_set() const {
  if (!active_set.empty()) return active_set;
  std::vector<int> ids;
  for (int i = 1; i <= n_active; ++i) ids.push_back(i);
  return ids;
}

void WarehouseConfig::validate() const {
  radio.validate();
  if (n_nodes < 1 || n_nodes > 254)
    throw std::invalid_argument("scenario: n_nodes must be in [1, 254]");
  const auto ids = resolved_active_set();
  if (static_cast<int>(ids.size()) > n_nodes)
    throw std::invalid_argument("scenario: active set larger than node count");
  for (int id : ids)
    if (id < 1 || id > n_nodes)
      throw std::invalid_argument("scenario: active node id out of range");
  if (product_id == 0)
    throw std::invalid_argument("scenario: product_id must be >= 1");
  if (poll_count < 0) throw std::invalid_argument("scenario: poll_count must be >= 0");
  const Duration last_poll = poll_first_offset_us + (poll_count > 0 ? poll_count - 1 : 0) * poll_spacing_us;
  if (poll_count > 0 && last_poll >= window_us)
    throw std::invalid_argument("scenario: poll schedule does not fit the run window");
  if (payloads.poll > kMaxPayload || payloads.reply > kMaxPayload ||
      payloads.start_stop > kMaxPayload || payloads.unicast > kMaxPayload)
    throw std::invalid_argument("scenario: payload exceeds 126 bytes");
  if (unicast_retries < 0)
    throw std::invalid_argument("scenario: unicast_retries must be >= 0");
}

// ------------------------------------------------------------ WarehouseNet

WarehouseNet::WarehouseNet(const WarehouseConfig& cfg, std::uint64_t seed)
    : cfg_(cfg), seed_(seed), dfa_(EnergyDfaModel::from_params(cfg.energy)) {
  cfg_.validate();
  channel_ = std::make_unique<Channel>(sim_, cfg_.radio);

  stats_.run_id = static_cast<std::uint16_t>(seed & 0xffff);
  stats_.n_nodes = cfg_.n_nodes;
  stats_.active_set = cfg_.resolved_active_set();
  stats_.node.resize(cfg_.n_nodes);
  stats_.replies_per_poll.resize(cfg_.poll_count);

  inventory_.resize(cfg_.n_nodes + 1);
  window_open_.assign(cfg_.n_nodes + 1, false);
  node_seq_.assign(cfg_.n_nodes + 1, 0);
  for (int id : stats_.active_set)
    inventory_[id] = Inventory{cfg_.product_id, cfg_.quantity_each};

  agents_.reserve(cfg_.n_nodes + 1);
  agents_.push_back(std::make_unique<NodeAgent>(sim_, *channel_, cfg_.mac, dfa_, 0,
                                                RngStream(seed, 0), &log_,
                                                /*always_rx=*/true,
                                                cfg_.energy.alternating_lpl));
  for (int id = 1; id <= cfg_.n_nodes; ++id)
    agents_.push_back(std::make_unique<NodeAgent>(
        sim_, *channel_, cfg_.mac, dfa_, id, RngStream(seed, static_cast<std::uint64_t>(id)),
        &log_, /*always_rx=*/false, cfg_.energy.alternating_lpl));
  for (auto& a : agents_) channel_->subscribe(a.get());

  ap().on_sent = [this](const Frame& f, SimTime now) { ap_on_sent(f, now); };
  ap().on_receive = [this](const Frame& f, SimTime now) { ap_on_receive(f, now); };
  for (int id = 1; id <= cfg_.n_nodes; ++id) {
    agents_[id]->on_receive = [this, id](const Frame& f, SimTime now) {
      node_on_receive(id, f, now);
    };
    agents_[id]->on_sent = [this, id](const Frame& f, SimTime now) {
      node_on_sent(id, f, now);
    };
  }

  // Static horizon: boot delay + start access + window + drain margin.
  Frame start{};
  start.kind = FrameKind::Start;
  start.payload_len = cfg_.payloads.start_stop;
  horizon_ = 100'000 + cfg_.mac.t_fixed_us + airtime_us(start, cfg_.radio) +
             cfg_.window_us + 1'000'000;
  if (cfg_.collect_in_band)
    horizon_ += static_cast<Duration>(cfg_.n_nodes) *
                ((cfg_.unicast_retries + 1) * cfg_.unicast_timeout_us + 100'000);
}

void WarehouseNet::boot() {
  const SimTime now = sim_.now();
  ap().start(now);
  const Duration period = cfg_.radio.lpl_period_us();
  for (int id = 1; id <= cfg_.n_nodes; ++id) {
    // The phase draw is the first item on each node's stream.
    RngStream phase_rng(seed_, 0x8000'0000ULL + static_cast<std::uint64_t>(id));
    agents_[id]->start(now, phase_rng.uniform_us(0, period - 1));
  }
}

void WarehouseNet::schedule_run(Duration boot_delay_us) {
  sim_.schedule(sim_.now() + boot_delay_us, EventKind::AppCommand, 0, [this] {
    Frame f{};
    f.kind = FrameKind::Start;
    f.dst = kBroadcastAddr;
    f.payload_len = cfg_.payloads.start_stop;
    f.run_id = stats_.run_id;
    ap_send(f);
  });
}

void WarehouseNet::ap_send(Frame f) {
  f.src = 0;
  f.seq = ap_seq_++;
  ap().request_send(f);
}

void WarehouseNet::ap_on_sent(const Frame& f, SimTime now) {
  switch (f.kind) {
    case FrameKind::Start: {
      // The window runs from the end of the start broadcast to the end of the
      // stop broadcast; the stop request is timed so both ends line up.
      stats_.window_start = now;
      ap_window_open_ = true;
      stats_.ap = ApStats{};
      ap().stats_reset(now);
      for (int k = 0; k < cfg_.poll_count; ++k) {
        sim_.schedule(now + cfg_.poll_first_offset_us + static_cast<Duration>(k) * cfg_.poll_spacing_us,
                      EventKind::AppCommand, 0, [this] {
                        Frame p{};
                        p.kind = FrameKind::Poll;
                        p.dst = kBroadcastAddr;
                        p.payload_len = cfg_.payloads.poll;
                        p.product = cfg_.product_id;
                        ap_send(p);
                      });
      }
      Frame stop{};
      stop.kind = FrameKind::Stop;
      stop.payload_len = cfg_.payloads.start_stop;
      const SimTime stop_request =
          now + cfg_.window_us - cfg_.mac.t_fixed_us - airtime_us(stop, cfg_.radio);
      sim_.schedule(stop_request, EventKind::AppCommand, 0, [this] {
        Frame f2{};
        f2.kind = FrameKind::Stop;
        f2.dst = kBroadcastAddr;
        f2.payload_len = cfg_.payloads.start_stop;
        f2.run_id = stats_.run_id;
        ap_send(f2);
      });
      break;
    }
    case FrameKind::Poll:
      if (ap_window_open_) ++stats_.ap.polls_sent;
      break;
    case FrameKind::Stop: {
      stats_.window_end = now;
      stats_.ap.energy_framed_pj = ap().stats_freeze(now);
      ap_window_open_ = false;
      if (cfg_.collect_in_band)
        sim_.schedule(now + 10'000, EventKind::AppCommand, 0,
                      [this] { collect_stats_in_band(1); });
      break;
    }
    default:
      break;
  }
}

void WarehouseNet::ap_on_receive(const Frame& f, SimTime now) {
  ++stats_.ap.rx_raw;
  if (f.kind == FrameKind::Reply && ap_window_open_) {
    ++stats_.ap.rx_replies_framed;
    const int poll_idx = static_cast<int>(stats_.ap.polls_sent) - 1;
    if (poll_idx >= 0 && poll_idx < static_cast<int>(stats_.replies_per_poll.size()))
      stats_.replies_per_poll[poll_idx].push_back(ReplySeen{f.src, f.quantity, now});
  }
  if (f.kind == FrameKind::Unicast) {
    // Echo closing a pending request.
    for (auto it = pending_unicasts_.begin(); it != pending_unicasts_.end(); ++it) {
      auto& p = it->second;
      if (p.dst == f.src && p.seq == f.seq) {
        sim_.cancel(p.timer);
        auto done = std::move(p.done);
        const int attempts = p.attempts;
        pending_unicasts_.erase(it);
        if (done) done(UnicastOutcome{true, attempts});
        break;
      }
    }
  }
}

void WarehouseNet::node_on_receive(int id, const Frame& f, SimTime now) {
  auto& st = stats_.node[id - 1];
  ++st.rx_raw;
  switch (f.kind) {
    case FrameKind::Start:
      // Fresh window: statistics and accounted energy restart here; the start
      // frame itself is not counted.
      st.tx_framed = 0;
      st.rx_framed = 0;
      st.energy_framed_pj = 0;
      st.froze = false;
      window_open_[id] = true;
      agents_[id]->stats_reset(now);
      break;
    case FrameKind::Stop:
      if (window_open_[id]) ++st.rx_framed;
      st.energy_framed_pj = agents_[id]->stats_freeze(now);
      st.froze = true;
      window_open_[id] = false;
      break;
    case FrameKind::Poll: {
      if (window_open_[id]) {
        ++st.rx_framed;
        ++st.polls_rx_framed;
      }
      const Inventory& inv = inventory_[id];
      if (inv.product != 0 && inv.product == f.product) {
        Frame r{};
        r.kind = FrameKind::Reply;
        r.dst = 0;
        r.seq = node_seq_[id]++;
        r.payload_len = cfg_.payloads.reply;
        r.product = f.product;
        r.quantity = inv.quantity;
        agents_[id]->request_send(r);
      }
      break;
    }
    case FrameKind::Unicast: {
      if (window_open_[id]) ++st.rx_framed;
      Frame echo{};
      echo.kind = FrameKind::Unicast;
      echo.dst = f.src;
      echo.seq = f.seq;  // echoed back so the requester can match it
      echo.payload_len = cfg_.payloads.unicast;
      agents_[id]->request_send(echo);
      break;
    }
    default:
      if (window_open_[id]) ++st.rx_framed;
      break;
  }
}

void WarehouseNet::node_on_sent(int id, const Frame& f, SimTime) {
  auto& st = stats_.node[id - 1];
  if (f.kind == FrameKind::Reply) {
    ++st.tx_raw;
    if (window_open_[id]) ++st.tx_framed;
  }
}

void WarehouseNet::unicast_request(int dst, std::function<void(UnicastOutcome)> done) {
  if (dst < 1 || dst > cfg_.n_nodes)
    throw std::invalid_argument("unicast_request: unknown node");
  const int key = next_unicast_key_++;
  PendingUnicast p;
  p.dst = dst;
  p.seq = ap_seq_;  // ap_send assigns this value to the outgoing frame
  p.retries_left = cfg_.unicast_retries;
  p.done = std::move(done);
  pending_unicasts_.emplace_back(key, std::move(p));
  send_unicast_attempt(key);
}

void WarehouseNet::send_unicast_attempt(int key) {
  auto it = std::find_if(pending_unicasts_.begin(), pending_unicasts_.end(),
                         [key](const auto& kv) { return kv.first == key; });
  if (it == pending_unicasts_.end()) return;
  auto& p = it->second;
  ++p.attempts;
  Frame f{};
  f.kind = FrameKind::Unicast;
  f.dst = static_cast<std::uint8_t>(p.dst);
  f.payload_len = cfg_.payloads.unicast;
  if (p.attempts == 1) {
    ap_send(f);
    p.seq = static_cast<std::uint8_t>(ap_seq_ - 1);
  } else {
    f.src = 0;
    f.seq = p.seq;  // retransmissions reuse the sequence number
    ap().request_send(f);
  }
  arm_unicast_timeout(key);
}

void WarehouseNet::arm_unicast_timeout(int key) {
  auto it = std::find_if(pending_unicasts_.begin(), pending_unicasts_.end(),
                         [key](const auto& kv) { return kv.first == key; });
  if (it == pending_unicasts_.end()) return;
  it->second.timer =
      sim_.schedule(sim_.now() + cfg_.unicast_timeout_us, EventKind::Timer, 0, [this, key] {
        auto it2 = std::find_if(pending_unicasts_.begin(), pending_unicasts_.end(),
                                [key](const auto& kv) { return kv.first == key; });
        if (it2 == pending_unicasts_.end()) return;
        auto& req = it2->second;
        if (ap().has_pending()) {
          // The attempt never reached the air (long foreign occupancy); keep
          // waiting instead of stacking another frame onto the queue.
          arm_unicast_timeout(key);
          return;
        }
        if (req.retries_left-- > 0) {
          send_unicast_attempt(key);
        } else {
          auto done = std::move(req.done);
          const int attempts = req.attempts;
          pending_unicasts_.erase(it2);
          if (done) done(UnicastOutcome{false, attempts});
        }
      });
}

void WarehouseNet::collect_stats_in_band(int next_node) {
  if (next_node > cfg_.n_nodes) return;
  unicast_request(next_node, [this, next_node](UnicastOutcome) {
    collect_stats_in_band(next_node + 1);
  });
}

RunResult WarehouseNet::finish() {
  sim_.run_until(horizon_);

  RunResult out;
  out.mode = cfg_.mac.mode;
  out.t_fixed_us = cfg_.mac.t_fixed_us;
  out.end_time = horizon_;

  // A node that never heard the stop broadcast is a broken run; flag it and
  // settle its ledger so the totals still add up.
  for (int id = 1; id <= cfg_.n_nodes; ++id) {
    auto& st = stats_.node[id - 1];
    if (!st.froze && stats_.window_end > 0) {
      violations_.push_back("node " + std::to_string(id) + " missed the stop broadcast");
      st.energy_framed_pj = agents_[id]->stats_freeze(sim_.now());
      st.froze = true;
    }
  }

  out.energy_checks.reserve(agents_.size());
  for (int id = 0; id <= cfg_.n_nodes; ++id) {
    NodeEnergyCheck c;
    c.node = id;
    if (id == 0) {
      c.has_frozen = stats_.window_end > 0;
      c.frozen_pj = stats_.ap.energy_framed_pj;
    } else {
      c.has_frozen = stats_.node[id - 1].froze;
      c.frozen_pj = stats_.node[id - 1].energy_framed_pj;
    }
    c.final_pj = agents_[id]->ledger().freeze(horizon_);
    out.energy_checks.push_back(c);
  }

  out.stats = stats_;
  out.records = channel_->records();
  out.jams = channel_->jams();
  out.log = std::move(log_);
  out.trace_hash = sim_.trace_hash();
  out.violations = std::move(violations_);

  if (sim_.scheduled_count() !=
      sim_.fired_count() + sim_.cancelled_count() + sim_.pending_count())
    out.violations.push_back("kernel event accounting mismatch");

  verify_run(out, dfa_, out.violations);
  return out;
}

RunResult run_experiment(const WarehouseConfig& cfg, std::uint64_t seed) {
  WarehouseNet net(cfg, seed);
  net.boot();
  net.schedule_run();
  return net.finish();
}

// ---------------------------------------------------------------- Poisson

RunResult run_poisson(const PoissonConfig& cfg, std::uint64_t seed) {
  cfg.radio.validate();
  if (cfg.n_nodes < 1 || cfg.n_nodes > 254)
    throw std::invalid_argument("poisson: n_nodes must be in [1, 254]");
  if (cfg.offered_load <= 0)
    throw std::invalid_argument("poisson: offered_load must be positive");

  Simulator sim;
  Channel channel(sim, cfg.radio);
  MacEventLog log;
  const EnergyDfaModel dfa = EnergyDfaModel::from_params(cfg.energy);
  MacParams mac;
  mac.mode = MacMode::Aloha;

  Frame proto{};
  proto.kind = FrameKind::Unicast;
  proto.dst = 0;
  proto.payload_len = cfg.payload;
  proto.preamble = cfg.preamble;
  const Duration frame_air = airtime_us(proto, cfg.radio);
  const double mean_interarrival =
      static_cast<double>(cfg.n_nodes) * static_cast<double>(frame_air) / cfg.offered_load;

  std::vector<std::unique_ptr<NodeAgent>> agents;
  for (int id = 1; id <= cfg.n_nodes; ++id)
    agents.push_back(std::make_unique<NodeAgent>(sim, channel, mac, dfa, id,
                                                 RngStream(seed, static_cast<std::uint64_t>(id)),
                                                 &log, false, cfg.energy.alternating_lpl));
  for (auto& a : agents) channel.subscribe(a.get());

  const Duration period = cfg.radio.lpl_period_us();
  for (int id = 1; id <= cfg.n_nodes; ++id) {
    RngStream phase_rng(seed, 0x8000'0000ULL + static_cast<std::uint64_t>(id));
    agents[id - 1]->start(0, phase_rng.uniform_us(0, period - 1));
  }

  std::int64_t attempts = 0, drops = 0;
  // One generator per node; their superposition is the Poisson offered load.
  struct Gen {
    RngStream rng;
    NodeAgent* agent;
  };
  std::vector<Gen> gens;
  for (int id = 1; id <= cfg.n_nodes; ++id)
    gens.push_back(Gen{RngStream(seed, 0x1'0000ULL + static_cast<std::uint64_t>(id)),
                       agents[id - 1].get()});

  std::function<void(int)> arrival = [&](int i) {
    Gen& g = gens[i];
    const SimTime now = sim.now();
    if (now < cfg.duration_us) {
      if (g.agent->has_pending()) {
        ++drops;  // device still busy with its previous frame
      } else {
        ++attempts;
        Frame f = proto;
        g.agent->request_send(f);
      }
    }
    sim.schedule(now + g.rng.exponential_us(mean_interarrival), EventKind::AppCommand,
                 g.agent->id(), [&arrival, i] { arrival(i); });
  };
  for (int i = 0; i < cfg.n_nodes; ++i) {
    const SimTime first = gens[i].rng.exponential_us(mean_interarrival);
    sim.schedule(first, EventKind::AppCommand, i + 1, [&arrival, i] { arrival(i); });
  }

  const SimTime horizon = cfg.duration_us + frame_air + 100'000;
  sim.run_until(horizon);

  RunResult out;
  out.mode = MacMode::Aloha;
  out.t_fixed_us = mac.t_fixed_us;
  out.end_time = horizon;
  out.records = channel.records();
  out.jams = channel.jams();
  out.log = std::move(log);
  out.trace_hash = sim.trace_hash();
  out.attempts = attempts;
  out.drops = drops;

  std::int64_t aired_us = 0, good_us = 0;
  for (const auto& r : out.records) {
    if (r.start >= cfg.duration_us) continue;
    aired_us += r.end - r.start;
    if (!r.collided) good_us += r.end - r.start;
  }
  out.g_measured = static_cast<double>(aired_us) / static_cast<double>(cfg.duration_us);
  out.utilization = static_cast<double>(good_us) / static_cast<double>(cfg.duration_us);

  for (int id = 1; id <= cfg.n_nodes; ++id) {
    NodeEnergyCheck c;
    c.node = id;
    c.final_pj = agents[id - 1]->ledger().freeze(horizon);
    out.energy_checks.push_back(c);
  }
  if (sim.scheduled_count() != sim.fired_count() + sim.cancelled_count() + sim.pending_count())
    out.violations.push_back("kernel event accounting mismatch");
  verify_run(out, dfa, out.violations);
  return out;
}

// ------------------------------------------------------------------- fig5

ScriptedJamResult run_fig5_scenario(const RadioParams& radio, const EnergyParams& energy) {
  Simulator sim;
  Channel channel(sim, radio);
  MacEventLog log;
  const EnergyDfaModel dfa = EnergyDfaModel::from_params(energy);
  MacParams mac;

  std::vector<std::unique_ptr<NodeAgent>> agents;
  for (int id = 1; id <= 3; ++id)
    agents.push_back(std::make_unique<NodeAgent>(sim, channel, mac, dfa, id,
                                                 RngStream(1, static_cast<std::uint64_t>(id)),
                                                 &log, false, energy.alternating_lpl));
  for (auto& a : agents) channel.subscribe(a.get());

  // Winning draws per contention round: 1.0 ms, then 0.5 ms, then 2.5 ms.
  agents[0]->force_tps_draws({1'000});
  agents[1]->force_tps_draws({3'000, 500});
  agents[2]->force_tps_draws({4'000, 2'000, 2'500});

  agents[0]->start(0, 0);
  agents[1]->start(0, 1'600);
  agents[2]->start(0, 3'200);

  const JamInterval jam{10'000, 30'000};
  channel.add_jam(jam);

  for (int i = 0; i < 3; ++i) {
    const SimTime when = 15'000 + 500 * i;  // all queued while the jammer is up
    NodeAgent* agent = agents[i].get();
    sim.schedule(when, EventKind::AppCommand, i + 1, [agent] {
      Frame f{};
      f.kind = FrameKind::Unicast;
      f.dst = 0;
      f.payload_len = 16;
      agent->request_send(f);
    });
  }

  const SimTime horizon = 150'000;
  sim.run_until(horizon);

  ScriptedJamResult out;
  out.jam_end = jam.end;
  out.run.mode = MacMode::Lbt;
  out.run.t_fixed_us = mac.t_fixed_us;
  out.run.end_time = horizon;
  out.run.records = channel.records();
  out.run.jams = channel.jams();
  out.run.log = std::move(log);
  out.run.trace_hash = sim.trace_hash();
  for (int id = 1; id <= 3; ++id) {
    NodeEnergyCheck c;
    c.node = id;
    c.final_pj = agents[id - 1]->ledger().freeze(horizon);
    out.run.energy_checks.push_back(c);
  }
  verify_run(out.run, dfa, out.run.violations);
  return out;
}

}  // namespace lbtsim
