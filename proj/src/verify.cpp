#include "lbtsim/verify.hpp"

#include <string>
#include <unordered_map>

namespace lbtsim {

std::vector<std::string> verify_energy_replay(const RunResult& run,
                                              const EnergyDfaModel& dfa) {
  std::vector<std::string> out;
  for (const auto& check : run.energy_checks) {
    const ReplayResult r = replay_energy(run.log.rows, check.node, dfa, run.end_time);
    if (check.has_frozen) {
      if (!r.saw_freeze) {
        out.push_back("node " + std::to_string(check.node) +
                      ": ledger froze but the log has no freeze marker");
        continue;
      }
      if (r.frozen_pj != check.frozen_pj)
        out.push_back("node " + std::to_string(check.node) + ": frozen energy " +
                      std::to_string(check.frozen_pj) + " pJ != replay " +
                      std::to_string(r.frozen_pj) + " pJ");
    }
    if (r.final_pj != check.final_pj)
      out.push_back("node " + std::to_string(check.node) + ": final energy " +
                    std::to_string(check.final_pj) + " pJ != replay " +
                    std::to_string(r.final_pj) + " pJ");
  }
  return out;
}

std::vector<std::string> verify_lbt_backoff(const RunResult& run) {
  std::vector<std::string> out;
  if (run.mode != MacMode::Lbt) return out;

  // The MAC logs the counted wait at the access instant; index those rows.
  std::unordered_map<std::uint64_t, const MacLogRow*> tx_rows;
  for (const auto& row : run.log.rows)
    if (row.type == MacLogRow::Type::TxStart)
      tx_rows.emplace((static_cast<std::uint64_t>(row.node) << 48) ^
                          static_cast<std::uint64_t>(row.time),
                      &row);

  for (const auto& rec : run.records) {
    if (rec.sender < 0) continue;
    const auto it = tx_rows.find((static_cast<std::uint64_t>(rec.sender) << 48) ^
                                 static_cast<std::uint64_t>(rec.start));
    const MacLogRow* tx_row = it == tx_rows.end() ? nullptr : it->second;
    if (!tx_row) {
      out.push_back("tx by node " + std::to_string(rec.sender) + " at " +
                    std::to_string(rec.start) + " us has no back-off log entry");
      continue;
    }
    const Duration required = tx_row->a;
    if (required < run.t_fixed_us) {
      out.push_back("tx by node " + std::to_string(rec.sender) + " at " +
                    std::to_string(rec.start) + " us counted only " +
                    std::to_string(required) + " us");
      continue;
    }
    const SimTime window_begin = rec.start - required;
    auto covers_window = [&](SimTime s, SimTime e) {
      // Any activity instant t in [window_begin, rec.start) with s <= t < e.
      return s < rec.start && e > window_begin;
    };
    for (const auto& other : run.records) {
      if (other.index == rec.index || other.sender == rec.sender) continue;
      if (covers_window(other.start, other.end)) {
        out.push_back("tx by node " + std::to_string(rec.sender) + " at " +
                      std::to_string(rec.start) + " us: listen window overlaps frame of node " +
                      std::to_string(other.sender) + " starting " +
                      std::to_string(other.start) + " us");
        break;
      }
    }
    for (const auto& jam : run.jams) {
      if (covers_window(jam.start, jam.end)) {
        out.push_back("tx by node " + std::to_string(rec.sender) + " at " +
                      std::to_string(rec.start) + " us: listen window overlaps a jam");
        break;
      }
    }
  }
  return out;
}

std::vector<std::string> verify_app_counters(const RunStats& stats) {
  std::vector<std::string> out;
  if (stats.n_nodes == 0) return out;
  std::int64_t sum_tx = 0;
  for (const auto& st : stats.node) sum_tx += st.tx_framed;
  if (stats.ap.rx_replies_framed > sum_tx)
    out.push_back("conservation violated: AP received " +
                  std::to_string(stats.ap.rx_replies_framed) + " replies but only " +
                  std::to_string(sum_tx) + " were transmitted");
  for (int id = 1; id <= stats.n_nodes; ++id) {
    const auto& st = stats.node[id - 1];
    if (st.tx_framed > st.polls_rx_framed)
      out.push_back("node " + std::to_string(id) + " sent " + std::to_string(st.tx_framed) +
                    " replies for " + std::to_string(st.polls_rx_framed) + " polls");
  }
  if (auto t = stats.throughput(); t.has_value() && (*t < 0.0 || *t > 1.0))
    out.push_back("throughput outside [0, 1]");
  return out;
}

void verify_run(const RunResult& run, const EnergyDfaModel& dfa,
                std::vector<std::string>& sink) {
  for (auto& v : verify_energy_replay(run, dfa)) sink.push_back("energy: " + v);
  for (auto& v : verify_lbt_backoff(run)) sink.push_back("backoff: " + v);
  for (auto& v : verify_app_counters(run.stats)) sink.push_back("counters: " + v);
}

}  // namespace lbtsim
