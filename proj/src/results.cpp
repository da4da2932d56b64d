#include "lbtsim/results.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace lbtsim {

namespace {
std::string fmt6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}
std::string fmt_opt(const std::optional<double>& v) {
  return v ? fmt6(*v) : std::string("nan");
}
constexpr double kPjPerMj = 1e9;
}  // namespace

EnergySummary summarize_energy_pj(const std::vector<std::int64_t>& pj) {
  EnergySummary s;
  s.samples = static_cast<int>(pj.size());
  if (pj.empty()) return s;
  double sum = 0, mn = 1e300, mx = -1e300;
  for (auto v : pj) {
    const double mj = static_cast<double>(v) / kPjPerMj;
    sum += mj;
    mn = std::min(mn, mj);
    mx = std::max(mx, mj);
  }
  s.mean_mj = sum / s.samples;
  s.min_mj = mn;
  s.max_mj = mx;
  if (s.samples > 1) {
    double acc = 0;
    for (auto v : pj) {
      const double d = static_cast<double>(v) / kPjPerMj - s.mean_mj;
      acc += d * d;
    }
    s.std_mj = std::sqrt(acc / (s.samples - 1));
  }
  return s;
}

ResultRow make_result_row(const RunResult& run, int n_active, std::uint64_t seed) {
  ResultRow row;
  row.n_active = n_active;
  row.seed = seed;
  row.throughput = run.stats.throughput();
  row.n_rx = run.stats.ap.rx_replies_framed;
  row.sum_n_tx = run.stats.sum_n_tx();
  row.energy = summarize_energy_pj(run.stats.active_energies_pj());
  return row;
}

std::string results_csv(const std::vector<ResultRow>& rows) {
  std::ostringstream os;
  os << "n_active,seed,throughput,n_rx,sum_n_tx,"
        "energy_mean_mj,energy_std_mj,energy_min_mj,energy_max_mj\n";
  for (const auto& r : rows)
    os << r.n_active << ',' << r.seed << ',' << fmt_opt(r.throughput) << ',' << r.n_rx
       << ',' << r.sum_n_tx << ',' << fmt6(r.energy.mean_mj) << ',' << fmt6(r.energy.std_mj)
       << ',' << fmt6(r.energy.min_mj) << ',' << fmt6(r.energy.max_mj) << '\n';
  return os.str();
}

std::vector<AggregateRow> aggregate_by_n(
    const std::vector<ResultRow>& rows,
    const std::vector<std::vector<std::int64_t>>& energy_samples_by_row) {
  std::map<int, std::vector<int>> by_n;  // n_active -> row indices
  for (int i = 0; i < static_cast<int>(rows.size()); ++i)
    by_n[rows[i].n_active].push_back(i);

  std::vector<AggregateRow> out;
  for (const auto& [n, idxs] : by_n) {
    AggregateRow a;
    a.n_active = n;
    a.runs = static_cast<int>(idxs.size());
    std::vector<double> ts;
    std::vector<std::int64_t> pooled;
    double nrx = 0, ntx = 0;
    for (int i : idxs) {
      if (rows[i].throughput) ts.push_back(*rows[i].throughput);
      nrx += static_cast<double>(rows[i].n_rx);
      ntx += static_cast<double>(rows[i].sum_n_tx);
      if (i < static_cast<int>(energy_samples_by_row.size()))
        pooled.insert(pooled.end(), energy_samples_by_row[i].begin(),
                      energy_samples_by_row[i].end());
    }
    a.t_mean = mean_of(ts);
    a.t_std = sample_std(ts);
    const EnergySummary es = summarize_energy_pj(pooled);
    a.e_mean_mj = es.mean_mj;
    a.e_std_mj = es.std_mj;
    a.e_min_mj = es.min_mj;
    a.e_max_mj = es.max_mj;
    a.nrx_mean = nrx / a.runs;
    a.ntx_mean = ntx / a.runs;
    out.push_back(a);
  }
  return out;
}

std::string aggregate_csv(const std::vector<AggregateRow>& rows) {
  std::ostringstream os;
  os << "n_active,runs,t_mean,t_std,energy_mean_mj,energy_std_mj,"
        "energy_min_mj,energy_max_mj,nrx_mean,ntx_mean\n";
  for (const auto& a : rows)
    os << a.n_active << ',' << a.runs << ',' << fmt6(a.t_mean) << ',' << fmt6(a.t_std) << ','
       << fmt6(a.e_mean_mj) << ',' << fmt6(a.e_std_mj) << ',' << fmt6(a.e_min_mj) << ','
       << fmt6(a.e_max_mj) << ',' << fmt6(a.nrx_mean) << ',' << fmt6(a.ntx_mean) << '\n';
  return os.str();
}

std::string nodes_csv(const RunStats& stats, std::uint64_t seed) {
  std::ostringstream os;
  os << "seed,node,active,n_tx,n_rx_framed,n_rx_raw,polls_rx,energy_pj,energy_mj\n";
  auto is_active = [&stats](int id) {
    return std::find(stats.active_set.begin(), stats.active_set.end(), id) !=
           stats.active_set.end();
  };
  for (int id = 1; id <= stats.n_nodes; ++id) {
    const auto& st = stats.node[id - 1];
    os << seed << ',' << id << ',' << (is_active(id) ? 1 : 0) << ',' << st.tx_framed << ','
       << st.rx_framed << ',' << st.rx_raw << ',' << st.polls_rx_framed << ','
       << st.energy_framed_pj << ','
       << fmt6(static_cast<double>(st.energy_framed_pj) / kPjPerMj) << '\n';
  }
  return os.str();
}

std::string describe(const MacLogRow& row) {
  switch (row.type) {
    case MacLogRow::Type::Driver:
      return std::string("drv:") + to_string(static_cast<DriverCall>(row.a));
    case MacLogRow::Type::Phase:
      return std::string("phase:") + to_string(static_cast<MacPhase>(row.a)) + "->" +
             to_string(static_cast<MacPhase>(row.b));
    case MacLogRow::Type::DrawTps:
      return "draw_tps:" + std::to_string(row.a);
    case MacLogRow::Type::DrawPre:
      return "draw_pre:" + std::to_string(row.a);
    case MacLogRow::Type::TxStart:
      return "tx_start:wait=" + std::to_string(row.a) +
             (row.b ? ":deferred" : ":first-try");
    case MacLogRow::Type::StatsReset:
      return "stats_reset";
    case MacLogRow::Type::StatsFreeze:
      return "stats_freeze";
  }
  return "?";
}

std::string mac_log_csv(const MacEventLog& log) {
  std::ostringstream os;
  os << "time_us,node,event\n";
  for (const auto& row : log.rows)
    os << row.time << ',' << row.node << ',' << describe(row) << '\n';
  return os.str();
}

std::string aloha_csv_header() {
  return "g_target,seed,g_measured,utilization,attempts,drops\n";
}

std::string aloha_csv_row(double g_target, std::uint64_t seed, const RunResult& run) {
  std::ostringstream os;
  os << fmt6(g_target) << ',' << seed << ',' << fmt6(run.g_measured) << ','
     << fmt6(run.utilization) << ',' << run.attempts << ',' << run.drops << '\n';
  return os.str();
}

std::string run_metadata_json(const std::string& command, const std::string& scenario_origin,
                              std::uint64_t seed, std::uint64_t trace_hash,
                              const std::vector<std::pair<std::string, std::string>>& extra) {
  nlohmann::ordered_json j;
  j["schema_version"] = kResultsSchemaVersion;
  j["command"] = command;
  j["scenario"] = scenario_origin;
  j["seed"] = seed;
  char hash[32];
  std::snprintf(hash, sizeof hash, "%016llx", static_cast<unsigned long long>(trace_hash));
  j["trace_hash"] = hash;
  j["artifacts"] = nlohmann::ordered_json::object();
  for (const auto& [k, v] : extra) j["artifacts"][k] = v;
  return j.dump(2) + "\n";
}

double mean_of(const std::vector<double>& xs) {
  if (xs.empty()) return 0;
  return std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

double sample_std(const std::vector<double>& xs) {
  if (xs.size() < 2) return 0;
  const double m = mean_of(xs);
  double acc = 0;
  for (double x : xs) acc += (x - m) * (x - m);
  return std::sqrt(acc / (static_cast<double>(xs.size()) - 1));
}

namespace {
std::vector<double> ranks_of(const std::vector<double>& xs) {
  const int n = static_cast<int>(xs.size());
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&xs](int a, int b) { return xs[a] < xs[b]; });
  std::vector<double> ranks(n, 0);
  int i = 0;
  while (i < n) {
    int j = i;
    while (j + 1 < n && xs[order[j + 1]] == xs[order[i]]) ++j;
    const double avg = (i + j) / 2.0 + 1.0;  // average rank for ties
    for (int k = i; k <= j; ++k) ranks[order[k]] = avg;
    i = j + 1;
  }
  return ranks;
}
}  // namespace

double spearman_rho(const std::vector<double>& xs, const std::vector<double>& ys) {
  if (xs.size() != ys.size() || xs.size() < 2)
    throw std::invalid_argument("spearman_rho: need two equal-length samples");
  const auto rx = ranks_of(xs);
  const auto ry = ranks_of(ys);
  const double mx = mean_of(rx), my = mean_of(ry);
  double num = 0, dx = 0, dy = 0;
  for (size_t i = 0; i < rx.size(); ++i) {
    num += (rx[i] - mx) * (ry[i] - my);
    dx += (rx[i] - mx) * (rx[i] - mx);
    dy += (ry[i] - my) * (ry[i] - my);
  }
  if (dx == 0 || dy == 0) return 0;
  return num / std::sqrt(dx * dy);
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << content;
  if (!out) throw std::runtime_error("short write to " + path);
}

}  // namespace lbtsim
