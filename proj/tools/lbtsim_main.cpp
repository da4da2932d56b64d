#include <algorithm>
#include <atomic>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "lbtsim/results.hpp"
#include "lbtsim/scenario.hpp"
#include "lbtsim/verify.hpp"

namespace fs = std::filesystem;
using namespace lbtsim;

namespace {

struct CommonOpts {
  std::string scenario_path;
  std::string out_dir;
  std::uint64_t seed = 1;
  std::string mode;        // "", "lbt", "aloha"
  std::string tps_policy;  // "", "redraw", "retain"
  std::string energy_params_path;
};

void apply_overrides(Scenario& sc, const CommonOpts& o) {
  if (!o.energy_params_path.empty()) {
    const EnergyParams e = load_energy_params_file(o.energy_params_path);
    sc.warehouse.energy = e;
    sc.poisson.energy = e;
  }
  if (!o.mode.empty())
    sc.warehouse.mac.mode = o.mode == "aloha" ? MacMode::Aloha : MacMode::Lbt;
  if (!o.tps_policy.empty())
    sc.warehouse.mac.tps_policy =
        o.tps_policy == "retain" ? TpsPolicy::RetainPerPacket : TpsPolicy::RedrawPerRound;
}

void ensure_out_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw ConfigError(dir + ": cannot create output directory (" + ec.message() + ")");
}

int report_violations(const std::vector<std::string>& violations) {
  if (violations.empty()) return 0;
  std::cerr << "invariant violations:\n";
  for (const auto& v : violations) std::cerr << "  " << v << '\n';
  return 2;
}

// Parses "a..b" or a single integer.
std::pair<int, int> parse_range(const std::string& s) {
  const auto pos = s.find("..");
  try {
    if (pos == std::string::npos) {
      const int v = std::stoi(s);
      return {v, v};
    }
    return {std::stoi(s.substr(0, pos)), std::stoi(s.substr(pos + 2))};
  } catch (const std::exception&) {
    throw ConfigError("--n: expected N or A..B, got \"" + s + "\"");
  }
}

int cmd_run(const CommonOpts& o, bool trace) {
  Scenario sc = load_scenario_file(o.scenario_path);
  apply_overrides(sc, o);
  ensure_out_dir(o.out_dir);

  if (sc.kind == Scenario::Kind::Poisson) {
    const RunResult run = run_poisson(sc.poisson, o.seed);
    write_text_file(o.out_dir + "/aloha.csv",
                    aloha_csv_header() + aloha_csv_row(sc.poisson.offered_load, o.seed, run));
    write_text_file(o.out_dir + "/run_meta.json",
                    run_metadata_json("run", o.scenario_path, o.seed, run.trace_hash,
                                      {{"aloha.csv", "aloha-v1"}}));
    return report_violations(run.violations);
  }

  const int n_active = static_cast<int>(sc.warehouse.resolved_active_set().size());
  const RunResult run = run_experiment(sc.warehouse, o.seed);
  std::vector<ResultRow> rows{make_result_row(run, n_active, o.seed)};
  write_text_file(o.out_dir + "/results.csv", results_csv(rows));
  write_text_file(o.out_dir + "/nodes.csv", nodes_csv(run.stats, o.seed));
  {
    // Rebuild the timeline from the captured records.
    std::ostringstream os;
    os << "start_us,end_us,sender,kind,collided\n";
    struct Row { SimTime s, e; int sender; std::string kind; bool c; };
    std::vector<Row> trows;
    for (const auto& r : run.records)
      trows.push_back({r.start, r.end, r.sender, to_string(r.frame.kind), r.collided});
    for (const auto& j : run.jams) trows.push_back({j.start, j.end, -1, "jam", false});
    std::stable_sort(trows.begin(), trows.end(),
                     [](const Row& a, const Row& b) { return a.s < b.s; });
    for (const auto& r : trows)
      os << r.s << ',' << r.e << ',' << r.sender << ',' << r.kind << ',' << (r.c ? 1 : 0)
         << '\n';
    write_text_file(o.out_dir + "/timeline.csv", os.str());
  }
  if (trace) write_text_file(o.out_dir + "/mac_log.csv", mac_log_csv(run.log));
  write_text_file(
      o.out_dir + "/run_meta.json",
      run_metadata_json("run", o.scenario_path, o.seed, run.trace_hash,
                        {{"results.csv", "results-v1"},
                         {"nodes.csv", "nodes-v1"},
                         {"timeline.csv", "timeline-v1"}}));
  return report_violations(run.violations);
}

int cmd_sweep(const CommonOpts& o, const std::string& n_range, int seeds, int jobs) {
  Scenario sc = load_scenario_file(o.scenario_path);
  apply_overrides(sc, o);
  if (sc.kind != Scenario::Kind::Warehouse)
    throw ConfigError("sweep requires a warehouse scenario");
  ensure_out_dir(o.out_dir);

  const auto [n_lo, n_hi] = parse_range(n_range);
  if (n_lo < 1 || n_hi < n_lo || n_hi > sc.warehouse.n_nodes)
    throw ConfigError("--n: range must satisfy 1 <= lo <= hi <= nodes");
  if (seeds < 1) throw ConfigError("--seeds must be >= 1");

  struct Task {
    int n_active;
    std::uint64_t seed;
  };
  std::vector<Task> tasks;
  for (int n = n_lo; n <= n_hi; ++n)
    for (int s = 0; s < seeds; ++s)
      tasks.push_back({n, o.seed + static_cast<std::uint64_t>(s)});

  std::vector<ResultRow> rows(tasks.size());
  std::vector<std::vector<std::int64_t>> energies(tasks.size());
  std::vector<std::string> failures(tasks.size());

  std::atomic<size_t> next{0};
  auto worker = [&] {
    for (;;) {
      const size_t i = next.fetch_add(1);
      if (i >= tasks.size()) return;
      WarehouseConfig cfg = sc.warehouse;
      cfg.active_set.clear();
      cfg.n_active = tasks[i].n_active;
      try {
        const RunResult run = run_experiment(cfg, tasks[i].seed);
        if (!run.violations.empty()) {
          std::string msg;
          for (const auto& v : run.violations) msg += v + "; ";
          failures[i] = msg;
          continue;
        }
        rows[i] = make_result_row(run, tasks[i].n_active, tasks[i].seed);
        energies[i] = run.stats.active_energies_pj();
      } catch (const std::exception& e) {
        failures[i] = e.what();
      }
    }
  };
  if (jobs < 1) jobs = 1;
  std::vector<std::thread> pool;
  for (int t = 0; t < jobs; ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();

  for (size_t i = 0; i < tasks.size(); ++i)
    if (!failures[i].empty()) {
      std::cerr << "run n_active=" << tasks[i].n_active << " seed=" << tasks[i].seed
                << " failed: " << failures[i] << '\n';
      return 2;
    }

  // Workers fill disjoint slots; sort once for a stable file order.
  std::vector<size_t> order(rows.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&rows](size_t a, size_t b) {
    return rows[a].n_active != rows[b].n_active ? rows[a].n_active < rows[b].n_active
                                                : rows[a].seed < rows[b].seed;
  });
  std::vector<ResultRow> sorted_rows;
  std::vector<std::vector<std::int64_t>> sorted_energy;
  for (size_t i : order) {
    sorted_rows.push_back(rows[i]);
    sorted_energy.push_back(std::move(energies[i]));
  }

  write_text_file(o.out_dir + "/results.csv", results_csv(sorted_rows));
  write_text_file(o.out_dir + "/aggregate.csv",
                  aggregate_csv(aggregate_by_n(sorted_rows, sorted_energy)));
  write_text_file(o.out_dir + "/run_meta.json",
                  run_metadata_json("sweep", o.scenario_path, o.seed, 0,
                                    {{"results.csv", "results-v1"},
                                     {"aggregate.csv", "aggregate-v1"}}));
  return 0;
}

int cmd_fig5(const std::string& out_dir) {
  ensure_out_dir(out_dir);
  const ScriptedJamResult res = run_fig5_scenario();
  std::ostringstream os;
  os << "start_us,end_us,sender,kind,collided\n";
  struct Row { SimTime s, e; int sender; std::string kind; bool c; };
  std::vector<Row> trows;
  for (const auto& j : res.run.jams) trows.push_back({j.start, j.end, -1, "jam", false});
  for (const auto& r : res.run.records)
    trows.push_back({r.start, r.end, r.sender, to_string(r.frame.kind), r.collided});
  std::stable_sort(trows.begin(), trows.end(),
                   [](const Row& a, const Row& b) { return a.s < b.s; });
  for (const auto& r : trows)
    os << r.s << ',' << r.e << ',' << r.sender << ',' << r.kind << ',' << (r.c ? 1 : 0) << '\n';
  write_text_file(out_dir + "/timeline.csv", os.str());
  write_text_file(out_dir + "/mac_log.csv", mac_log_csv(res.run.log));
  write_text_file(out_dir + "/run_meta.json",
                  run_metadata_json("fig5", "(built-in)", 0, res.run.trace_hash,
                                    {{"timeline.csv", "timeline-v1"},
                                     {"mac_log.csv", "maclog-v1"}}));
  return report_violations(res.run.violations);
}

int cmd_aloha(const std::string& out_dir, double g_min, double g_max, double g_step,
              int seeds, int nodes, Duration duration_us,
              const std::string& energy_params_path) {
  if (g_min <= 0 || g_max < g_min || g_step <= 0)
    throw ConfigError("aloha: need 0 < g-min <= g-max and g-step > 0");
  if (seeds < 1) throw ConfigError("aloha: --seeds must be >= 1");
  ensure_out_dir(out_dir);

  PoissonConfig base;
  base.n_nodes = nodes;
  base.duration_us = duration_us;
  if (!energy_params_path.empty()) base.energy = load_energy_params_file(energy_params_path);

  std::string csv = aloha_csv_header();
  std::string agg = "g_target,runs,g_mean,s_mean,s_std\n";
  char buf[160];
  for (double g = g_min; g <= g_max + 1e-9; g += g_step) {
    std::vector<double> ss, gs;
    for (int s = 0; s < seeds; ++s) {
      PoissonConfig cfg = base;
      cfg.offered_load = g;
      const RunResult run = run_poisson(cfg, 1 + static_cast<std::uint64_t>(s));
      if (!run.violations.empty()) return report_violations(run.violations);
      csv += aloha_csv_row(g, 1 + static_cast<std::uint64_t>(s), run);
      ss.push_back(run.utilization);
      gs.push_back(run.g_measured);
    }
    std::snprintf(buf, sizeof buf, "%.6f,%d,%.6f,%.6f,%.6f\n", g, seeds, mean_of(gs),
                  mean_of(ss), sample_std(ss));
    agg += buf;
  }
  write_text_file(out_dir + "/aloha.csv", csv);
  write_text_file(out_dir + "/aloha_aggregate.csv", agg);
  write_text_file(out_dir + "/run_meta.json",
                  run_metadata_json("aloha", "(options)", 1, 0,
                                    {{"aloha.csv", "aloha-v1"},
                                     {"aloha_aggregate.csv", "aloha-aggregate-v1"}}));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Warehouse radio network simulator: LBT channel access, low-power "
               "listening, per-node energy accounting"};
  app.require_subcommand(1);

  CommonOpts run_o, sweep_o;
  bool run_trace = false;
  std::string sweep_n = "1..38";
  int sweep_seeds = 1;
  int sweep_jobs = static_cast<int>(std::thread::hardware_concurrency());
  std::string fig5_out;
  std::string aloha_out, aloha_energy;
  double g_min = 0.1, g_max = 1.0, g_step = 0.1;
  int aloha_seeds = 3, aloha_nodes = 38;
  std::int64_t aloha_duration = 11'750'000;

  auto* run = app.add_subcommand("run", "Run one scenario");
  run->add_option("scenario", run_o.scenario_path, "Scenario file (JSON)")->required();
  run->add_option("--seed", run_o.seed, "Random seed");
  run->add_option("--out", run_o.out_dir, "Output directory")->required();
  run->add_option("--mode", run_o.mode, "Channel access: lbt|aloha")
      ->check(CLI::IsMember({"lbt", "aloha"}));
  run->add_option("--tps-policy", run_o.tps_policy, "Random back-off policy: redraw|retain")
      ->check(CLI::IsMember({"redraw", "retain"}));
  run->add_option("--energy-params", run_o.energy_params_path, "Energy parameter file");
  run->add_flag("--trace", run_trace, "Also write mac_log.csv");

  auto* sweep = app.add_subcommand("sweep", "Sweep the active-set size");
  sweep->add_option("scenario", sweep_o.scenario_path, "Scenario file (JSON)")->required();
  sweep->add_option("--n", sweep_n, "Active-set range, e.g. 1..38")->required();
  sweep->add_option("--seeds", sweep_seeds, "Seeds per sweep point")->required();
  sweep->add_option("--seed", sweep_o.seed, "First seed");
  sweep->add_option("--out", sweep_o.out_dir, "Output directory")->required();
  sweep->add_option("--jobs", sweep_jobs, "Parallel workers");
  sweep->add_option("--mode", sweep_o.mode, "Channel access: lbt|aloha")
      ->check(CLI::IsMember({"lbt", "aloha"}));
  sweep->add_option("--tps-policy", sweep_o.tps_policy, "Random back-off policy")
      ->check(CLI::IsMember({"redraw", "retain"}));
  sweep->add_option("--energy-params", sweep_o.energy_params_path, "Energy parameter file");

  auto* fig5 = app.add_subcommand("fig5", "Scripted jammer contention timeline");
  fig5->add_option("--out", fig5_out, "Output directory")->required();

  auto* aloha = app.add_subcommand("aloha", "Poisson offered-load sweep, uncontrolled access");
  aloha->add_option("--out", aloha_out, "Output directory")->required();
  aloha->add_option("--g-min", g_min, "Lowest offered load");
  aloha->add_option("--g-max", g_max, "Highest offered load");
  aloha->add_option("--g-step", g_step, "Offered-load step");
  aloha->add_option("--seeds", aloha_seeds, "Seeds per load point");
  aloha->add_option("--nodes", aloha_nodes, "Node count");
  aloha->add_option("--duration-us", aloha_duration, "Virtual time per run");
  aloha->add_option("--energy-params", aloha_energy, "Energy parameter file");

  try {
    app.parse(argc, argv);
    if (run->parsed()) return cmd_run(run_o, run_trace);
    if (sweep->parsed()) return cmd_sweep(sweep_o, sweep_n, sweep_seeds, sweep_jobs);
    if (fig5->parsed()) return cmd_fig5(fig5_out);
    if (aloha->parsed())
      return cmd_aloha(aloha_out, g_min, g_max, g_step, aloha_seeds, aloha_nodes,
                       aloha_duration, aloha_energy);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
