#pragma once

#include <optional>
#include <string>
#include <vector>

#include "lbtsim/app.hpp"

namespace lbtsim {

constexpr int kResultsSchemaVersion = 1;

struct EnergySummary {
  int samples = 0;
  double mean_mj = 0, std_mj = 0, min_mj = 0, max_mj = 0;
};
EnergySummary summarize_energy_pj(const std::vector<std::int64_t>& pj);

struct ResultRow {
  int n_active = 0;
  std::uint64_t seed = 0;
  std::optional<double> throughput;
  std::int64_t n_rx = 0;
  std::int64_t sum_n_tx = 0;
  EnergySummary energy;
};
ResultRow make_result_row(const RunResult& run, int n_active, std::uint64_t seed);

std::string results_csv(const std::vector<ResultRow>& rows);

struct AggregateRow {
  int n_active = 0;
  int runs = 0;
  double t_mean = 0, t_std = 0;
  double e_mean_mj = 0, e_std_mj = 0, e_min_mj = 0, e_max_mj = 0;
  double nrx_mean = 0, ntx_mean = 0;
};
// Energy statistics pool all (active node, seed) samples per sweep point.
std::vector<AggregateRow> aggregate_by_n(
    const std::vector<ResultRow>& rows,
    const std::vector<std::vector<std::int64_t>>& energy_samples_by_row);
std::string aggregate_csv(const std::vector<AggregateRow>& rows);

std::string nodes_csv(const RunStats& stats, std::uint64_t seed);
std::string mac_log_csv(const MacEventLog& log);
std::string aloha_csv_header();
std::string aloha_csv_row(double g_target, std::uint64_t seed, const RunResult& run);

// run-metadata JSON (schema versions, config echo, trace hash).
std::string run_metadata_json(const std::string& command, const std::string& scenario_origin,
                              std::uint64_t seed, std::uint64_t trace_hash,
                              const std::vector<std::pair<std::string, std::string>>& extra);

// Basic sample statistics used by the CLI and the acceptance suite.
double mean_of(const std::vector<double>& xs);
double sample_std(const std::vector<double>& xs);
// Spearman rank correlation (average ranks on ties).
double spearman_rho(const std::vector<double>& xs, const std::vector<double>& ys);

void write_text_file(const std::string& path, const std::string& content);

}  // namespace lbtsim
