#pragma once

#include <string>
#include <vector>

#include "lbtsim/app.hpp"
#include "lbtsim/energy.hpp"

namespace lbtsim {

// Post-run audit. Appends one line per finding to sink:
//  - online energy ledger vs trace-replay recomputation, exact integer match
//  - every LBT transmission preceded by an idle window of at least its
//    counted back-off (t_F, or t_F + t_PS after a deferral)
//  - application counter invariants (conservation, reply discipline, T range)
void verify_run(const RunResult& run, const EnergyDfaModel& dfa,
                std::vector<std::string>& sink);

// Exposed separately for targeted tests.
std::vector<std::string> verify_energy_replay(const RunResult& run, const EnergyDfaModel& dfa);
std::vector<std::string> verify_lbt_backoff(const RunResult& run);
std::vector<std::string> verify_app_counters(const RunStats& stats);

}  // namespace lbtsim
