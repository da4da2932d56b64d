#pragma once

#include <stdexcept>
#include <string>

#include "lbtsim/app.hpp"

namespace lbtsim {

class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// Scenario files are JSON with a strict schema: unknown keys are rejected so
// a typo in a parameter study fails loudly instead of running the defaults.
struct Scenario {
  enum class Kind { Warehouse, Poisson };
  Kind kind = Kind::Warehouse;
  WarehouseConfig warehouse;
  PoissonConfig poisson;
};

Scenario parse_scenario(const std::string& text, const std::string& origin);
Scenario load_scenario_file(const std::string& path);

// Standalone energy parameter file (voltage, per-state currents,
// per-transition energies, optional automaton edges).
EnergyParams parse_energy_params(const std::string& text, const std::string& origin);
EnergyParams load_energy_params_file(const std::string& path);

constexpr int kScenarioSchemaVersion = 1;

}  // namespace lbtsim
