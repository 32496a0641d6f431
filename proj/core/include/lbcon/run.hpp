#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include "lbcon/gains.hpp"
#include "lbcon/scenario.hpp"

namespace lbcon {

enum class Command { verify, simulate, full };

std::string_view command_name(Command c);

struct RunOptions {
  std::optional<double> dt;
  std::optional<double> horizon;
  std::optional<double> hbar;
  std::optional<std::uint64_t> seed;
  // Trajectory CSV goes here; nothing is written when empty.
  std::filesystem::path out_dir;
};

struct SimulationSummary {
  double dt = 0.0;
  double horizon = 0.0;
  double hbar = 0.0;
  double disagreement_initial = 0.0;
  double disagreement_final = 0.0;
  double J_e = 0.0;  // J_e(hbar)
  bool energy_monotone = true;
  std::size_t switches = 0;
  std::filesystem::path csv;
};

struct RunReport {
  std::string scenario;
  Command command = Command::full;
  double block_residual = 0.0;
  SpectralBounds bounds;
  Theorem theorem = Theorem::two;
  double J_e_star = 0.0;
  // Certificate conditions (verify / full) followed by the closed-loop pair
  // checks; the budget verdict is appended after a simulation.
  ConditionReport conditions;
  ProtocolGains gains;
  std::optional<SimulationSummary> sim;

  bool overall() const { return conditions.overall(); }
};

// Any module error propagates; its message gains the scenario name.
RunReport run(const Scenario& s, Command command, const RunOptions& options = {});

}  // namespace lbcon
