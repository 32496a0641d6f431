#pragma once

// JSON scenario documents: system, decomposition, topologies, schedule,
// certificate, initial_states, sim and an optional seed. Matrix entries may be
// numbers or exact "p/q" strings. Topology edges use 1-based agent labels.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "lbcon/descriptor.hpp"
#include "lbcon/gains.hpp"
#include "lbcon/topology.hpp"

namespace lbcon {

struct SimSettings {
  double dt = 1e-3;
  double horizon = 5.0;
  double hbar = 5.0;
};

struct Scenario {
  std::string name;
  DescriptorSystem system;
  Matrix U_o;
  int h = 0;
  std::vector<std::string> topology_names;
  std::vector<Topology> topologies;
  ScheduleSpec schedule;  // horizon mirrors sim.horizon
  // bounds come from "lambda_bounds" when given, otherwise from the
  // topology set in the schedule's connectivity mode.
  DesignCertificate certificate;
  bool bounds_from_file = false;
  std::vector<Vector> initial_states;  // x_m(0), n each
  SimSettings sim;
  std::optional<std::uint64_t> seed;

  int agents() const { return static_cast<int>(initial_states.size()); }
  // Stacked y_m(0) = C x_m(0).
  Vector initial_outputs() const;
};

// Throws ParseError naming the offending field, e.g. "certificate.M".
Scenario parse_scenario_text(std::string_view text);
Scenario parse_scenario(const std::filesystem::path& path);

// Bundled "example1" / "example2"; InvalidInput for other names.
std::string_view canned_scenario_text(std::string_view name);
Scenario canned_scenario(std::string_view name);
std::vector<std::string_view> canned_scenario_names();

// Recomputes certificate.bounds from the topology set (no-op when the
// bounds were given explicitly).
void refresh_bounds(Scenario& s);

}  // namespace lbcon
