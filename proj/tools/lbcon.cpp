// lbcon: verify limited-budget output-consensus certificates and simulate the
// closed loop for a scenario file.
//
//   lbcon verify <file>     certificate conditions and pair checks
//   lbcon simulate <file>   gains, closed-loop integration, energy
//   lbcon full <file>       both
//   lbcon reproduce example1|example2
//
// Exit status: 0 pass, 1 verdict fail, 2 input error, 3 numerical failure.

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "lbcon/errors.hpp"
#include "lbcon/report.hpp"
#include "lbcon/run.hpp"
#include "lbcon/scenario.hpp"

namespace {

constexpr int kPass = 0;
constexpr int kVerdictFail = 1;
constexpr int kInputError = 2;
constexpr int kNumericalFailure = 3;

struct Flags {
  std::optional<double> dt;
  std::optional<double> horizon;
  std::optional<double> hbar;
  std::optional<std::uint64_t> seed;
  std::string out = "lbcon-out";
};

void add_flags(CLI::App* cmd, Flags& f) {
  cmd->add_option("--dt", f.dt, "Integration step [s]")->check(CLI::PositiveNumber);
  cmd->add_option("--horizon", f.horizon, "Simulation horizon [s]")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--hbar", f.hbar, "Energy metering horizon [s]")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--seed", f.seed, "Seed for random switching");
  cmd->add_option("--out", f.out, "Output directory")->capture_default_str();
}

int execute(const lbcon::Scenario& scenario, lbcon::Command command,
            const Flags& f) {
  lbcon::RunOptions opt;
  opt.dt = f.dt;
  opt.horizon = f.horizon;
  opt.hbar = f.hbar;
  opt.seed = f.seed;
  opt.out_dir = f.out;
  const lbcon::RunReport report = lbcon::run(scenario, command, opt);
  lbcon::write_reports(report, f.out);
  std::cout << lbcon::format_text(report);
  std::cout << "report  " << (std::filesystem::path(f.out) / "report.txt").string()
            << "\n";
  return report.overall() ? kPass : kVerdictFail;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Limited-budget output consensus for descriptor multi-agent systems"};
  app.require_subcommand(1);

  Flags flags;
  std::string file;
  std::string example;

  auto* verify = app.add_subcommand("verify", "Check certificate conditions");
  auto* simulate = app.add_subcommand("simulate", "Integrate the closed loop");
  auto* full = app.add_subcommand("full", "Verify and simulate");
  for (auto* cmd : {verify, simulate, full}) {
    cmd->add_option("file", file, "Scenario file (JSON)")->required();
    add_flags(cmd, flags);
  }
  auto* reproduce = app.add_subcommand("reproduce", "Run a bundled example end to end");
  reproduce->add_option("example", example, "example1 or example2")
      ->required()
      ->check(CLI::IsMember({"example1", "example2"}));
  add_flags(reproduce, flags);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kPass : kInputError;
  }

  try {
    if (reproduce->parsed()) {
      return execute(lbcon::canned_scenario(example), lbcon::Command::full, flags);
    }
    const lbcon::Scenario scenario = lbcon::parse_scenario(file);
    const lbcon::Command command = verify->parsed()     ? lbcon::Command::verify
                                   : simulate->parsed() ? lbcon::Command::simulate
                                                        : lbcon::Command::full;
    return execute(scenario, command, flags);
  } catch (const lbcon::StepFailure& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kNumericalFailure;
  } catch (const lbcon::AnalysisUndefined& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kNumericalFailure;
  } catch (const lbcon::ParseError& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return kInputError;
  } catch (const std::exception& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return kInputError;
  }
}
