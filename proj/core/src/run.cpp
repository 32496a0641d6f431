#include "lbcon/run.hpp"

#include <fstream>
#include <sstream>
#include <utility>

#include "lbcon/decomposition.hpp"
#include "lbcon/errors.hpp"
#include "lbcon/report.hpp"
#include "lbcon/simulation.hpp"

namespace lbcon {

namespace {

template <typename Fn>
auto with_context(const std::string& scenario, Fn&& fn) -> decltype(fn()) {
  const std::string ctx = "scenario '" + scenario + "': ";
  try {
    return fn();
  } catch (const ParseError& e) {
    throw ParseError(e.field(), ctx + e.what());
  } catch (const InvalidInput& e) {
    throw InvalidInput(ctx + e.what());
  } catch (const DecompositionInvalid& e) {
    throw DecompositionInvalid(ctx + e.what(), e.residual());
  } catch (const InvalidCertificate& e) {
    throw InvalidCertificate(ctx + e.what());
  } catch (const ModeViolation& e) {
    throw ModeViolation(ctx + e.what());
  } catch (const AnalysisUndefined& e) {
    throw AnalysisUndefined(ctx + e.what());
  } catch (const StepFailure& e) {
    throw StepFailure(ctx + e.what());
  }
}

ConditionResult pair_condition(std::string id, const PairReport& p) {
  const double margin = static_cast<double>(p.pencil_rank - p.pencil_rank_target);
  return {std::move(id), p.regular && p.impulse_free, margin,
          "regular and impulse-free"};
}

RunReport run_impl(const Scenario& s, Command command, const RunOptions& opt) {
  RunReport report;
  report.scenario = s.name;
  report.command = command;
  report.theorem = s.certificate.theorem;
  report.J_e_star = s.certificate.J_e_star;
  report.bounds = s.certificate.bounds;

  const ObservableDecomposition dec = decompose(s.system, s.U_o, s.h);
  report.block_residual = dec.block_residual;
  report.gains = compute_gains(dec, s.certificate);

  if (command != Command::simulate) {
    report.conditions =
        verify_certificate(dec, s.certificate, s.initial_outputs());
    const double lambdas[] = {s.certificate.bounds.lambda_min,
                              s.certificate.bounds.lambda_max};
    const auto pairs = closed_loop_pair_checks(dec, report.gains, lambdas);
    report.conditions.conditions.push_back(pair_condition("pair.A_o", pairs[0]));
    report.conditions.conditions.push_back(pair_condition("pair.A_o+B_oK_u", pairs[1]));
    report.conditions.conditions.push_back(pair_condition("pair.lambda_min", pairs[2]));
    report.conditions.conditions.push_back(pair_condition("pair.lambda_max", pairs[3]));
  }
  if (command == Command::verify) return report;

  SimulationSummary sim;
  sim.dt = opt.dt.value_or(s.sim.dt);
  sim.horizon = opt.horizon.value_or(s.sim.horizon);
  sim.hbar = opt.hbar.value_or(std::min(s.sim.hbar, sim.horizon));
  if (sim.hbar > sim.horizon) throw InvalidInput("--hbar exceeds the horizon");

  ScheduleSpec spec = s.schedule;
  spec.horizon = sim.horizon;
  const SwitchingSchedule schedule =
      build_schedule(spec, opt.seed ? opt.seed : s.seed);
  sim.switches = schedule.entries().size() - 1;
  const ClosedLoopSystem cl =
      assemble_closed_loop(dec, report.gains, schedule, s.topologies);

  Vector x0(static_cast<Eigen::Index>(s.agents()) * dec.h);
  for (int m = 0; m < s.agents(); ++m) {
    x0.segment(static_cast<Eigen::Index>(m) * dec.h, dec.h) =
        dec.observable_state(s.initial_states[static_cast<std::size_t>(m)]);
  }
  const Trajectory traj = integrate(cl, x0, sim.dt, sim.horizon);
  const EnergyAccount account = energy(traj, report.gains, s.certificate.M, sim.hbar);
  sim.disagreement_initial = traj.disagreement.front();
  sim.disagreement_final = traj.disagreement.back();
  sim.J_e = account.final_value;
  for (std::size_t k = 1; k < account.J_e.size(); ++k) {
    if (account.J_e[k] < account.J_e[k - 1]) sim.energy_monotone = false;
  }

  if (!opt.out_dir.empty()) {
    const EnergyAccount full =
        sim.hbar == sim.horizon ? account
                                : energy(traj, report.gains, s.certificate.M, sim.horizon);
    std::ostringstream csv;
    write_trajectory_csv(csv, traj, full);
    std::error_code ec;
    std::filesystem::create_directories(opt.out_dir, ec);
    if (ec) throw IoError("cannot create " + opt.out_dir.string() + ": " + ec.message());
    sim.csv = opt.out_dir / "trajectory.csv";
    write_file_atomic(sim.csv, csv.str());
  }

  report.conditions.conditions.push_back(
      {"budget", sim.J_e <= s.certificate.J_e_star, s.certificate.J_e_star - sim.J_e,
       "J_e(hbar) <= J_e*"});
  report.sim = std::move(sim);
  return report;
}

}  // namespace

std::string_view command_name(Command c) {
  switch (c) {
    case Command::verify:
      return "verify";
    case Command::simulate:
      return "simulate";
    case Command::full:
      return "full";
  }
  return "?";
}

RunReport run(const Scenario& s, Command command, const RunOptions& options) {
  return with_context(s.name, [&] { return run_impl(s, command, options); });
}

}  // namespace lbcon
