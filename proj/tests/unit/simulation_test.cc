#include "lbcon/simulation.hpp"

#include <random>
#include <sstream>

#include <gtest/gtest.h>
#include <unsupported/Eigen/MatrixFunctions>

#include "fixtures.hpp"
#include "lbcon/errors.hpp"
#include "lbcon/scenario.hpp"
#include "reference_data.hpp"

namespace lbcon {
namespace {

using testing::fixed_schedule;
using testing::path_graph;
using testing::rows;
using testing::scalar_decomposition;

ProtocolGains scalar_gains(double k_u, double k_z) {
  return {Matrix::Constant(1, 1, k_u), Matrix::Constant(1, 1, k_z), 1.0};
}

ClosedLoopSystem scalar_loop(const Topology& g, double k_u = -0.5, double k_z = -0.5,
                             double horizon = 2.0) {
  return assemble_closed_loop(scalar_decomposition(), scalar_gains(k_u, k_z),
                              fixed_schedule(horizon), {g});
}

struct ExampleLoop {
  Scenario scenario;
  ObservableDecomposition dec;
  ProtocolGains gains;
  Vector x0;
};

ExampleLoop example_one() {
  ExampleLoop e{canned_scenario("example1"), {}, {}, {}};
  e.dec = decompose(e.scenario.system, e.scenario.U_o, e.scenario.h);
  e.gains = compute_gains(e.dec, e.scenario.certificate);
  const int h = e.dec.h;
  e.x0.resize(e.scenario.agents() * h);
  for (int m = 0; m < e.scenario.agents(); ++m) {
    e.x0.segment(m * h, h) = e.dec.observable_state(e.scenario.initial_states[m]);
  }
  return e;
}

TEST(BackwardEulerTest, ScalarStep) {
  const auto xs = integrate_descriptor(Matrix::Ones(1, 1), -Matrix::Ones(1, 1),
                                       Vector::Ones(1), 0.1, 1);
  ASSERT_EQ(xs.size(), 2u);
  EXPECT_DOUBLE_EQ(xs[1](0), 1.0 / 1.1);
}

TEST(BackwardEulerTest, AlgebraicComponentSnaps) {
  const Matrix e = rows({{1, 0}, {0, 0}});
  const auto xs = integrate_descriptor(e, -Matrix::Identity(2, 2), Vector::Ones(2), 0.1, 3);
  EXPECT_EQ(xs[1](1), 0.0);
  EXPECT_DOUBLE_EQ(xs[1](0), 1.0 / 1.1);
  EXPECT_LT(xs[3](0), xs[2](0));
  EXPECT_EQ(xs[3](1), 0.0);
}

TEST(BackwardEulerTest, SingularStepMatrixFails) {
  // E - dt A = 0 at dt = 1.
  EXPECT_THROW(integrate_descriptor(Matrix::Ones(1, 1), Matrix::Ones(1, 1), Vector::Ones(1),
                                    1.0, 1),
               StepFailure);
}

TEST(AssembleClosedLoopTest, ZeroKzDecouples) {
  const ClosedLoopSystem cl = scalar_loop(path_graph(3), -0.5, 0.0);
  const Matrix& a = cl.A_cl(0);
  EXPECT_EQ(a.bottomLeftCorner(3, 3), Matrix::Zero(3, 3));
  EXPECT_EQ(a.topLeftCorner(3, 3), -Matrix::Identity(3, 3));
  EXPECT_EQ(a.topRightCorner(3, 3), -0.5 * Matrix::Identity(3, 3));
  EXPECT_EQ(a.bottomRightCorner(3, 3), -1.5 * Matrix::Identity(3, 3));
}

TEST(AssembleClosedLoopTest, ZeroGainsGiveOpenLoop) {
  const ExampleLoop e = example_one();
  const ProtocolGains zero{Matrix::Zero(2, 3), Matrix::Zero(3, 2), 1.0};
  SwitchingSchedule sched = fixed_schedule(1.0);
  const ClosedLoopSystem cl =
      assemble_closed_loop(e.dec, zero, sched, {e.scenario.topologies[0]});
  const int n = 5;
  for (int m = 0; m < 2 * n; ++m) {
    for (int j = 0; j < 2 * n; ++j) {
      const Matrix block = cl.A_cl(0).block(3 * m, 3 * j, 3, 3);
      EXPECT_EQ(block, m == j ? e.dec.A_o : Matrix::Zero(3, 3)) << m << "," << j;
      const Matrix eb = cl.E_cl().block(3 * m, 3 * j, 3, 3);
      EXPECT_EQ(eb, m == j ? e.dec.E_o : Matrix::Zero(3, 3));
    }
  }
}

TEST(AssembleClosedLoopTest, SingleAgent) {
  const ClosedLoopSystem cl = assemble_closed_loop(
      scalar_decomposition(1.0, -2.0, 3.0, 1.0), scalar_gains(-0.5, -0.7), fixed_schedule(1.0),
      {Topology(1, {})});
  EXPECT_EQ(cl.A_cl(0), rows({{-2, -1.5}, {0, -3.5}}));
}

TEST(AssembleClosedLoopTest, ExampleOneDimensions) {
  const ExampleLoop e = example_one();
  const SwitchingSchedule sched = build_schedule(e.scenario.schedule, e.scenario.seed);
  const ClosedLoopSystem cl =
      assemble_closed_loop(e.dec, e.gains, sched, e.scenario.topologies);
  EXPECT_EQ(cl.E_cl().rows(), 30);
  EXPECT_EQ(cl.E_cl().cols(), 30);
  for (std::size_t t = 0; t < 4; ++t) EXPECT_EQ(cl.A_cl(t).rows(), 30);
  EXPECT_THROW(cl.A_cl(4), InvalidInput);
}

TEST(AssembleClosedLoopTest, CouplingBlocks) {
  const Topology g = path_graph(3);
  const ClosedLoopSystem cl = scalar_loop(g, -0.5, -0.25);
  const Matrix l = laplacian(g).L;
  EXPECT_EQ(cl.A_cl(0).bottomLeftCorner(3, 3), 0.25 * l);
  EXPECT_EQ(cl.A_cl(0).bottomRightCorner(3, 3), -1.5 * Matrix::Identity(3, 3) - 0.25 * l);
}

TEST(AssembleClosedLoopTest, RejectsMismatches) {
  EXPECT_THROW(assemble_closed_loop(scalar_decomposition(), {Matrix::Ones(1, 2), Matrix::Ones(1, 1), 1},
                                    fixed_schedule(1.0), {path_graph(2)}),
               InvalidInput);
  EXPECT_THROW(assemble_closed_loop(scalar_decomposition(), scalar_gains(1, 1),
                                    fixed_schedule(1.0, 1), {path_graph(2)}),
               InvalidInput);
  EXPECT_THROW(assemble_closed_loop(scalar_decomposition(), scalar_gains(1, 1),
                                    fixed_schedule(1.0), {path_graph(2), path_graph(3)}),
               InvalidInput);
}

TEST(IntegrateTest, RejectsBadArguments) {
  const ClosedLoopSystem cl = scalar_loop(path_graph(2));
  const Vector x0 = Vector::Ones(2);
  EXPECT_THROW(integrate(cl, x0, 0.2, 1.0), InvalidInput);
  EXPECT_THROW(integrate(cl, x0, 0.01, 3.0), InvalidInput);
  EXPECT_THROW(integrate(cl, x0, -0.01, 1.0), InvalidInput);
  EXPECT_THROW(integrate(cl, Vector::Ones(3), 0.01, 1.0), InvalidInput);
}

TEST(IntegrateTest, SamplesAndOutputs) {
  const ClosedLoopSystem cl = scalar_loop(path_graph(3));
  const Trajectory t = integrate(cl, Vector::LinSpaced(3, -1.0, 2.0), 0.01, 1.005);
  ASSERT_EQ(t.size(), 102u);
  EXPECT_EQ(t.times.front(), 0.0);
  EXPECT_NEAR(t.times.back(), 1.005, 1e-15);
  for (std::size_t k = 1; k < t.size(); ++k) EXPECT_GT(t.times[k], t.times[k - 1]);
  for (std::size_t k = 0; k < t.size(); ++k) {
    EXPECT_LE((t.outputs[k] - t.x_o(k)).cwiseAbs().maxCoeff(), 1e-12);
  }
  EXPECT_EQ(t.z_o(0), Vector::Zero(3));
}

TEST(IntegrateTest, SwitchesAtScheduleBoundaries) {
  // Topology 1 is edgeless, so coupling only acts during [0, 0.5).
  const SwitchingSchedule sched({{0.0, 0}, {0.5, 1}}, 0.5, 1.0,
                                TopologyMode::switching_connected);
  const ClosedLoopSystem cl = assemble_closed_loop(
      scalar_decomposition(), scalar_gains(-0.5, -0.5), sched, {path_graph(2), Topology(2, {})});
  const Vector x0 = (Vector(2) << 1.0, -1.0).finished();
  const Trajectory t = integrate(cl, x0, 0.05, 1.0);
  // Reference: fixed topologies stepped by hand.
  const auto first = integrate_descriptor(cl.E_cl(), cl.A_cl(0),
                                          (Vector(4) << x0, Vector::Zero(2)).finished(), 0.05, 10);
  const auto second = integrate_descriptor(cl.E_cl(), cl.A_cl(1), first.back(), 0.05, 10);
  EXPECT_LE((t.states[10] - first.back()).cwiseAbs().maxCoeff(), 1e-14);
  EXPECT_LE((t.states[20] - second.back()).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(IntegrateTest, FirstOrderConvergence) {
  // E_cl = I here, so the exact solution is a matrix exponential.
  const ClosedLoopSystem cl = scalar_loop(path_graph(3), -0.5, -0.5, 1.0);
  const Vector x0 = (Vector(3) << 1.0, -2.0, 0.5).finished();
  const Vector s0 = (Vector(6) << x0, Vector::Zero(3)).finished();
  const Vector exact = (cl.A_cl(0) * 1.0).exp() * s0;
  const double dt = 0.01;
  const double e1 = (integrate(cl, x0, dt, 1.0).states.back() - exact).norm();
  const double e2 = (integrate(cl, x0, dt / 2, 1.0).states.back() - exact).norm();
  EXPECT_GE(e1 / e2, 1.7);
  EXPECT_LE(e1 / e2, 2.3);
}

TEST(IntegrateTest, ConvergenceAgainstFineReference) {
  // Against a dt/8 numerical reference the error ratio tends to
  // (1 - 1/8) / (1/2 - 1/8) = 7/3 rather than 2.
  const ClosedLoopSystem cl = scalar_loop(path_graph(3), -0.5, -0.5, 1.0);
  const Vector x0 = (Vector(3) << 1.0, -2.0, 0.5).finished();
  const double dt = 0.01;
  const Vector ref = integrate(cl, x0, dt / 8, 1.0).states.back();
  const double e1 = (integrate(cl, x0, dt, 1.0).states.back() - ref).norm();
  const double e2 = (integrate(cl, x0, dt / 2, 1.0).states.back() - ref).norm();
  EXPECT_NEAR(e1 / e2, 7.0 / 3.0, 0.05);
}

TEST(IntegrateTest, IdenticalAgentsStayInConsensus) {
  ExampleLoop e = example_one();
  for (int m = 1; m < 5; ++m) e.x0.segment(3 * m, 3) = e.x0.head(3);
  const SwitchingSchedule sched = build_schedule(e.scenario.schedule, e.scenario.seed);
  const ClosedLoopSystem cl =
      assemble_closed_loop(e.dec, e.gains, sched, e.scenario.topologies);
  const Trajectory t = integrate(cl, e.x0, 1e-3, 1.0);
  for (double d : t.disagreement) EXPECT_LE(d, 1e-10);
  const EnergyAccount acc = energy(t, e.gains, e.scenario.certificate.M, 1.0);
  EXPECT_LE(acc.final_value, 1e-10);
}

TEST(EnergyTest, ZeroGainGivesZero) {
  const ClosedLoopSystem cl = scalar_loop(path_graph(3), 0.0, -0.5);
  const Trajectory t = integrate(cl, Vector::LinSpaced(3, -1, 1), 0.01, 1.0);
  const EnergyAccount acc = energy(t, cl.gains(), Matrix::Ones(1, 1), 1.0);
  for (double j : acc.J_e) EXPECT_EQ(j, 0.0);
}

TEST(EnergyTest, ScalarTrapezoid) {
  Trajectory t;
  t.agents = 1;
  t.h = 1;
  t.l = 1;
  t.times = {0.0, 1.0, 2.0};
  t.states = {(Vector(2) << 0, 0).finished(), (Vector(2) << 0, 1).finished(),
              (Vector(2) << 0, 2).finished()};
  // u = 2 z, integrand 4 z^2 * 3 = 0, 12, 48.
  const ProtocolGains g = scalar_gains(2.0, 0.0);
  const Matrix m = Matrix::Constant(1, 1, 3.0);
  const EnergyAccount full = energy(t, g, m, 2.0);
  ASSERT_EQ(full.J_e.size(), 3u);
  EXPECT_EQ(full.J_e[0], 0.0);
  EXPECT_NEAR(full.J_e[1], 6.0, 1e-13);
  EXPECT_NEAR(full.J_e[2], 36.0, 1e-13);
  EXPECT_EQ(full.final_value, full.J_e[2]);
  // Stops at hbar, interpolating the integrand to 30 at t = 1.5.
  const EnergyAccount part = energy(t, g, m, 1.5);
  EXPECT_EQ(part.times, (std::vector<double>{0.0, 1.0, 1.5}));
  EXPECT_NEAR(part.final_value, 6.0 + 0.5 * 0.5 * (12.0 + 30.0), 1e-13);
  EXPECT_THROW(energy(t, scalar_gains(2.0, 0.0), Matrix::Ones(1, 1), 2.5), InvalidInput);
  EXPECT_THROW(energy(t, scalar_gains(2.0, 0.0), -Matrix::Ones(1, 1), 1.0), InvalidCertificate);
}

TEST(EnergyTest, MonotoneOnRandomStableScenarios) {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 20; ++trial) {
    const Matrix a = testing::random_matrix(2, 2, rng) - 3.0 * Matrix::Identity(2, 2);
    const Matrix b = testing::random_matrix(2, 1, rng);
    const Matrix c = testing::random_matrix(1, 2, rng);
    const ObservableDecomposition dec =
        testing::trivial_decomposition(Matrix::Identity(2, 2), a, b, c);
    const ProtocolGains g{0.3 * testing::random_matrix(1, 2, rng),
                          0.3 * testing::random_matrix(2, 1, rng), 1.0};
    const Topology topo = testing::random_graph(4, 0.6, rng);
    const ClosedLoopSystem cl = assemble_closed_loop(dec, g, fixed_schedule(1.0), {topo});
    const Trajectory t = integrate(cl, testing::random_matrix(8, 1, rng), 0.01, 1.0);
    const Matrix m = Matrix::Constant(1, 1, 0.5 + trial);
    const EnergyAccount acc = energy(t, g, m, 1.0);
    EXPECT_EQ(acc.J_e.front(), 0.0);
    for (std::size_t k = 1; k < acc.J_e.size(); ++k) {
      EXPECT_GE(acc.J_e[k], acc.J_e[k - 1]) << "trial " << trial << " sample " << k;
    }
  }
}

Trajectory output_only(int agents, int l, std::vector<Vector> outputs) {
  Trajectory t;
  t.agents = agents;
  t.l = l;
  t.outputs = std::move(outputs);
  for (std::size_t k = 0; k < t.outputs.size(); ++k) t.times.push_back(static_cast<double>(k));
  return t;
}

TEST(ConsensusMetricsTest, Examples) {
  const ConsensusMetrics a =
      consensus_metrics(output_only(2, 1, {(Vector(2) << 1.0, -1.0).finished()}));
  EXPECT_EQ(a.c_o[0](0), 0.0);
  EXPECT_EQ(a.disagreement[0], 1.0);
  const ConsensusMetrics b =
      consensus_metrics(output_only(3, 2, {(Vector(6) << 2, 5, 2, 5, 2, 5).finished()}));
  EXPECT_EQ(b.c_o[0], (Vector(2) << 2, 5).finished());
  EXPECT_EQ(b.disagreement[0], 0.0);
}

TEST(OracleTest, MatchesDirectIntegration) {
  const ClosedLoopSystem cl = scalar_loop(path_graph(3), -0.5, -0.5, 2.0);
  const Vector x0 = (Vector(3) << 1.0, -2.0, 0.5).finished();
  const Trajectory direct = integrate(cl, x0, 1e-3, 2.0);
  const OracleTrajectory oracle = transform_oracle(cl, x0, 0, 1e-3, 2.0);
  ASSERT_EQ(oracle.times.size(), direct.size());
  double worst = 0.0;
  for (std::size_t k = 0; k < direct.size(); ++k) {
    worst = std::max(worst, (oracle.original_state(k) - direct.states[k]).cwiseAbs().maxCoeff());
  }
  EXPECT_LE(worst, 1e-8);
}

TEST(OracleTest, InitialConditions) {
  const ClosedLoopSystem cl = scalar_loop(path_graph(3));
  const Vector x0 = (Vector(3) << 1.0, -2.0, 0.5).finished();
  const Vector s0 = (Vector(6) << x0, Vector::Zero(3)).finished();
  const OracleInitial init = oracle_initial(cl, s0, 0);
  EXPECT_LE(init.zhat.cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_NEAR(init.x1(0), x0.sum() / std::sqrt(3.0), 1e-12);
  const OracleTrajectory o = transform_oracle(cl, x0, 0, 1e-2, 1.0);
  EXPECT_NEAR(std::abs(o.U_kappa(0, 0)), 1.0 / std::sqrt(3.0), 1e-15);
  const Vector x_tilde_delta = o.U_kappa.rightCols(2).transpose() * x0;
  EXPECT_LE((o.xhat[0] + x_tilde_delta).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LE(o.zhat[0].cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_LE((init.xhat + x_tilde_delta).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(OracleTest, IdenticalAgentsKeepDisagreementStateAtZero) {
  const ClosedLoopSystem cl = scalar_loop(path_graph(3));
  const OracleTrajectory o = transform_oracle(cl, Vector::Constant(3, 0.7), 0, 1e-2, 2.0);
  for (const Vector& x : o.xhat) EXPECT_LE(x.cwiseAbs().maxCoeff(), 1e-14);
}

TEST(OracleTest, DisagreementStateIgnoresProtocolPerturbation) {
  const ClosedLoopSystem cl = scalar_loop(path_graph(4), -0.5, -0.5, 2.0);
  const Vector x0 = (Vector(4) << 1.0, -2.0, 0.5, 3.0).finished();
  const Vector s0 = (Vector(8) << x0, Vector::Zero(4)).finished();
  const OracleInitial init = oracle_initial(cl, s0, 0);
  OracleInitial perturbed = init;
  perturbed.zhat = Vector::LinSpaced(3, 1.0, 3.0);
  const OracleTrajectory a = integrate_oracle(cl, 0, init, 1e-2, 2.0);
  const OracleTrajectory b = integrate_oracle(cl, 0, perturbed, 1e-2, 2.0);
  bool zhat_differs = false;
  for (std::size_t k = 0; k < a.times.size(); ++k) {
    EXPECT_LE((a.xhat[k] - b.xhat[k]).cwiseAbs().maxCoeff(), 1e-10);
    zhat_differs |= (a.zhat[k] - b.zhat[k]).norm() > 1e-3;
  }
  EXPECT_TRUE(zhat_differs);
}

TEST(OracleTest, ConsensusCandidateMatchesAverage) {
  const ClosedLoopSystem cl = scalar_loop(path_graph(3), -0.5, -0.5, 2.0);
  const Vector x0 = (Vector(3) << 1.0, -2.0, 0.5).finished();
  const Trajectory direct = integrate(cl, x0, 1e-3, 2.0);
  const OracleTrajectory o = transform_oracle(cl, x0, 0, 1e-3, 2.0);
  for (std::size_t k = 0; k < direct.size(); k += 100) {
    EXPECT_NEAR(direct.consensus_candidate[k](0), o.x1[k](0) / std::sqrt(3.0), 1e-9);
  }
}

TEST(OracleTest, DisconnectedTopologyIsUndefined) {
  const ClosedLoopSystem cl = scalar_loop(Topology(3, {{0, 1}}));
  EXPECT_THROW(transform_oracle(cl, Vector::Ones(3), 0, 1e-2, 1.0), AnalysisUndefined);
}

TEST(TrajectoryCsvTest, Header) {
  const ClosedLoopSystem cl = scalar_loop(path_graph(2));
  const Trajectory t = integrate(cl, (Vector(2) << 1.0, 0.0).finished(), 0.1, 1.0);
  const EnergyAccount acc = energy(t, cl.gains(), Matrix::Ones(1, 1), 1.0);
  std::ostringstream os;
  write_trajectory_csv(os, t, acc);
  std::istringstream is(os.str());
  std::string line;
  std::getline(is, line);
  EXPECT_EQ(line, "t,y_1_1,y_2_1,c_o_1,disagreement,J_e");
  std::getline(is, line);
  EXPECT_EQ(line, "0,1,0,0.5,0.5,0");
  int rows_seen = 1;
  while (std::getline(is, line)) ++rows_seen;
  EXPECT_EQ(rows_seen, 11);
}

}  // namespace
}  // namespace lbcon
