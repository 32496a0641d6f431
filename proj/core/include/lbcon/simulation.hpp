#pragma once

// Stacked closed loop of N agents with protocol states,
//   E_cl s' = A_cl(kappa) s,   s = [x_o; z_o],
// integrated by backward Euler under topology switching, plus the energy
// meter, the output-consensus metrics and a fixed-topology oracle in the
// consensus / disagreement coordinates.

#include <cstddef>
#include <iosfwd>
#include <vector>

#include "lbcon/decomposition.hpp"
#include "lbcon/gains.hpp"
#include "lbcon/topology.hpp"

namespace lbcon {

class ClosedLoopSystem {
 public:
  const Matrix& E_cl() const { return e_cl_; }
  const Matrix& A_cl(std::size_t topology) const;
  const ObservableDecomposition& decomposition() const { return dec_; }
  const ProtocolGains& gains() const { return gains_; }
  const SwitchingSchedule& schedule() const { return schedule_; }
  const std::vector<Topology>& topologies() const { return topologies_; }
  int agents() const { return agents_; }
  int h() const { return dec_.h; }
  int l() const { return static_cast<int>(dec_.C_o.rows()); }

 private:
  friend ClosedLoopSystem assemble_closed_loop(const ObservableDecomposition&,
                                               const ProtocolGains&,
                                               const SwitchingSchedule&,
                                               std::vector<Topology>);
  ClosedLoopSystem(ObservableDecomposition dec, ProtocolGains gains,
                   SwitchingSchedule schedule, std::vector<Topology> topologies);

  ObservableDecomposition dec_;
  ProtocolGains gains_;
  SwitchingSchedule schedule_;
  std::vector<Topology> topologies_;
  int agents_ = 0;
  Matrix e_cl_;
  std::vector<Matrix> a_cl_;
};

// A_cl = [ I (x) A_o          I (x) B_o K_u                     ]
//        [ -L (x) K_z C_o     I (x) (A_o + B_o K_u) + L (x) K_z C_o ]
ClosedLoopSystem assemble_closed_loop(const ObservableDecomposition& dec,
                                      const ProtocolGains& gains,
                                      const SwitchingSchedule& schedule,
                                      std::vector<Topology> topologies);

struct Trajectory {
  int agents = 0;
  int h = 0;
  int l = 0;
  std::vector<double> times;
  std::vector<Vector> states;   // [x_o; z_o], 2 N h
  std::vector<Vector> outputs;  // stacked y_m, N l
  std::vector<Vector> consensus_candidate;  // c_o, l
  std::vector<double> disagreement;

  std::size_t size() const { return times.size(); }
  Vector x_o(std::size_t k) const { return states[k].head(agents * h); }
  Vector z_o(std::size_t k) const { return states[k].tail(agents * h); }
};

// x0 stacks the N observable initial states (z_o(0) = 0), or the full
// [x_o(0); z_o(0)]. Requires dt <= dwell / 10. Switch times are snapped to
// the dt grid; each step uses the topology active on its interval. The last
// step is shortened if dt does not divide the horizon.
Trajectory integrate(const ClosedLoopSystem& cl, const Vector& x0, double dt,
                     double horizon);

// Backward Euler for E x' = A x with a fixed step; returns steps + 1 states.
std::vector<Vector> integrate_descriptor(const Matrix& e, const Matrix& a,
                                         const Vector& x0, double dt, int steps);

struct EnergyAccount {
  std::vector<double> times;
  std::vector<double> J_e;  // trapezoidal integral of u^T M u, nondecreasing
  double hbar = 0.0;
  double final_value = 0.0;  // J_e(hbar)
};

EnergyAccount energy(const Trajectory& traj, const ProtocolGains& gains,
                     const Matrix& m, double hbar);

struct ConsensusMetrics {
  std::vector<Vector> c_o;
  std::vector<double> disagreement;  // max_m ||y_m - c_o||_inf
};

ConsensusMetrics consensus_metrics(const Trajectory& traj);

// Coordinates x~ = (U_k^T (x) I) x with U_k = [1/sqrt(N), U~] orthonormal
// Laplacian eigenvectors, then z^ = z~_D, x^ = z~_D - x~_D.
struct OracleInitial {
  Vector z1, x1;      // consensus subsystem
  Vector zhat, xhat;  // disagreement subsystem, (N-1) h each
};

struct OracleTrajectory {
  int agents = 0;
  int h = 0;
  Matrix U_kappa;
  Matrix Delta;  // diagonal, nonzero Laplacian eigenvalues
  std::vector<double> times;
  std::vector<Vector> z1, x1, zhat, xhat;

  // Maps sample k back to the stacked [x_o; z_o] of the direct integration.
  Vector original_state(std::size_t k) const;
};

// Throws AnalysisUndefined for a disconnected topology.
OracleInitial oracle_initial(const ClosedLoopSystem& cl, const Vector& s0,
                             std::size_t topology);
OracleTrajectory integrate_oracle(const ClosedLoopSystem& cl,
                                  std::size_t topology,
                                  const OracleInitial& init, double dt,
                                  double horizon);
OracleTrajectory transform_oracle(const ClosedLoopSystem& cl, const Vector& x0,
                                  std::size_t topology, double dt,
                                  double horizon);

// Header: t,y_1_1,...,y_N_l,c_o_1,...,c_o_l,disagreement,J_e.
// Shortest round-trip decimal formatting; J_e is left empty after hbar.
void write_trajectory_csv(std::ostream& os, const Trajectory& traj,
                          const EnergyAccount& account);

}  // namespace lbcon
