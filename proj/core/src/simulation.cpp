#include "lbcon/simulation.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <map>
#include <ostream>
#include <string>
#include <utility>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/LU>

#include "lbcon/errors.hpp"

namespace lbcon {

namespace {

Eigen::FullPivLU<Matrix> step_factor(const Matrix& e, const Matrix& a, double dt) {
  Eigen::FullPivLU<Matrix> lu(e - dt * a);
  if (!lu.isInvertible()) {
    throw StepFailure("backward Euler: (E - dt A) is singular at dt = " +
                      std::to_string(dt) + "; try a slightly different --dt");
  }
  return lu;
}

void append_double(std::string& out, double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  out.append(buf, res.ptr);
}

Matrix identity_kron(int n, const Matrix& m) {
  return kron(Matrix::Identity(n, n), m);
}

}  // namespace

ClosedLoopSystem::ClosedLoopSystem(ObservableDecomposition dec,
                                   ProtocolGains gains,
                                   SwitchingSchedule schedule,
                                   std::vector<Topology> topologies)
    : dec_(std::move(dec)),
      gains_(std::move(gains)),
      schedule_(std::move(schedule)),
      topologies_(std::move(topologies)) {}

const Matrix& ClosedLoopSystem::A_cl(std::size_t topology) const {
  if (topology >= a_cl_.size()) {
    throw InvalidInput("A_cl: topology index " + std::to_string(topology) +
                       " out of range");
  }
  return a_cl_[topology];
}

ClosedLoopSystem assemble_closed_loop(const ObservableDecomposition& dec,
                                      const ProtocolGains& gains,
                                      const SwitchingSchedule& schedule,
                                      std::vector<Topology> topologies) {
  const int h = dec.h;
  const auto k = dec.B_o.cols();
  const auto l = dec.C_o.rows();
  if (gains.K_u.rows() != k || gains.K_u.cols() != h) {
    throw InvalidInput("assemble_closed_loop: K_u must be k x h");
  }
  if (gains.K_z.rows() != h || gains.K_z.cols() != l) {
    throw InvalidInput("assemble_closed_loop: K_z must be h x l");
  }
  if (topologies.empty()) {
    throw InvalidInput("assemble_closed_loop: no topologies");
  }
  const int n_agents = topologies.front().agent_count();
  for (const Topology& t : topologies) {
    if (t.agent_count() != n_agents) {
      throw InvalidInput("assemble_closed_loop: topologies disagree on N");
    }
  }
  for (const ScheduleEntry& e : schedule.entries()) {
    if (e.topology >= topologies.size()) {
      throw InvalidInput("assemble_closed_loop: schedule names topology " +
                         std::to_string(e.topology) + " which is not defined");
    }
  }

  ClosedLoopSystem cl(dec, gains, schedule, std::move(topologies));
  cl.agents_ = n_agents;
  const int nh = n_agents * h;
  cl.e_cl_ = identity_kron(2 * n_agents, dec.E_o);

  const Matrix bk = dec.B_o * gains.K_u;
  const Matrix kzc = gains.K_z * dec.C_o;
  Matrix base = Matrix::Zero(2 * nh, 2 * nh);
  base.topLeftCorner(nh, nh) = identity_kron(n_agents, dec.A_o);
  base.topRightCorner(nh, nh) = identity_kron(n_agents, bk);
  base.bottomRightCorner(nh, nh) = identity_kron(n_agents, dec.A_o + bk);
  for (const Topology& t : cl.topologies_) {
    const Matrix coupling = kron(t.laplacian_matrix(), kzc);
    Matrix a = base;
    a.bottomLeftCorner(nh, nh) = -coupling;
    a.bottomRightCorner(nh, nh) += coupling;
    cl.a_cl_.push_back(std::move(a));
  }
  return cl;
}

Trajectory integrate(const ClosedLoopSystem& cl, const Vector& x0, double dt,
                     double horizon) {
  const int nh = cl.agents() * cl.h();
  if (!(dt > 0.0) || !std::isfinite(dt)) {
    throw InvalidInput("integrate: dt must be positive");
  }
  if (!(horizon > 0.0) || !std::isfinite(horizon)) {
    throw InvalidInput("integrate: horizon must be positive");
  }
  if (horizon > cl.schedule().horizon() * (1.0 + 1e-12)) {
    throw InvalidInput("integrate: horizon exceeds the schedule horizon");
  }
  if (dt > cl.schedule().dwell() / 10.0 * (1.0 + 1e-12)) {
    throw InvalidInput("integrate: dt must not exceed dwell / 10");
  }
  Vector s(2 * nh);
  if (x0.size() == nh) {
    s << x0, Vector::Zero(nh);
  } else if (x0.size() == 2 * nh) {
    s = x0;
  } else {
    throw InvalidInput("integrate: x0 must have N h = " + std::to_string(nh) +
                       " entries, got " + std::to_string(x0.size()));
  }
  require_finite(s, "integrate(x0)");

  // Grid index at which each schedule entry takes over.
  const auto& entries = cl.schedule().entries();
  std::vector<long long> switch_step;
  for (const ScheduleEntry& e : entries) switch_step.push_back(std::llround(e.start / dt));

  const double ratio = horizon / dt;
  long long steps = std::llround(ratio);
  double last_dt = dt;
  if (std::abs(ratio - static_cast<double>(steps)) > 1e-9 * std::max(1.0, ratio)) {
    steps = static_cast<long long>(std::ceil(ratio));
    last_dt = horizon - static_cast<double>(steps - 1) * dt;
  }

  Trajectory traj;
  traj.agents = cl.agents();
  traj.h = cl.h();
  traj.l = cl.l();
  traj.times.reserve(static_cast<std::size_t>(steps + 1));
  traj.states.reserve(static_cast<std::size_t>(steps + 1));
  traj.times.push_back(0.0);
  traj.states.push_back(s);

  const Matrix& e = cl.E_cl();
  std::map<std::size_t, Eigen::FullPivLU<Matrix>> factors;
  std::size_t entry = 0;
  for (long long k = 0; k < steps; ++k) {
    while (entry + 1 < entries.size() && switch_step[entry + 1] <= k) ++entry;
    const std::size_t topo = entries[entry].topology;
    const bool last = k + 1 == steps;
    Vector rhs = e * s;
    if (last && last_dt != dt) {
      s = step_factor(e, cl.A_cl(topo), last_dt).solve(rhs);
    } else {
      auto it = factors.find(topo);
      if (it == factors.end()) {
        it = factors.emplace(topo, step_factor(e, cl.A_cl(topo), dt)).first;
      }
      s = it->second.solve(rhs);
    }
    if (!s.allFinite()) {
      throw StepFailure("backward Euler: state became non-finite at step " +
                        std::to_string(k + 1));
    }
    traj.times.push_back(last ? horizon : static_cast<double>(k + 1) * dt);
    traj.states.push_back(s);
  }

  const Matrix c_block = identity_kron(cl.agents(), cl.decomposition().C_o);
  traj.outputs.reserve(traj.states.size());
  for (const Vector& st : traj.states) traj.outputs.push_back(c_block * st.head(nh));
  ConsensusMetrics m = consensus_metrics(traj);
  traj.consensus_candidate = std::move(m.c_o);
  traj.disagreement = std::move(m.disagreement);
  return traj;
}

std::vector<Vector> integrate_descriptor(const Matrix& e, const Matrix& a,
                                         const Vector& x0, double dt, int steps) {
  if (e.rows() != e.cols() || a.rows() != e.rows() || a.cols() != e.cols() ||
      x0.size() != e.rows()) {
    throw InvalidInput("integrate_descriptor: shape mismatch");
  }
  if (!(dt > 0.0) || steps < 0) {
    throw InvalidInput("integrate_descriptor: need dt > 0 and steps >= 0");
  }
  const auto lu = step_factor(e, a, dt);
  std::vector<Vector> out;
  out.reserve(static_cast<std::size_t>(steps) + 1);
  out.push_back(x0);
  for (int k = 0; k < steps; ++k) out.push_back(lu.solve(e * out.back()));
  return out;
}

EnergyAccount energy(const Trajectory& traj, const ProtocolGains& gains,
                     const Matrix& m, double hbar) {
  if (traj.size() == 0) throw InvalidInput("energy: empty trajectory");
  if (m.rows() != gains.K_u.rows() || m.cols() != gains.K_u.rows()) {
    throw InvalidInput("energy: M must be k x k");
  }
  if (gains.K_u.cols() != traj.h) {
    throw InvalidInput("energy: K_u must have h columns");
  }
  if (!(hbar >= 0.0) || hbar > traj.times.back() * (1.0 + 1e-12)) {
    throw InvalidInput("energy: hbar must lie within the trajectory horizon");
  }
  Eigen::LLT<Matrix> llt(m);
  if (llt.info() != Eigen::Success) {
    throw InvalidCertificate("energy: M is not positive definite");
  }
  // u^T M u = ||L^T u||^2 stays nonnegative in floating point.
  const Matrix w = llt.matrixU() * gains.K_u;
  const int h = traj.h;
  const auto integrand = [&](std::size_t k) {
    double q = 0.0;
    const Vector z = traj.z_o(k);
    for (int a = 0; a < traj.agents; ++a) q += (w * z.segment(a * h, h)).squaredNorm();
    return q;
  };

  EnergyAccount acc;
  acc.hbar = hbar;
  acc.times.push_back(traj.times.front());
  acc.J_e.push_back(0.0);
  double prev_q = integrand(0);
  for (std::size_t k = 1; k < traj.size(); ++k) {
    const double t0 = traj.times[k - 1];
    const double t1 = traj.times[k];
    if (t0 >= hbar) break;
    const double q = integrand(k);
    if (t1 <= hbar) {
      acc.times.push_back(t1);
      acc.J_e.push_back(acc.J_e.back() + 0.5 * (t1 - t0) * (prev_q + q));
    } else {
      const double frac = (hbar - t0) / (t1 - t0);
      const double q_end = prev_q + frac * (q - prev_q);
      acc.times.push_back(hbar);
      acc.J_e.push_back(acc.J_e.back() + 0.5 * (hbar - t0) * (prev_q + q_end));
    }
    prev_q = q;
  }
  acc.final_value = acc.J_e.back();
  return acc;
}

ConsensusMetrics consensus_metrics(const Trajectory& traj) {
  ConsensusMetrics m;
  const int n = traj.agents;
  const int l = traj.l;
  m.c_o.reserve(traj.outputs.size());
  m.disagreement.reserve(traj.outputs.size());
  for (const Vector& y : traj.outputs) {
    Vector c = Vector::Zero(l);
    for (int a = 0; a < n; ++a) c += y.segment(a * l, l);
    c /= static_cast<double>(n);
    double worst = 0.0;
    for (int a = 0; a < n; ++a) {
      worst = std::max(worst, (y.segment(a * l, l) - c).lpNorm<Eigen::Infinity>());
    }
    m.c_o.push_back(std::move(c));
    m.disagreement.push_back(worst);
  }
  return m;
}

Vector OracleTrajectory::original_state(std::size_t k) const {
  const int nh = agents * h;
  const int dh = (agents - 1) * h;
  Vector xt(nh), zt(nh);
  xt.head(h) = x1[k];
  zt.head(h) = z1[k];
  xt.tail(dh) = zhat[k] - xhat[k];
  zt.tail(dh) = zhat[k];
  const Matrix u = kron(U_kappa, Matrix::Identity(h, h));
  Vector s(2 * nh);
  s << u * xt, u * zt;
  return s;
}

OracleInitial oracle_initial(const ClosedLoopSystem& cl, const Vector& s0,
                             std::size_t topology) {
  if (topology >= cl.topologies().size()) {
    throw InvalidInput("oracle: topology index out of range");
  }
  const LaplacianReport lr = laplacian(cl.topologies()[topology]);
  if (!lr.connected) {
    throw AnalysisUndefined("oracle: topology is disconnected, U_kappa undefined");
  }
  const int n = cl.agents();
  const int h = cl.h();
  const int nh = n * h;
  Vector s(2 * nh);
  if (s0.size() == nh) {
    s << s0, Vector::Zero(nh);
  } else if (s0.size() == 2 * nh) {
    s = s0;
  } else {
    throw InvalidInput("oracle: initial state has wrong length");
  }
  Eigen::SelfAdjointEigenSolver<Matrix> es(lr.L);
  Matrix u = es.eigenvectors();
  u.col(0).setConstant(1.0 / std::sqrt(static_cast<double>(n)));
  const Matrix ut = kron(u.transpose(), Matrix::Identity(h, h));
  const Vector xt = ut * s.head(nh);
  const Vector zt = ut * s.tail(nh);
  OracleInitial init;
  init.x1 = xt.head(h);
  init.z1 = zt.head(h);
  init.zhat = zt.tail(nh - h);
  init.xhat = zt.tail(nh - h) - xt.tail(nh - h);
  return init;
}

OracleTrajectory integrate_oracle(const ClosedLoopSystem& cl,
                                  std::size_t topology,
                                  const OracleInitial& init, double dt,
                                  double horizon) {
  if (topology >= cl.topologies().size()) {
    throw InvalidInput("oracle: topology index out of range");
  }
  const LaplacianReport lr = laplacian(cl.topologies()[topology]);
  if (!lr.connected) {
    throw AnalysisUndefined("oracle: topology is disconnected, U_kappa undefined");
  }
  if (!(dt > 0.0) || !(horizon > 0.0)) {
    throw InvalidInput("oracle: dt and horizon must be positive");
  }
  const int n = cl.agents();
  const int h = cl.h();
  const int dn = n - 1;
  const auto& dec = cl.decomposition();
  const Matrix& e = dec.E_o;
  const Matrix& a = dec.A_o;
  const Matrix bk = dec.B_o * cl.gains().K_u;
  const Matrix kzc = cl.gains().K_z * dec.C_o;

  OracleTrajectory out;
  out.agents = n;
  out.h = h;
  Eigen::SelfAdjointEigenSolver<Matrix> es(lr.L);
  out.U_kappa = es.eigenvectors();
  out.U_kappa.col(0).setConstant(1.0 / std::sqrt(static_cast<double>(n)));
  out.Delta = es.eigenvalues().tail(dn).asDiagonal();

  // Consensus subsystem on [z~_1; x~_1].
  Matrix e5 = identity_kron(2, e);
  Matrix a5 = Matrix::Zero(2 * h, 2 * h);
  a5.topLeftCorner(h, h) = a + bk;
  a5.bottomLeftCorner(h, h) = bk;
  a5.bottomRightCorner(h, h) = a;
  // Disagreement subsystem on [z^_D; x^_D], block upper triangular.
  const int dh = dn * h;
  Matrix e7 = identity_kron(2 * dn, e);
  Matrix a7 = Matrix::Zero(2 * dh, 2 * dh);
  a7.topLeftCorner(dh, dh) = identity_kron(dn, a + bk);
  a7.topRightCorner(dh, dh) = kron(out.Delta, kzc);
  a7.bottomRightCorner(dh, dh) =
      identity_kron(dn, a) + kron(out.Delta, kzc);

  const long long steps = std::llround(horizon / dt);
  const auto lu5 = step_factor(e5, a5, dt);
  const auto lu7 = step_factor(e7, a7, dt);
  Vector w(2 * h), v(2 * dh);
  w << init.z1, init.x1;
  v << init.zhat, init.xhat;
  for (long long k = 0; k <= steps; ++k) {
    if (k > 0) {
      w = lu5.solve(e5 * w);
      v = lu7.solve(e7 * v);
    }
    out.times.push_back(static_cast<double>(k) * dt);
    out.z1.push_back(w.head(h));
    out.x1.push_back(w.tail(h));
    out.zhat.push_back(v.head(dh));
    out.xhat.push_back(v.tail(dh));
  }
  return out;
}

OracleTrajectory transform_oracle(const ClosedLoopSystem& cl, const Vector& x0,
                                  std::size_t topology, double dt,
                                  double horizon) {
  return integrate_oracle(cl, topology, oracle_initial(cl, x0, topology), dt,
                          horizon);
}

void write_trajectory_csv(std::ostream& os, const Trajectory& traj,
                          const EnergyAccount& account) {
  std::string line = "t";
  for (int a = 1; a <= traj.agents; ++a) {
    for (int j = 1; j <= traj.l; ++j) {
      line += ",y_" + std::to_string(a) + "_" + std::to_string(j);
    }
  }
  for (int j = 1; j <= traj.l; ++j) line += ",c_o_" + std::to_string(j);
  line += ",disagreement,J_e\n";
  os << line;
  for (std::size_t k = 0; k < traj.size(); ++k) {
    line.clear();
    append_double(line, traj.times[k]);
    for (Eigen::Index i = 0; i < traj.outputs[k].size(); ++i) {
      line += ',';
      append_double(line, traj.outputs[k](i));
    }
    for (Eigen::Index i = 0; i < traj.consensus_candidate[k].size(); ++i) {
      line += ',';
      append_double(line, traj.consensus_candidate[k](i));
    }
    line += ',';
    append_double(line, traj.disagreement[k]);
    line += ',';
    // Blank past hbar, including a trailing partial-interval value.
    if (k < account.J_e.size() && account.times[k] == traj.times[k]) {
      append_double(line, account.J_e[k]);
    }
    line += '\n';
    os << line;
  }
}

}  // namespace lbcon
