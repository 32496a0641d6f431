#include "lbcon/gains.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/LU>

#include "lbcon/errors.hpp"

namespace lbcon {

namespace {

std::string shape(const Matrix& m) {
  return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

void require_shape(const Matrix& m, Eigen::Index rows, Eigen::Index cols,
                   const char* name) {
  if (m.rows() != rows || m.cols() != cols) {
    throw InvalidInput(std::string(name) + " must be " + std::to_string(rows) +
                       "x" + std::to_string(cols) + ", got " + shape(m));
  }
  require_finite(m, name);
}

Matrix checked_inverse(const Matrix& r, const char* name) {
  if (numerical_rank(r).rank < r.rows()) {
    throw InvalidCertificate(std::string(name) + " is singular");
  }
  return r.fullPivLu().inverse();
}

void require_certificate_shapes(const ObservableDecomposition& dec,
                                const DesignCertificate& cert) {
  const Eigen::Index h = dec.h;
  const Eigen::Index k = dec.B_o.cols();
  require_shape(cert.R_x, h, h, "certificate.R_x");
  require_shape(cert.R_z, h, h, "certificate.R_z");
  require_shape(cert.M, k, k, "certificate.M");
}

// Slack of X <= 0 (non-strict): tol_psd - max eig.
double semidefinite_slack(const Matrix& x) {
  return tol::kPsd - sym_eigenvalues(symmetric_part(x)).max;
}

// Slack of X < 0 (strict): -max eig - tol_def.
double definite_slack(const Matrix& x) {
  return is_negative_definite(symmetric_part(x)).margin - tol::kDef;
}

ConditionResult strict(std::string id, double margin, std::string what) {
  return {std::move(id), margin > 0.0, margin, std::move(what)};
}

ConditionResult weak(std::string id, double margin, std::string what) {
  return {std::move(id), margin >= 0.0, margin, std::move(what)};
}

// X^T = X and sym(X) >= 0, as one slack.
double symmetric_psd_slack(const Matrix& x) {
  double residual = 0.0;
  symmetric_product_holds(x, &residual);
  const double sym_slack = tol::kSym * (1.0 + inf_norm(x)) - residual;
  const double psd_slack =
      is_positive_semidefinite(symmetric_part(x)).margin + tol::kPsd;
  return std::min(sym_slack, psd_slack);
}

ConditionResult rank_condition(const Matrix& e, const Matrix& a) {
  const Eigen::Index h = e.rows();
  Matrix block = Matrix::Zero(2 * h, 2 * h);
  block.topLeftCorner(h, h) = e;
  block.bottomLeftCorner(h, h) = a;
  block.bottomRightCorner(h, h) = e;
  const RankReport r = numerical_rank(block);
  const int target = static_cast<int>(h) + numerical_rank(e).rank;
  double margin = -std::abs(static_cast<double>(r.rank - target));
  if (r.rank == target && target > 0) {
    margin = r.singular_values[static_cast<std::size_t>(target - 1)] /
             r.singular_values.front();
  }
  return weak("I", r.rank == target ? margin : std::min(margin, -1.0),
              "rank [E_o 0; A_o E_o] = h + rank E_o");
}

ConditionReport common_conditions(const ObservableDecomposition& dec,
                                  const DesignCertificate& cert,
                                  const Vector& y0) {
  if (y0.size() == 0) {
    throw InvalidInput("verify: initial outputs y0 are required for the budget check");
  }
  validate_certificate(dec, cert);
  const Matrix& e = dec.E_o;
  const Matrix& a = dec.A_o;
  const Matrix ctc = dec.C_o.transpose() * dec.C_o;

  ConditionReport report;
  report.conditions.push_back(rank_condition(e, a));
  report.conditions.push_back(
      weak("II.a", symmetric_psd_slack(e.transpose() * cert.R_x),
           "E_o^T R_x = R_x^T E_o >= 0"));
  report.conditions.push_back(strict(
      "II.b",
      definite_slack(cert.R_x.transpose() * a + a.transpose() * cert.R_x - ctc),
      "R_x^T A_o + A_o^T R_x - C_o^T C_o < 0"));
  const BudgetCheck budget = budget_check(dec, cert, y0);
  report.conditions.push_back(
      weak("II.c", budget.margin, "s E_o^T R_x <= J_e* C_o^T C_o"));
  report.conditions.push_back(
      weak("III.a", symmetric_psd_slack(e * cert.R_z),
           "R_z^T E_o^T = E_o R_z >= 0"));
  report.conditions.push_back(strict(
      "III.b.min",
      definite_slack(assemble_theta(dec, cert, cert.bounds.lambda_min).theta),
      "Theta(lambda_min) < 0"));
  report.conditions.push_back(strict(
      "III.b.max",
      definite_slack(assemble_theta(dec, cert, cert.bounds.lambda_max).theta),
      "Theta(lambda_max) < 0"));
  return report;
}

}  // namespace

bool ConditionReport::overall() const {
  return std::all_of(conditions.begin(), conditions.end(),
                     [](const ConditionResult& c) { return c.pass; });
}

const ConditionResult* ConditionReport::find(const std::string& id) const {
  for (const auto& c : conditions) {
    if (c.id == id) return &c;
  }
  return nullptr;
}

const ConditionResult* ConditionReport::first_failure() const {
  for (const auto& c : conditions) {
    if (!c.pass) return &c;
  }
  return nullptr;
}

void validate_certificate(const ObservableDecomposition& dec,
                          const DesignCertificate& cert) {
  require_certificate_shapes(dec, cert);
  if ((cert.M - cert.M.transpose()).cwiseAbs().maxCoeff() > tol::kSym) {
    throw InvalidCertificate("certificate.M must be symmetric");
  }
  if (sym_eigenvalues(symmetric_part(cert.M)).min <= tol::kDef) {
    throw InvalidCertificate("certificate.M must be positive definite");
  }
  if (!(cert.J_e_star > 0.0) || !std::isfinite(cert.J_e_star)) {
    throw InvalidCertificate("certificate.J_e_star must be positive");
  }
  if (!(cert.bounds.lambda_min > 0.0) ||
      !(cert.bounds.lambda_max >= cert.bounds.lambda_min) ||
      !std::isfinite(cert.bounds.lambda_max)) {
    throw InvalidCertificate("certificate bounds need 0 < lambda_min <= lambda_max");
  }
  checked_inverse(cert.R_x, "certificate.R_x");
  checked_inverse(cert.R_z, "certificate.R_z");
}

ThetaBlock assemble_theta(const ObservableDecomposition& dec,
                          const DesignCertificate& cert, double lambda) {
  require_certificate_shapes(dec, cert);
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
    throw InvalidInput("assemble_theta: lambda must be finite and >= 0");
  }
  const Eigen::Index h = dec.h;
  const Eigen::Index k = dec.B_o.cols();
  const Matrix& a = dec.A_o;
  const Matrix& b = dec.B_o;
  const Matrix ctc = dec.C_o.transpose() * dec.C_o;
  const Matrix rx_inv_t = checked_inverse(cert.R_x, "certificate.R_x").transpose();
  checked_inverse(cert.R_z, "certificate.R_z");

  Matrix t = Matrix::Zero(2 * h + k, 2 * h + k);
  t.block(0, 0, h, h) =
      a * cert.R_z + cert.R_z.transpose() * a.transpose() - b * b.transpose();
  t.block(0, h, h, h) = -0.5 * lambda * rx_inv_t * ctc;
  t.block(0, 2 * h, h, k) = 0.5 * b * cert.M;
  t.block(h, h, h, h) =
      cert.R_x.transpose() * a + a.transpose() * cert.R_x - ctc;
  t.block(2 * h, 2 * h, k, k) = -cert.M;
  t.block(h, 0, h, h) = t.block(0, h, h, h).transpose();
  t.block(2 * h, 0, k, h) = t.block(0, 2 * h, h, k).transpose();
  return {symmetric_part(t), lambda};
}

BudgetCheck budget_check(const ObservableDecomposition& dec,
                         const DesignCertificate& cert, const Vector& y0) {
  require_certificate_shapes(dec, cert);
  const Eigen::Index l = dec.C_o.rows();
  if (y0.size() == 0 || l == 0 || y0.size() % l != 0) {
    throw InvalidInput("budget_check: y0 length " + std::to_string(y0.size()) +
                       " is not a positive multiple of l = " + std::to_string(l));
  }
  require_finite(y0, "budget_check(y0)");
  const Eigen::Index n_agents = y0.size() / l;

  // Canonical agent order makes s bit-identical under relabeling.
  std::vector<Vector> outputs;
  for (Eigen::Index m = 0; m < n_agents; ++m) outputs.push_back(y0.segment(m * l, l));
  std::sort(outputs.begin(), outputs.end(), [](const Vector& x, const Vector& y) {
    return std::lexicographical_compare(x.begin(), x.end(), y.begin(), y.end());
  });
  Vector mean = Vector::Zero(l);
  for (const Vector& y : outputs) mean += y;
  mean /= static_cast<double>(n_agents);
  double s = 0.0;
  for (const Vector& y : outputs) s += (y - mean).squaredNorm();

  const Matrix lhs = s * symmetric_part(dec.E_o.transpose() * cert.R_x);
  const Matrix rhs = cert.J_e_star * dec.C_o.transpose() * dec.C_o;
  BudgetCheck out;
  out.disagreement_energy = s;
  out.margin = sym_eigenvalues(symmetric_part(rhs - lhs)).min + tol::kPsd;
  out.pass = out.margin >= 0.0;
  return out;
}

ConditionReport verify_theorem2(const ObservableDecomposition& dec,
                                const DesignCertificate& cert,
                                const Vector& y0) {
  if (cert.theorem != Theorem::two) {
    throw InvalidInput("verify_theorem2: certificate is not a form-2 certificate");
  }
  return common_conditions(dec, cert, y0);
}

ConditionReport verify_theorem3(const ObservableDecomposition& dec,
                                const DesignCertificate& cert,
                                const Vector& y0) {
  if (cert.theorem != Theorem::three) {
    throw InvalidInput("verify_theorem3: certificate is not a form-3 certificate");
  }
  ConditionReport report = common_conditions(dec, cert, y0);
  const Matrix& a = dec.A_o;
  report.conditions.push_back(weak(
      "II.d", semidefinite_slack(cert.R_x.transpose() * a + a.transpose() * cert.R_x),
      "R_x^T A_o + A_o^T R_x <= 0"));
  report.conditions.push_back(weak(
      "III.c", semidefinite_slack(a * cert.R_z + cert.R_z.transpose() * a.transpose()),
      "A_o R_z + R_z^T A_o^T <= 0"));
  const ModeTest det = check_detectable(dec.E_o, a, dec.C_o);
  report.conditions.push_back(
      {"detectable", det.holds, det.margin, "(E_o, A_o, C_o) detectable"});
  const ModeTest stab = check_stabilizable(dec.E_o, a, dec.B_o);
  report.conditions.push_back(
      {"stabilizable", stab.holds, stab.margin, "(E_o, A_o, B_o) stabilizable"});
  return report;
}

ConditionReport verify_certificate(const ObservableDecomposition& dec,
                                   const DesignCertificate& cert,
                                   const Vector& y0) {
  return cert.theorem == Theorem::two ? verify_theorem2(dec, cert, y0)
                                      : verify_theorem3(dec, cert, y0);
}

ProtocolGains compute_gains(const ObservableDecomposition& dec,
                            const DesignCertificate& cert) {
  require_certificate_shapes(dec, cert);
  if (!(cert.bounds.lambda_min > 0.0) || !std::isfinite(cert.bounds.lambda_min)) {
    throw InvalidCertificate("compute_gains: lambda_min must be positive");
  }
  const Matrix rz_inv = checked_inverse(cert.R_z, "certificate.R_z");
  const Matrix rx_inv = checked_inverse(cert.R_x, "certificate.R_x");
  ProtocolGains g;
  g.K_u = -0.5 * dec.B_o.transpose() * rz_inv;
  g.K_z = (-0.5 / cert.bounds.lambda_min) * rx_inv.transpose() *
          dec.C_o.transpose();
  g.lambda_min_used = cert.bounds.lambda_min;
  return g;
}

ThetaRange theta_feasible_range(const ObservableDecomposition& dec,
                                const DesignCertificate& cert, double ceiling) {
  const auto feasible = [&](double lambda) {
    return definite_slack(assemble_theta(dec, cert, lambda).theta) > 0.0;
  };
  ThetaRange out;
  out.lambda_lo = out.lambda_hi = cert.bounds.lambda_min;
  out.feasible_at_min = feasible(out.lambda_lo);
  if (!out.feasible_at_min || ceiling <= out.lambda_lo) return out;
  if (feasible(ceiling)) {
    out.lambda_hi = ceiling;
    return out;
  }
  double lo = out.lambda_lo;
  double hi = ceiling;
  while (hi - lo > 1e-10 * hi) {
    const double mid = 0.5 * (lo + hi);
    (feasible(mid) ? lo : hi) = mid;
  }
  out.lambda_hi = lo;
  return out;
}

KzConsistency kz_consistency(const Matrix& k_z, const Matrix& r_x,
                             const Matrix& c_o) {
  if (r_x.rows() != r_x.cols() || c_o.cols() != r_x.rows() ||
      k_z.rows() != r_x.rows() || k_z.cols() != c_o.rows()) {
    throw InvalidInput("kz_consistency: shapes do not match (K_z " + shape(k_z) +
                       ", R_x " + shape(r_x) + ", C_o " + shape(c_o) + ")");
  }
  const Matrix d = -checked_inverse(r_x, "R_x").transpose() * c_o.transpose();
  KzConsistency out;
  const double dd = d.squaredNorm();
  if (dd == 0.0) throw InvalidInput("kz_consistency: direction matrix is zero");
  out.scale = (k_z.array() * d.array()).sum() / dd;
  const double kn = k_z.norm();
  out.relative_residual = kn > 0.0 ? (k_z - out.scale * d).norm() / kn : 0.0;
  out.inferred_lambda_min = 0.5 / out.scale;
  return out;
}

}  // namespace lbcon
