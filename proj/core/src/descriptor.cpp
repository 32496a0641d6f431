#include "lbcon/descriptor.hpp"

#include <string>
#include <utility>

#include "lbcon/decomposition.hpp"
#include "lbcon/errors.hpp"
#include "lbcon/gains.hpp"

namespace lbcon {

namespace {

std::string shape(const Matrix& m) {
  return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

void require_same_square(const Matrix& e, const Matrix& a, const char* op) {
  if (e.rows() != e.cols() || a.rows() != e.rows() || a.cols() != e.cols()) {
    throw InvalidInput(std::string(op) + ": expected equal square matrices, got " +
                       shape(e) + " and " + shape(a));
  }
}

}  // namespace

DescriptorSystem::DescriptorSystem(Matrix e, Matrix a, Matrix b, Matrix c)
    : e_(std::move(e)), a_(std::move(a)), b_(std::move(b)), c_(std::move(c)) {
  require_same_square(e_, a_, "DescriptorSystem");
  if (e_.rows() == 0) throw InvalidInput("DescriptorSystem: n must be positive");
  if (b_.rows() != e_.rows()) {
    throw InvalidInput("DescriptorSystem: B must have n rows, got " + shape(b_));
  }
  if (c_.cols() != e_.cols()) {
    throw InvalidInput("DescriptorSystem: C must have n columns, got " + shape(c_));
  }
  require_finite(e_, "DescriptorSystem(E)");
  require_finite(a_, "DescriptorSystem(A)");
  require_finite(b_, "DescriptorSystem(B)");
  require_finite(c_, "DescriptorSystem(C)");
}

PairReport check_pair(const Matrix& e, const Matrix& a) {
  require_same_square(e, a, "check_pair");
  require_finite(e, "check_pair(E)");
  require_finite(a, "check_pair(A)");
  const Eigen::Index n = e.rows();
  Matrix block = Matrix::Zero(2 * n, 2 * n);
  block.topLeftCorner(n, n) = e;
  block.bottomLeftCorner(n, n) = a;
  block.bottomRightCorner(n, n) = e;

  PairReport r;
  r.pencil_rank = numerical_rank(block).rank;
  r.pencil_rank_target = static_cast<int>(n) + numerical_rank(e).rank;
  r.impulse_free = r.pencil_rank == r.pencil_rank_target;
  r.regular = r.impulse_free || pencil_determinant_degree(e, a).regular;
  return r;
}

bool symmetric_product_holds(const Matrix& etr, double* residual) {
  const double res = inf_norm(etr - etr.transpose());
  if (residual) *residual = res;
  return res <= tol::kSym * (1.0 + inf_norm(etr));
}

AdmissibilityCertificate check_admissibility(const Matrix& e, const Matrix& a,
                                             const Matrix& r) {
  require_same_square(e, a, "check_admissibility");
  require_same_square(e, r, "check_admissibility");
  require_finite(r, "check_admissibility(R)");
  const Matrix etr = e.transpose() * r;
  AdmissibilityCertificate cert;
  const bool sym = symmetric_product_holds(etr, &cert.symmetry_residual);
  const DefiniteVerdict psd = is_positive_semidefinite(symmetric_part(etr));
  const DefiniteVerdict neg =
      is_negative_definite(symmetric_part(a.transpose() * r + r.transpose() * a));
  cert.sym_part_psd_margin = psd.margin;
  cert.stability_margin = neg.margin;
  cert.valid = sym && psd.holds && neg.holds;
  return cert;
}

std::vector<PairReport> closed_loop_pair_checks(
    const ObservableDecomposition& dec, const ProtocolGains& gains,
    std::span<const double> lambdas) {
  const Eigen::Index h = dec.h;
  if (gains.K_u.rows() != dec.B_o.cols() || gains.K_u.cols() != h) {
    throw InvalidInput("closed_loop_pair_checks: K_u must be k x h, got " +
                       shape(gains.K_u));
  }
  if (gains.K_z.rows() != h || gains.K_z.cols() != dec.C_o.rows()) {
    throw InvalidInput("closed_loop_pair_checks: K_z must be h x l, got " +
                       shape(gains.K_z));
  }
  if (lambdas.empty()) {
    throw InvalidInput("closed_loop_pair_checks: lambdas must be nonempty");
  }
  std::vector<PairReport> out;
  out.reserve(lambdas.size() + 2);
  out.push_back(check_pair(dec.E_o, dec.A_o));
  out.push_back(check_pair(dec.E_o, dec.A_o + dec.B_o * gains.K_u));
  const Matrix kzc = gains.K_z * dec.C_o;
  for (double lambda : lambdas) {
    out.push_back(check_pair(dec.E_o, dec.A_o + lambda * kzc));
  }
  return out;
}

}  // namespace lbcon
