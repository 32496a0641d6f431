#include "lbcon/decomposition.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include <Eigen/LU>

#include "lbcon/errors.hpp"

namespace lbcon {

namespace {

double relative_block(const Matrix& whole, const Matrix& block) {
  if (block.size() == 0) return 0.0;
  const double scale = inf_norm(whole);
  const double peak = block.cwiseAbs().maxCoeff();
  return scale > 0.0 ? peak / scale : peak;
}

Matrix assemble_lower(const Matrix& top_left, const Matrix& bottom_left,
                      const Matrix& bottom_right) {
  const Eigen::Index h = top_left.rows();
  const Eigen::Index r = bottom_right.rows();
  Matrix m = Matrix::Zero(h + r, h + r);
  m.topLeftCorner(h, h) = top_left;
  m.bottomLeftCorner(r, h) = bottom_left;
  m.bottomRightCorner(r, r) = bottom_right;
  return m;
}

// Updates `test` with one rank requirement and returns whether it held.
// `scale` is the size of the data the test matrix is built from, so a block
// that nearly cancels (sigma E - A at an eigenvalue) is not judged relative to
// its own tiny norm.
bool require_rank(ModeTest& test, const ComplexMatrix& m, int target, double scale) {
  const double tol = static_cast<double>(std::max(m.rows(), m.cols())) *
                     std::numeric_limits<double>::epsilon() * tol::kRankScale *
                     std::max(scale, 1e-300);
  const RankReport r = numerical_rank(m, tol);
  if (r.rank < target) {
    test.margin = (test.margin > 0.0 ? 0.0 : test.margin) - 1.0;
    return false;
  }
  if (test.margin > 0.0 && target > 0) {
    const double ratio =
        r.singular_values[static_cast<std::size_t>(target - 1)] / std::max(scale, 1e-300);
    test.margin = std::min(test.margin, ratio);
  }
  return true;
}

bool right_half_plane(std::complex<double> s) {
  return s.real() >= -1e-9 * std::max(1.0, std::abs(s));
}

void require_pencil(const Matrix& e, const Matrix& a, const Matrix& other,
                    bool other_is_output, const char* op) {
  if (e.rows() != e.cols() || a.rows() != e.rows() || a.cols() != e.cols()) {
    throw InvalidInput(std::string(op) + ": E and A must be equal square matrices");
  }
  if (other_is_output ? other.cols() != e.cols() : other.rows() != e.rows()) {
    throw InvalidInput(std::string(op) + ": " +
                       (other_is_output ? "C must have h columns"
                                        : "B must have h rows"));
  }
  if (!check_pair(e, a).regular) {
    throw AnalysisUndefined(std::string(op) + ": pencil (E, A) is not regular");
  }
}

}  // namespace

Vector ObservableDecomposition::observable_state(const Vector& x) const {
  if (x.size() != U_o.rows()) {
    throw InvalidInput("observable_state: expected " + std::to_string(U_o.rows()) +
                       " entries, got " + std::to_string(x.size()));
  }
  const Vector full = U_o.fullPivLu().solve(x);
  return full.head(h);
}

DescriptorSystem ObservableDecomposition::reconstruct() const {
  const Eigen::Index r = n() - h;
  const Matrix te = assemble_lower(E_o, E_ot, E_ob);
  const Matrix ta = assemble_lower(A_o, A_ot, A_ob);
  Matrix tb(h + r, B_o.cols());
  tb.topRows(h) = B_o;
  tb.bottomRows(r) = B_ob;
  Matrix tc = Matrix::Zero(C_o.rows(), h + r);
  tc.leftCols(h) = C_o;
  const Matrix u_inv = U_o.fullPivLu().inverse();
  return DescriptorSystem(U_o * te * u_inv, U_o * ta * u_inv, U_o * tb,
                          tc * u_inv);
}

ObservableDecomposition decompose(const DescriptorSystem& sys, const Matrix& u_o,
                                  int h, double tol_block) {
  const int n = sys.n();
  if (u_o.rows() != n || u_o.cols() != n) {
    throw InvalidInput("decompose: U_o must be " + std::to_string(n) + "x" +
                       std::to_string(n));
  }
  require_finite(u_o, "decompose(U_o)");
  if (h < 1 || h > n) {
    throw InvalidInput("decompose: h must lie in [1, " + std::to_string(n) +
                       "], got " + std::to_string(h));
  }
  if (numerical_rank(u_o).rank < n) {
    throw InvalidInput("decompose: U_o is singular");
  }
  const Matrix u_inv = u_o.fullPivLu().inverse();
  const Matrix te = u_inv * sys.E() * u_o;
  const Matrix ta = u_inv * sys.A() * u_o;
  const Matrix tb = u_inv * sys.B();
  const Matrix tc = sys.C() * u_o;
  const int r = n - h;

  ObservableDecomposition d;
  d.U_o = u_o;
  d.h = h;
  d.E_o = te.topLeftCorner(h, h);
  d.A_o = ta.topLeftCorner(h, h);
  d.B_o = tb.topRows(h);
  d.C_o = tc.leftCols(h);
  d.E_ot = te.bottomLeftCorner(r, h);
  d.E_ob = te.bottomRightCorner(r, r);
  d.A_ot = ta.bottomLeftCorner(r, h);
  d.A_ob = ta.bottomRightCorner(r, r);
  d.B_ob = tb.bottomRows(r);
  d.block_residual =
      std::max({relative_block(te, te.topRightCorner(h, r)),
                relative_block(ta, ta.topRightCorner(h, r)),
                relative_block(tc, tc.rightCols(r))});
  if (d.block_residual > tol_block) {
    throw DecompositionInvalid(
        "decompose: U_o does not yield the observable block form (residual " +
            std::to_string(d.block_residual) + ")",
        d.block_residual);
  }
  return d;
}

ModeTest check_detectable(const Matrix& e, const Matrix& a, const Matrix& c) {
  require_pencil(e, a, c, true, "check_detectable");
  const Eigen::Index h = e.rows();
  const Eigen::Index l = c.rows();
  const auto scale = [&](std::complex<double> s) {
    return std::abs(s) * e.norm() + a.norm() + c.norm();
  };
  ModeTest test;
  test.margin = 1.0;
  bool ok = true;
  for (const auto& s : generalized_eigenvalues(e, a).finite) {
    if (!right_half_plane(s)) continue;
    ComplexMatrix m(h + l, h);
    m.topRows(h) = s * e.cast<std::complex<double>>() - a.cast<std::complex<double>>();
    m.bottomRows(l) = c.cast<std::complex<double>>();
    if (!require_rank(test, m, static_cast<int>(h), scale(s))) {
      test.witnesses.push_back(s);
      ok = false;
    }
  }
  Matrix imp = Matrix::Zero(2 * h + l, 2 * h);
  imp.topLeftCorner(h, h) = e;
  imp.block(h, 0, h, h) = a;
  imp.block(h, h, h, h) = e;
  imp.bottomLeftCorner(l, h) = c;
  test.impulsive_part_ok = require_rank(
      test, imp.cast<std::complex<double>>(),
      static_cast<int>(h) + numerical_rank(e).rank, imp.norm());
  test.holds = ok && test.impulsive_part_ok;
  return test;
}

ModeTest check_stabilizable(const Matrix& e, const Matrix& a, const Matrix& b) {
  require_pencil(e, a, b, false, "check_stabilizable");
  const Eigen::Index h = e.rows();
  const Eigen::Index k = b.cols();
  const auto scale = [&](std::complex<double> s) {
    return std::abs(s) * e.norm() + a.norm() + b.norm();
  };
  ModeTest test;
  test.margin = 1.0;
  bool ok = true;
  for (const auto& s : generalized_eigenvalues(e, a).finite) {
    if (!right_half_plane(s)) continue;
    ComplexMatrix m(h, h + k);
    m.leftCols(h) = s * e.cast<std::complex<double>>() - a.cast<std::complex<double>>();
    m.rightCols(k) = b.cast<std::complex<double>>();
    if (!require_rank(test, m, static_cast<int>(h), scale(s))) {
      test.witnesses.push_back(s);
      ok = false;
    }
  }
  Matrix imp = Matrix::Zero(2 * h, 2 * h + k);
  imp.topLeftCorner(h, h) = e;
  imp.bottomLeftCorner(h, h) = a;
  imp.block(h, h, h, h) = e;
  imp.bottomRightCorner(h, k) = b;
  test.impulsive_part_ok = require_rank(
      test, imp.cast<std::complex<double>>(),
      static_cast<int>(h) + numerical_rank(e).rank, imp.norm());
  test.holds = ok && test.impulsive_part_ok;
  return test;
}

}  // namespace lbcon
