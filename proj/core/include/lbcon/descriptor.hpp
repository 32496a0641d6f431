#pragma once

// Descriptor agent dynamics E x' = A x + B u, y = C x and the pencil tests
// used throughout: regularity / impulse-freeness (rank test on [E 0; A E])
// and the admissibility certificate E^T R = R^T E >= 0, A^T R + R^T A < 0.

#include <span>
#include <vector>

#include "lbcon/numerics.hpp"

namespace lbcon {

struct ObservableDecomposition;
struct ProtocolGains;

class DescriptorSystem {
 public:
  // Validates shapes: E, A are n x n, B is n x k, C is l x n.
  DescriptorSystem(Matrix e, Matrix a, Matrix b, Matrix c);

  const Matrix& E() const { return e_; }
  const Matrix& A() const { return a_; }
  const Matrix& B() const { return b_; }
  const Matrix& C() const { return c_; }
  int n() const { return static_cast<int>(e_.rows()); }
  int k() const { return static_cast<int>(b_.cols()); }
  int l() const { return static_cast<int>(c_.rows()); }

 private:
  Matrix e_, a_, b_, c_;
};

struct PairReport {
  bool regular = false;
  bool impulse_free = false;
  int pencil_rank = 0;
  int pencil_rank_target = 0;  // n + rank(E)
};

PairReport check_pair(const Matrix& e, const Matrix& a);

struct AdmissibilityCertificate {
  bool valid = false;
  double symmetry_residual = 0.0;  // ||E^T R - R^T E||_inf
  double sym_part_psd_margin = 0.0;  // min eig of E^T R (symmetrized)
  double stability_margin = 0.0;     // -max eig of A^T R + R^T A
};

AdmissibilityCertificate check_admissibility(const Matrix& e, const Matrix& a,
                                             const Matrix& r);

// ||E^T R - R^T E||_inf <= tol_sym (1 + ||E^T R||_inf)
bool symmetric_product_holds(const Matrix& etr, double* residual = nullptr);

// Pairs (E_o, A_o), (E_o, A_o + B_o K_u) and (E_o, A_o + lambda K_z C_o) for
// each lambda, in that order.
std::vector<PairReport> closed_loop_pair_checks(
    const ObservableDecomposition& dec, const ProtocolGains& gains,
    std::span<const double> lambdas);

}  // namespace lbcon
