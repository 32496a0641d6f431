#pragma once

#include <complex>
#include <vector>

#include "lbcon/descriptor.hpp"

namespace lbcon {

inline constexpr double kDefaultBlockTolerance = 1e-6;

// Blocks of U_o^-1 E U_o = [E_o 0; E_ot E_ob], U_o^-1 A U_o = [A_o 0; A_ot A_ob],
// U_o^-1 B = [B_o; B_ob], C U_o = [C_o 0]. Suffix _ot is the coupling block
// (E~ / A~), _ob the unobservable diagonal block.
struct ObservableDecomposition {
  Matrix U_o;
  int h = 0;
  Matrix E_o, A_o, B_o, C_o;
  Matrix E_ot, E_ob, A_ot, A_ob, B_ob;
  // Largest |entry| of the zero blocks, each relative to the inf-norm of its
  // transformed matrix.
  double block_residual = 0.0;

  int n() const { return static_cast<int>(U_o.rows()); }

  // Observable part of U_o^-1 x.
  Vector observable_state(const Vector& x) const;
  // Reassembles and conjugates back to (E, A, B, C).
  DescriptorSystem reconstruct() const;
};

// Throws InvalidInput for singular U_o or h outside [1, n], and
// DecompositionInvalid when block_residual > tol_block.
ObservableDecomposition decompose(const DescriptorSystem& sys, const Matrix& u_o,
                                  int h,
                                  double tol_block = kDefaultBlockTolerance);

struct ModeTest {
  bool holds = false;
  // Finite generalized eigenvalues with Re >= 0 at which the rank test fails.
  std::vector<std::complex<double>> witnesses;
  // Rank condition covering infinite (impulsive) modes.
  bool impulsive_part_ok = false;
  // Smallest sigma_target / ||data|| over the rank tests when they all pass,
  // minus the number of failed tests otherwise.
  double margin = 0.0;
  explicit operator bool() const { return holds; }
};

// rank [sigma E - A; C] = h at every finite eigenvalue with Re(sigma) >= 0,
// and rank [E 0; A E; C 0] = h + rank(E). Throws AnalysisUndefined for an
// irregular pencil.
ModeTest check_detectable(const Matrix& e, const Matrix& a, const Matrix& c);

// Dual: rank [sigma E - A, B] = h and rank [E 0 0; A E B] = h + rank(E).
ModeTest check_stabilizable(const Matrix& e, const Matrix& a, const Matrix& b);

}  // namespace lbcon
