#pragma once

// Dense-matrix kernel: numerical rank, symmetric spectra, definiteness tests
// and determinant-degree of a matrix pencil.

#include <complex>
#include <optional>
#include <vector>

#include <Eigen/Dense>

namespace lbcon {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using ComplexMatrix = Eigen::MatrixXcd;

namespace tol {
inline constexpr double kSym = 1e-9;   // max |m - m^T| entry
inline constexpr double kDef = 1e-9;   // strict negative definiteness
inline constexpr double kPsd = 1e-9;   // semidefinite boundary
inline constexpr double kPoly = 1e-8;  // relative, determinant coefficients
inline constexpr double kRankScale = 1e3;
}  // namespace tol

struct RankReport {
  int rank = 0;
  std::vector<double> singular_values;  // descending
  double tolerance_used = 0.0;
};

struct SpectrumReport {
  std::vector<double> eigenvalues;  // ascending
  double min = 0.0;
  double max = 0.0;
};

struct DefiniteVerdict {
  bool holds = false;
  double margin = 0.0;
  explicit operator bool() const { return holds; }
};

struct PencilDegree {
  bool regular = false;
  int degree = 0;
  // det(sigma E - A) = sum_k coefficients[k] sigma^k
  std::vector<double> coefficients;
};

// Throws InvalidInput on NaN/Inf.
void require_finite(const Matrix& m, const char* name);

// max(rows, cols) * sigma_max * eps * 1e3 unless `tol` is given.
RankReport numerical_rank(const Matrix& m, std::optional<double> tol = {});
RankReport numerical_rank(const ComplexMatrix& m,
                          std::optional<double> tol = {});

Matrix symmetric_part(const Matrix& m);

// Requires square input symmetric to within tol::kSym.
SpectrumReport sym_eigenvalues(const Matrix& m);

// Symmetrizes first, then tests max eigenvalue < -tol::kDef.
// margin = -(max eigenvalue).
DefiniteVerdict is_negative_definite(const Matrix& m);

// Symmetrizes first, then tests min eigenvalue >= -tol::kPsd.
// margin = min eigenvalue.
DefiniteVerdict is_positive_semidefinite(const Matrix& m);

PencilDegree pencil_determinant_degree(const Matrix& e, const Matrix& a);

struct PencilEigenvalues {
  std::vector<std::complex<double>> finite;
  int infinite = 0;
};

// Generalized eigenvalues of sigma E - A. Eigenvalues with |beta| below a
// relative threshold are counted as infinite.
PencilEigenvalues generalized_eigenvalues(const Matrix& e, const Matrix& a);

Matrix kron(const Matrix& a, const Matrix& b);

double inf_norm(const Matrix& m);

}  // namespace lbcon
