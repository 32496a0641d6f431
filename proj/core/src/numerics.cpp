#include "lbcon/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include "lbcon/errors.hpp"

namespace lbcon {

namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();

template <typename Derived>
RankReport rank_from_svd(const Eigen::MatrixBase<Derived>& m,
                         std::optional<double> tol) {
  RankReport report;
  if (m.size() == 0) {
    report.tolerance_used = tol.value_or(0.0);
    return report;
  }
  Eigen::JacobiSVD<typename Derived::PlainObject> svd(m);
  const auto& sv = svd.singularValues();
  report.singular_values.assign(sv.data(), sv.data() + sv.size());
  const double sigma_max = sv.size() > 0 ? sv(0) : 0.0;
  if (tol) {
    if (!(*tol >= 0.0) || !std::isfinite(*tol)) {
      throw InvalidInput("numerical_rank: tolerance must be finite and >= 0");
    }
    report.tolerance_used = *tol;
  } else {
    report.tolerance_used = static_cast<double>(std::max(m.rows(), m.cols())) *
                            sigma_max * kEps * tol::kRankScale;
  }
  report.rank = static_cast<int>(
      std::count_if(report.singular_values.begin(),
                    report.singular_values.end(),
                    [&](double s) { return s > report.tolerance_used; }));
  return report;
}

void require_square(const Matrix& m, const char* op) {
  if (m.rows() != m.cols()) {
    throw InvalidInput(std::string(op) + ": matrix must be square, got " +
                       std::to_string(m.rows()) + "x" +
                       std::to_string(m.cols()));
  }
}

SpectrumReport spectrum_of_symmetric(const Matrix& sym) {
  SpectrumReport report;
  if (sym.size() == 0) return report;
  Eigen::SelfAdjointEigenSolver<Matrix> es(sym, Eigen::EigenvaluesOnly);
  const Vector& ev = es.eigenvalues();
  report.eigenvalues.assign(ev.data(), ev.data() + ev.size());
  report.min = report.eigenvalues.front();
  report.max = report.eigenvalues.back();
  return report;
}

Matrix checked_symmetric(const Matrix& m, const char* op) {
  require_finite(m, op);
  require_square(m, op);
  const double asym = m.size() ? (m - m.transpose()).cwiseAbs().maxCoeff() : 0.0;
  if (asym > tol::kSym) {
    throw InvalidInput(std::string(op) + ": matrix not symmetric (max |m - m^T| = " +
                       std::to_string(asym) + ")");
  }
  return symmetric_part(m);
}

struct DeterminantSamples {
  std::vector<std::complex<double>> values;
  double hadamard = 0.0;  // max over samples of prod_i ||row_i||_2
};

DeterminantSamples sample_determinants(const Matrix& e, const Matrix& a,
                                       double radius, double phase) {
  const Eigen::Index n = e.rows();
  const Eigen::Index count = n + 1;
  DeterminantSamples out;
  out.values.reserve(static_cast<std::size_t>(count));
  for (Eigen::Index k = 0; k < count; ++k) {
    const double angle =
        2.0 * std::numbers::pi * (static_cast<double>(k) + phase) /
        static_cast<double>(count);
    const std::complex<double> sigma = std::polar(radius, angle);
    const ComplexMatrix pencil =
        sigma * e.cast<std::complex<double>>() - a.cast<std::complex<double>>();
    double bound = 1.0;
    for (Eigen::Index i = 0; i < n; ++i) bound *= pencil.row(i).norm();
    out.hadamard = std::max(out.hadamard, bound);
    out.values.push_back(pencil.fullPivLu().determinant());
  }
  return out;
}

}  // namespace

void require_finite(const Matrix& m, const char* name) {
  if (!m.allFinite()) {
    throw InvalidInput(std::string(name) + ": matrix has non-finite entries");
  }
}

RankReport numerical_rank(const Matrix& m, std::optional<double> tol) {
  require_finite(m, "numerical_rank");
  return rank_from_svd(m, tol);
}

RankReport numerical_rank(const ComplexMatrix& m, std::optional<double> tol) {
  if (!m.allFinite()) {
    throw InvalidInput("numerical_rank: matrix has non-finite entries");
  }
  return rank_from_svd(m, tol);
}

Matrix symmetric_part(const Matrix& m) { return 0.5 * (m + m.transpose()); }

SpectrumReport sym_eigenvalues(const Matrix& m) {
  return spectrum_of_symmetric(checked_symmetric(m, "sym_eigenvalues"));
}

DefiniteVerdict is_negative_definite(const Matrix& m) {
  const SpectrumReport s =
      spectrum_of_symmetric(checked_symmetric(m, "is_negative_definite"));
  if (s.eigenvalues.empty()) return {false, 0.0};
  return {s.max < -tol::kDef, -s.max};
}

DefiniteVerdict is_positive_semidefinite(const Matrix& m) {
  const SpectrumReport s =
      spectrum_of_symmetric(checked_symmetric(m, "is_positive_semidefinite"));
  if (s.eigenvalues.empty()) return {true, 0.0};
  return {s.min >= -tol::kPsd, s.min};
}

PencilDegree pencil_determinant_degree(const Matrix& e, const Matrix& a) {
  require_finite(e, "pencil_determinant_degree(E)");
  require_finite(a, "pencil_determinant_degree(A)");
  require_square(e, "pencil_determinant_degree");
  if (a.rows() != e.rows() || a.cols() != e.cols()) {
    throw InvalidInput("pencil_determinant_degree: E and A differ in size");
  }
  const Eigen::Index n = e.rows();
  PencilDegree result;
  if (n == 0) {
    result.regular = true;
    result.coefficients = {1.0};
    return result;
  }

  const double norm_e = inf_norm(e);
  const double norm_a = inf_norm(a);
  const double radius = 1.0 + (norm_e > 0.0 ? norm_a / norm_e : norm_a);
  const auto count = static_cast<std::size_t>(n + 1);

  // Two attempts: the second rotates and stretches the sample circle in case
  // the first one happened to hit generalized eigenvalues.
  const std::pair<double, double> attempts[] = {{radius, 0.0},
                                                {1.7 * radius, 0.5}};
  for (const auto& [r, phase] : attempts) {
    const DeterminantSamples samples = sample_determinants(e, a, r, phase);
    if (samples.hadamard == 0.0) continue;

    // Coefficients of q(tau) = det(r tau E - A) by inverse DFT over the
    // rotated roots of unity; q_j = c_j r^j.
    std::vector<double> scaled(count, 0.0);
    for (std::size_t j = 0; j < count; ++j) {
      std::complex<double> acc = 0.0;
      for (std::size_t k = 0; k < count; ++k) {
        const double angle = -2.0 * std::numbers::pi * static_cast<double>(j) *
                             (static_cast<double>(k) + phase) /
                             static_cast<double>(count);
        acc += samples.values[k] * std::polar(1.0, angle);
      }
      scaled[j] = acc.real() / static_cast<double>(count);
    }
    double largest = 0.0;
    for (double c : scaled) largest = std::max(largest, std::abs(c));
    if (largest <= tol::kPoly * samples.hadamard) continue;

    result.regular = true;
    result.degree = 0;
    for (std::size_t j = 0; j < count; ++j) {
      if (std::abs(scaled[j]) > tol::kPoly * largest) {
        result.degree = static_cast<int>(j);
      }
    }
    result.coefficients.resize(count);
    for (std::size_t j = 0; j < count; ++j) {
      const double c = std::abs(scaled[j]) > tol::kPoly * largest ? scaled[j] : 0.0;
      result.coefficients[j] = c / std::pow(r, static_cast<double>(j));
    }
    return result;
  }
  result.regular = false;
  result.degree = 0;
  result.coefficients.assign(count, 0.0);
  return result;
}

PencilEigenvalues generalized_eigenvalues(const Matrix& e, const Matrix& a) {
  require_finite(e, "generalized_eigenvalues(E)");
  require_finite(a, "generalized_eigenvalues(A)");
  require_square(e, "generalized_eigenvalues");
  if (a.rows() != e.rows() || a.cols() != e.cols()) {
    throw InvalidInput("generalized_eigenvalues: E and A differ in size");
  }
  PencilEigenvalues out;
  if (e.rows() == 0) return out;
  // A v = sigma E v  <=>  det(sigma E - A) = 0
  Eigen::GeneralizedEigenSolver<Matrix> ges(a, e, false);
  if (ges.info() != Eigen::Success) {
    throw AnalysisUndefined("generalized_eigenvalues: QZ iteration failed");
  }
  const double beta_floor = static_cast<double>(e.rows()) * kEps *
                            tol::kRankScale * std::max(e.norm(), 1e-300);
  const auto alphas = ges.alphas();
  const auto betas = ges.betas();
  for (Eigen::Index i = 0; i < betas.size(); ++i) {
    if (std::abs(betas(i)) <= beta_floor) {
      ++out.infinite;
    } else {
      out.finite.push_back(alphas(i) / betas(i));
    }
  }
  return out;
}

Matrix kron(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    }
  }
  return out;
}

double inf_norm(const Matrix& m) {
  if (m.size() == 0) return 0.0;
  return m.cwiseAbs().rowwise().sum().maxCoeff();
}

}  // namespace lbcon
