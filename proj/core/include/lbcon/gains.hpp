#pragma once

// Certificate verification for the two-step protocol design: the matrix
// inequality conditions for switching-connected and jointly-connected
// topologies, the energy-budget inequality and the gain formulas
//   K_u = -B_o^T R_z^-1 / 2,   K_z = -R_x^-T C_o^T / (2 lambda_min).

#include <optional>
#include <string>
#include <vector>

#include "lbcon/decomposition.hpp"
#include "lbcon/topology.hpp"

namespace lbcon {

enum class Theorem { two, three };

// R_x / R_z play the role of R-hat_x / R-hat_z when theorem == three.
struct DesignCertificate {
  Matrix R_x;  // h x h
  Matrix R_z;  // h x h
  Matrix M;    // k x k, symmetric positive definite
  double J_e_star = 0.0;
  SpectralBounds bounds;
  Theorem theorem = Theorem::two;
};

struct ProtocolGains {
  Matrix K_u;  // k x h
  Matrix K_z;  // h x l
  double lambda_min_used = 0.0;
};

// margin is signed slack to the decision threshold: pass <=> margin >= 0 for
// non-strict conditions and margin > 0 for strict ones.
struct ConditionResult {
  std::string id;
  bool pass = false;
  double margin = 0.0;
  std::string description;
};

struct ConditionReport {
  std::vector<ConditionResult> conditions;

  bool overall() const;
  const ConditionResult* find(const std::string& id) const;
  const ConditionResult* first_failure() const;
};

struct ThetaBlock {
  Matrix theta;  // (2h + k) square, symmetric
  double lambda = 0.0;
};

// Throws InvalidInput / InvalidCertificate for shape or certificate problems.
void validate_certificate(const ObservableDecomposition& dec,
                          const DesignCertificate& cert);

//        [ A R_z + R_z^T A^T - B B^T   -lambda/2 R_x^-T C^T C     B M / 2 ]
// Theta= [ *                            R_x^T A + A^T R_x - C^T C  0       ]
//        [ *                            *                          -M      ]
ThetaBlock assemble_theta(const ObservableDecomposition& dec,
                          const DesignCertificate& cert, double lambda);

struct BudgetCheck {
  bool pass = false;
  double margin = 0.0;
  // s = y0^T ((I_N - 11^T/N) kron I_l) y0
  double disagreement_energy = 0.0;
};

// s E_o^T R_x <= J_e* C_o^T C_o, via the min eigenvalue of the difference.
BudgetCheck budget_check(const ObservableDecomposition& dec,
                         const DesignCertificate& cert, const Vector& y0);

// Condition ids: I, II.a, II.b, II.c (budget), III.a, III.b.min, III.b.max.
ConditionReport verify_theorem2(const ObservableDecomposition& dec,
                                const DesignCertificate& cert,
                                const Vector& y0);

// verify_theorem2 ids plus II.d (R_x^T A + A^T R_x <= 0), III.c
// (A R_z + R_z^T A^T <= 0), detectable and stabilizable.
ConditionReport verify_theorem3(const ObservableDecomposition& dec,
                                const DesignCertificate& cert,
                                const Vector& y0);

// Dispatches on cert.theorem.
ConditionReport verify_certificate(const ObservableDecomposition& dec,
                                   const DesignCertificate& cert,
                                   const Vector& y0);

ProtocolGains compute_gains(const ObservableDecomposition& dec,
                            const DesignCertificate& cert);

// Largest lambda in [lambda_min, ceiling] with Theta(lambda) < 0, found by
// bisection (the feasible set is an interval since Theta is affine in lambda).
struct ThetaRange {
  bool feasible_at_min = false;
  double lambda_lo = 0.0;
  double lambda_hi = 0.0;
};
ThetaRange theta_feasible_range(const ObservableDecomposition& dec,
                                const DesignCertificate& cert, double ceiling);

// Least-squares fit K_z ~ c * (-R_x^-T C_o^T). inferred_lambda_min = 0.5 / c.
struct KzConsistency {
  double scale = 0.0;
  double relative_residual = 0.0;  // ||K_z - c D||_F / ||K_z||_F
  double inferred_lambda_min = 0.0;
};
KzConsistency kz_consistency(const Matrix& k_z, const Matrix& r_x,
                             const Matrix& c_o);

}  // namespace lbcon
