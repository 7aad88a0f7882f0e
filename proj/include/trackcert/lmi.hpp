#pragma once

#include <vector>

#include "trackcert/schedule.hpp"
#include "trackcert/smallmat.hpp"

namespace trackcert {

// (rho^2, lambda_1..lambda_J) witnessing one step's dissipation inequality.
struct MultiplierCertificate {
  AnalysisKind kind = AnalysisTag::ExactOgd;
  double rho2 = 0.0;
  std::vector<double> lambdas;
};

// Number of multipliers J for the analysis.
int num_lambdas(const AnalysisKind& kind);
// Side length of the LMI matrix.
int lmi_dim(const AnalysisKind& kind);
// True for multipliers attached to equality constraints (no sign restriction).
bool lambda_sign_free(const AnalysisKind& kind, int j);

// Supply levels Lambda_j paired with lambda_j in the objective.
std::vector<double> supply_levels(const AnalysisKind& kind, const StepParams& p);

// Left-hand side of the step LMI (feasible iff negative semidefinite).
// Throws SignViolation for a negative sign-constrained multiplier and BadConfig for a size mismatch.
SymMat build(const AnalysisKind& kind, const StepParams& p, const MultiplierCertificate& cert);

// rho^2 U + sum_j lambda_j Lambda_j.
double objective(const AnalysisKind& kind, const StepParams& p, const MultiplierCertificate& cert, double U);

// Frobenius norm (at least 1) of the LMI with rho^2 and every multiplier set to zero.
double lmi_data_scale(const AnalysisKind& kind, const StepParams& p);

// NSD test of build(...) at the matrix's own Frobenius scale.
bool feasible(const AnalysisKind& kind, const StepParams& p, const MultiplierCertificate& cert);

// Explicit multipliers attaining the closed-form next bound at state U.
// Auxiliary scalars (nu, zeta, ...) are clamped to [1e-12, 1e12] so that zero
// perturbations still give a finite, feasible point.
// Throws DegenerateState when U = 0 and sigma > 0.
MultiplierCertificate certificate(const AnalysisKind& kind, const StepParams& p, double U);

}  // namespace trackcert
