#pragma once

#include <cstdint>
#include <functional>

#include "trackcert/lmi.hpp"
#include "trackcert/schedule.hpp"

namespace trackcert {

enum class OracleMethod { Reduced, Generic };

struct OracleResult {
  double U_next = 0.0;
  MultiplierCertificate cert;
  OracleMethod method = OracleMethod::Reduced;
  int iterations = 0;                 // objective evaluations
  double feasibility_residual = 0.0;  // max eigenvalue of the final LMI
};

// Auxiliary function of the absolute-error proof after eliminating lambda_1; tau = 0 is the limit.
double h_tau(double m, double L, double alpha, double tau);

// Relative-error objective after eliminating tau (piecewise in zeta).
double h_hat_rel(double m, double L, double alpha, double delta, double zeta, double nu);

// Relative-error objective before eliminating tau.
double h_rel_tau(double m, double L, double alpha, double delta, double zeta, double nu, double tau);

struct ScalarMin {
  double x = 0.0;
  double f = 0.0;
  int evals = 0;
  bool unimodal = true;  // false when the coarse probe forced the dense-grid fallback
};

// Minimizes f over x > 0 by golden-section search in log x, starting from [lo, hi].
// A minimum on the grid edge widens that side by 1e4 (at most three times).
ScalarMin minimize_log_scale(const std::function<double(double)>& f, double lo = 1e-8, double hi = 1e8);

// Nested scalar searches over the proof's auxiliary variables. Unsupported for IpOgd.
OracleResult solve_step_reduced(const AnalysisKind& kind, double U, const StepParams& p);

struct GenericOptions {
  std::uint64_t seed = 0x5eed;
  int starts = 16;
};

// Simplex search over the multipliers with the least feasible rho^2 found per point.
OracleResult solve_step_generic(const AnalysisKind& kind, double U, const StepParams& p,
                                const GenericOptions& opts = {});

// Least rho^2 making the LMI NSD for the certificate's multipliers (bisection on is_nsd).
double least_feasible_rho2(const AnalysisKind& kind, const StepParams& p, const MultiplierCertificate& cert);

}  // namespace trackcert
