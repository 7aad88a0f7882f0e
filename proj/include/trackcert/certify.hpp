#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "trackcert/schedule.hpp"
#include "trackcert/smallmat.hpp"

namespace trackcert {

// One-step closed-form bounds U -> U'. Each throws the precondition errors of its analysis.
double step_exact_ogd(double U, double m, double L, double alpha, double sigma);
double step_inexact_abs(double U, double m, double L, double alpha, double sigma, double c);
double step_inexact_rel(double U, double m, double L, double alpha, double sigma, double delta);
double step_vi(double U, double m, double L, double alpha, double sigma, double delta, double c);
double step_stoch_iid(double U, double m, double L, double alpha, double sigma, double c);
double step_finite_sum(double U, FnClass cls, double m, double L, double alpha, double sigma, double G);
double step_ipogd(double U, double m, double L, double alpha, double sigma, double c, double Lg);
double step_biased_sgd(double U, double m, double L, double alpha, double delta, double c, double G);

// Relative-error contraction factor (piecewise in alpha).
double rho_hat_rel(double m, double L, double alpha, double delta);

struct RelBreakpoints {
  double alpha_minus;
  double alpha_plus;
};
RelBreakpoints rel_breakpoints(double m, double L, double delta);

// Fixed point of the IID recursion under constant parameters.
double stoch_fixed_point(double m, double L, double alpha, double sigma, double c);
// (mu + sigma/sqrt(U*))^t U0 + U*.
double stoch_alt_bound(double U0, std::size_t t, double m, double L, double alpha, double sigma, double c);

// Class matrix of the finite-sum component supply rate.
SymMat x_tilde(FnClass cls, double m, double L);
// 1 - 2 alpha m + m~ alpha^2 with m~ = X(1,1) + 2 m X(2,1).
double finite_sum_rho_hat(FnClass cls, double m, double L, double alpha);

// Dispatch on the analysis; the step is validated first (Error(ValidateFailed) on violation).
double step(const AnalysisKind& kind, const StepParams& p, double U);

// Effective per-step contraction of sqrt(U) (mu, rho_hat, ...).
double contraction_factor(const AnalysisKind& kind, const StepParams& p);

// Factor multiplying U per step when every perturbation is zero (the square of
// contraction_factor up to rounding; exact coefficient used by the step).
long double static_multiplier(const AnalysisKind& kind, const StepParams& p);

// Limit of sqrt(U_t) under constant parameters; nullopt when the factor is >= 1.
std::optional<double> steady_state(const AnalysisKind& kind, const StepParams& p);

struct BoundTrace {
  AnalysisKind kind = AnalysisTag::ExactOgd;
  std::vector<double> U;       // U_0..U_T
  std::vector<double> factor;  // factor[t] belongs to the step t -> t+1
  std::optional<double> steady_state;
  std::vector<bool> valid;     // per step
};

// Propagates U_0..U_T. Throws Error(ValidateFailed) when any step fails validation.
BoundTrace run(const AnalysisKind& kind, const ParamTrack& track);

// Like run, but never throws on invalid steps: those steps and everything after carry NaN.
BoundTrace run_lenient(const AnalysisKind& kind, const ParamTrack& track);

}  // namespace trackcert
