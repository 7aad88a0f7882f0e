#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "trackcert/schedule.hpp"
#include "trackcert/simulate.hpp"

namespace trackcert {

struct RegretReport {
  std::size_t horizon = 0;
  double gamma = 0.0;
  double L = 0.0;
  std::vector<double> u;
  double bound_unsplit = 0.0;
  std::optional<double> bound_split;  // absent when the analysis has no split form
  double bound = 0.0;                 // the smaller of the two
  std::optional<double> empirical;
  bool composite = false;    // IP-OGD: bound also covers the regularizer
  bool expectation = false;  // stochastic analyses bound the expected regret
};

// L/(1-gamma)^2 U0 + L/(1-gamma)^2 (sum u)^2. Throws NoContraction if gamma >= 1.
double regret_bound(double U0, double L, double gamma, const std::vector<double>& u);

// Specialized regret bound for a constant-modulus schedule.
// Throws NoContraction, NonConstantSchedule, Unsupported (ViOgd, BiasedSgd) or ValidateFailed.
RegretReport regret_bound_for(const AnalysisKind& kind, const ParamTrack& track);

// Sum of recorded gaps f_t(x_t) - f_t(x*_t) over t = 0..T.
double empirical_regret(const Trajectory& traj);
// Same, from trial-mean gaps.
double empirical_regret(const SimSummary& summary);

// empirical <= bound, with a 5/sqrt(trials) relative slack for stochastic reports.
bool dominated(const RegretReport& report, std::size_t trials);

}  // namespace trackcert
