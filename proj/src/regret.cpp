#include "trackcert/regret.hpp"

#include <cmath>
#include <numeric>

#include "trackcert/certify.hpp"
#include "trackcert/error.hpp"

namespace trackcert {

namespace {

double sum(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0); }

void require_gamma(double gamma) {
  if (!(gamma >= 0.0 && gamma < 1.0)) throw Error(ErrorCode::NoContraction, "gamma must lie in [0, 1)");
}

void require_constant(const ParamTrack& track, bool needs_delta) {
  const bool ok = track.m.is_constant() && track.L.is_constant() && track.alpha.is_constant() &&
                  (!needs_delta || track.delta.is_constant());
  if (!ok) throw Error(ErrorCode::NonConstantSchedule, "the regret bound needs constant m, L and alpha");
}

std::vector<double> series_values(const Series& s, std::size_t T) {
  std::vector<double> v(T);
  for (std::size_t t = 0; t < T; ++t) v[t] = s.at(t);
  return v;
}

}  // namespace

double regret_bound(double U0, double L, double gamma, const std::vector<double>& u) {
  require_gamma(gamma);
  if (!(L > 0.0)) throw Error(ErrorCode::BadModuli, "L must be positive");
  if (!(U0 >= 0.0)) throw Error(ErrorCode::BadConfig, "U0 must be >= 0");
  for (double x : u) {
    if (!(x >= 0.0)) throw Error(ErrorCode::BadConfig, "u_t must be >= 0");
  }
  const double k = L / ((1.0 - gamma) * (1.0 - gamma));
  const double s = sum(u);
  return k * U0 + k * s * s;
}

RegretReport regret_bound_for(const AnalysisKind& kind, const ParamTrack& track) {
  track.check();
  const auto rep = validate(kind, track);
  if (!rep.passed()) {
    const auto f = rep.first_failure();
    throw Error(ErrorCode::ValidateFailed, "step " + std::to_string(f->t) + ": " + f->violation);
  }

  const std::size_t T = track.horizon;
  const StepParams p = track.at(0);
  const double m = p.m;
  const double L = p.L;
  const double a = p.alpha;
  const auto sigma = series_values(track.sigma, T);
  const auto c = series_values(track.c, T);
  const auto G = series_values(track.G, T);

  RegretReport r;
  r.horizon = T;
  r.L = L;
  r.u.resize(T);
  // Split form: L/(1-g)^2 U0 + sum_k w_k L/(1-g)^2 (sum s_k)^2.
  std::vector<std::pair<double, double>> split;

  switch (kind.tag()) {
    case AnalysisTag::ExactOgd:
      require_constant(track, false);
      r.gamma = mu(m, L, a);
      r.u = sigma;
      break;
    case AnalysisTag::InexactOgdAbs:
    case AnalysisTag::StochOgdIid:
      require_constant(track, false);
      r.gamma = mu(m, L, a);
      for (std::size_t t = 0; t < T; ++t) r.u[t] = sigma[t] + a * c[t];
      split = {{2.0, sum(sigma)}, {2.0 * a * a, sum(c)}};
      r.expectation = kind.tag() == AnalysisTag::StochOgdIid;
      break;
    case AnalysisTag::InexactOgdRel:
      require_constant(track, true);
      r.gamma = rho_hat_rel(m, L, a, p.delta);
      r.u = sigma;
      break;
    case AnalysisTag::FiniteSum:
      require_constant(track, false);
      r.gamma = std::sqrt(finite_sum_rho_hat(kind.fn_class_or_throw(), m, L, a));
      for (std::size_t t = 0; t < T; ++t) r.u[t] = std::sqrt(2.0) * a * G[t] + sigma[t];
      split = {{2.0, sum(sigma)}, {4.0 * a * a, sum(G)}};
      r.expectation = true;
      break;
    case AnalysisTag::IpOgd:
      require_constant(track, false);
      r.gamma = mu(m, L, a);
      for (std::size_t t = 0; t < T; ++t) r.u[t] = sigma[t] + a * c[t] + 2.0 * a * track.Lg;
      r.composite = true;
      break;
    case AnalysisTag::ViOgd:
    case AnalysisTag::BiasedSgd:
      throw Error(ErrorCode::Unsupported, "no regret specialization for " + kind.name());
  }

  require_gamma(r.gamma);
  r.bound_unsplit = regret_bound(track.U0, L, r.gamma, r.u);
  const double k = L / ((1.0 - r.gamma) * (1.0 - r.gamma));
  if (!split.empty()) {
    double v = k * track.U0;
    for (const auto& [w, s] : split) v += w * k * s * s;
    r.bound_split = v;
  }
  if (r.composite) {
    // g_t(x) - g_t(x*) <= Lg ||x - x*|| adds a term linear in sqrt(U).
    const double lin = 2.0 * track.Lg / (1.0 - r.gamma);
    r.bound_unsplit += lin * std::sqrt(track.U0) + lin * sum(r.u);
  }
  r.bound = r.bound_split ? std::min(*r.bound_split, r.bound_unsplit) : r.bound_unsplit;
  return r;
}

double empirical_regret(const Trajectory& traj) { return sum(traj.gaps); }

double empirical_regret(const SimSummary& summary) { return sum(summary.gap_mean); }

bool dominated(const RegretReport& report, std::size_t trials) {
  if (!report.empirical) return true;
  const double slack = report.expectation ? 5.0 / std::sqrt(static_cast<double>(std::max<std::size_t>(trials, 1))) : 0.0;
  return *report.empirical <= report.bound * (1.0 + slack);
}

}  // namespace trackcert
