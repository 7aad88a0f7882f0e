#include "trackcert/certify.hpp"

#include <cmath>
#include <limits>

#include "trackcert/error.hpp"

namespace trackcert {

namespace {

// Step arithmetic runs in extended precision and rounds once, so long static
// traces stay within a few ulps of the exact geometric sequence.
using Real = long double;

Real root(double U) { return std::sqrt(static_cast<Real>(std::max(U, 0.0))); }

void require_moduli(double m, double L) {
  if (!(m > 0.0) || !(m <= L) || !std::isfinite(L)) throw Error(ErrorCode::BadModuli, "need 0 < m <= L");
}

void require_nonneg(std::initializer_list<double> vs) {
  for (double v : vs) {
    if (!std::isfinite(v)) throw Error(ErrorCode::NonFinite, "non-finite step input");
    if (v < 0.0) throw Error(ErrorCode::BadConfig, "negative perturbation level");
  }
}

double vi_a(double m, double L, double alpha) { return 1.0 - 2.0 * m * alpha + alpha * alpha * L * L; }

double biased_a(double m, double L, double alpha) {
  return 1.0 - 2.0 * alpha * m + 2.0 * alpha * alpha * L * L;
}

}  // namespace

double step_exact_ogd(double U, double m, double L, double alpha, double sigma) {
  require_nonneg({U, sigma});
  const Real s = mu(m, L, alpha) * root(U) + sigma;
  return static_cast<double>(s * s);
}

double step_inexact_abs(double U, double m, double L, double alpha, double sigma, double c) {
  require_nonneg({U, sigma, c});
  const Real s = mu(m, L, alpha) * root(U) + sigma + static_cast<Real>(alpha) * c;
  return static_cast<double>(s * s);
}

RelBreakpoints rel_breakpoints(double m, double L, double delta) {
  require_moduli(m, L);
  const double a0 = 2.0 / (L + m);
  return {(a0 - delta / m) / (1.0 - delta), (a0 + delta / L) / (1.0 + delta)};
}

double rho_hat_rel(double m, double L, double alpha, double delta) {
  require_moduli(m, L);
  if (!(delta >= 0.0) || delta >= 2.0 * m / (L + m)) {
    throw Error(ErrorCode::DeltaOutOfRange, "need 0 <= delta < 2m/(L+m)");
  }
  if (!(alpha > 0.0) || alpha > 2.0 / ((1.0 + delta) * L)) {
    throw Error(ErrorCode::StepsizeOutOfRange, "need 0 < alpha <= 2/((1+delta)L)");
  }
  const auto [am, ap] = rel_breakpoints(m, L, delta);
  if (alpha <= am) return 1.0 - alpha * m * (1.0 - delta);
  if (alpha >= ap) return (1.0 + delta) * alpha * L - 1.0;
  const double s = L + m;
  const double v = 1.0 - 2.0 * alpha * L * m / s +
                   alpha * delta * delta * (s - 2.0 * alpha * L * m) / (2.0 - alpha * s);
  return std::sqrt(v);
}

double step_inexact_rel(double U, double m, double L, double alpha, double sigma, double delta) {
  require_nonneg({U, sigma});
  const Real s = rho_hat_rel(m, L, alpha, delta) * root(U) + sigma;
  return static_cast<double>(s * s);
}

double step_vi(double U, double m, double L, double alpha, double sigma, double delta, double c) {
  require_moduli(m, L);
  require_nonneg({U, sigma, c});
  if (!(delta >= 0.0) || delta > m / L) throw Error(ErrorCode::DeltaOutOfRange, "need 0 <= delta <= m/L");
  if (!(alpha > 0.0) || alpha > 2.0 * (m - delta * L) / (L * L * (1.0 - delta * delta))) {
    throw Error(ErrorCode::StepsizeOutOfRange, "need 0 < alpha <= 2(m - delta L)/(L^2 (1 - delta^2))");
  }
  const Real Up = std::max(U, 0.0);
  const Real cc = c;
  const Real dL = static_cast<Real>(delta) * L;
  const Real s = std::sqrt(static_cast<Real>(std::max(vi_a(m, L, alpha), 0.0)) * Up) +
                 alpha * std::sqrt(cc * cc + dL * dL * Up) + sigma;
  return static_cast<double>(s * s);
}

double step_stoch_iid(double U, double m, double L, double alpha, double sigma, double c) {
  require_nonneg({U, sigma, c});
  const Real s = mu(m, L, alpha) * root(U) + sigma;
  const Real ac = static_cast<Real>(alpha) * c;
  return static_cast<double>(s * s + ac * ac);
}

double stoch_fixed_point(double m, double L, double alpha, double sigma, double c) {
  require_nonneg({sigma, c});
  const double mu_ = mu(m, L, alpha);
  if (mu_ >= 1.0) throw Error(ErrorCode::NoContraction, "mu >= 1");
  const double q = 1.0 - mu_ * mu_;
  const double r = (mu_ * sigma + std::sqrt(sigma * sigma + alpha * alpha * c * c * q)) / q;
  return r * r;
}

double stoch_alt_bound(double U0, std::size_t t, double m, double L, double alpha, double sigma, double c) {
  const double us = stoch_fixed_point(m, L, alpha, sigma, c);
  if (us == 0.0) throw Error(ErrorCode::DegenerateFixedPoint, "fixed point is zero");
  const double rate = mu(m, L, alpha) + sigma / std::sqrt(us);
  return std::pow(rate, static_cast<double>(t)) * U0 + us;
}

SymMat x_tilde(FnClass cls, double m, double L) {
  require_moduli(m, L);
  switch (cls) {
    case FnClass::Smooth: return SymMat{{2.0 * L * L, 0.0}, {0.0, -1.0}};
    case FnClass::SmoothConvex: return SymMat{{0.0, L}, {L, -1.0}};
    case FnClass::StronglyConvexSmooth: return SymMat{{-2.0 * L * m, L + m}, {L + m, -1.0}};
  }
  throw Error(ErrorCode::BadConfig, "unknown function class");
}

double finite_sum_rho_hat(FnClass cls, double m, double L, double alpha) {
  const SymMat x = x_tilde(cls, m, L);
  const double m_tilde = x(0, 0) + 2.0 * m * x(1, 0);
  return 1.0 - 2.0 * alpha * m + m_tilde * alpha * alpha;
}

double step_finite_sum(double U, FnClass cls, double m, double L, double alpha, double sigma, double G) {
  require_nonneg({U, sigma, G});
  if (!(alpha > 0.0) || alpha > finite_sum_alpha_bar(cls, m, L)) {
    throw Error(ErrorCode::StepsizeOutOfRange, "need 0 < alpha <= alpha_bar");
  }
  const Real rho = finite_sum_rho_hat(cls, m, L, alpha);
  const Real aG = static_cast<Real>(alpha) * G;
  const Real s = std::sqrt(std::max(rho * U + 2 * aG * aG, Real(0))) + sigma;
  return static_cast<double>(s * s);
}

double step_ipogd(double U, double m, double L, double alpha, double sigma, double c, double Lg) {
  require_nonneg({U, sigma, c, Lg});
  const Real a = alpha;
  const Real s = mu(m, L, alpha) * root(U) + sigma + a * c + 2 * a * Lg;
  return static_cast<double>(s * s);
}

double step_biased_sgd(double U, double m, double L, double alpha, double delta, double c, double G) {
  require_moduli(m, L);
  require_nonneg({U, delta, c, G});
  if (!(alpha > 0.0)) throw Error(ErrorCode::StepsizeOutOfRange, "need alpha > 0");
  const double a = biased_a(m, L, alpha);
  if (a < 0.0) throw Error(ErrorCode::StepsizeOutOfRange, "1 - 2 alpha m + 2 alpha^2 L^2 < 0");
  const Real Up = std::max(U, 0.0);
  const Real cc = c;
  const Real dG = static_cast<Real>(delta) * G;
  const Real dL = static_cast<Real>(delta) * L;
  const Real aG = static_cast<Real>(alpha) * G;
  const Real s = alpha * std::sqrt(cc * cc + 2 * dG * dG + 2 * dL * dL * Up) + std::sqrt(a * Up + 2 * aG * aG);
  return static_cast<double>(s * s);
}

double step(const AnalysisKind& kind, const StepParams& p, double U) {
  if (auto v = check_step(kind, p)) throw Error(ErrorCode::ValidateFailed, *v);
  switch (kind.tag()) {
    case AnalysisTag::ExactOgd: return step_exact_ogd(U, p.m, p.L, p.alpha, p.sigma);
    case AnalysisTag::InexactOgdAbs: return step_inexact_abs(U, p.m, p.L, p.alpha, p.sigma, p.c);
    case AnalysisTag::InexactOgdRel: return step_inexact_rel(U, p.m, p.L, p.alpha, p.sigma, p.delta);
    case AnalysisTag::ViOgd: return step_vi(U, p.m, p.L, p.alpha, p.sigma, p.delta, p.c);
    case AnalysisTag::StochOgdIid: return step_stoch_iid(U, p.m, p.L, p.alpha, p.sigma, p.c);
    case AnalysisTag::FiniteSum:
      return step_finite_sum(U, kind.fn_class_or_throw(), p.m, p.L, p.alpha, p.sigma, p.G);
    case AnalysisTag::IpOgd: return step_ipogd(U, p.m, p.L, p.alpha, p.sigma, p.c, p.Lg);
    case AnalysisTag::BiasedSgd: return step_biased_sgd(U, p.m, p.L, p.alpha, p.delta, p.c, p.G);
  }
  throw Error(ErrorCode::Unsupported, "unknown analysis");
}

double contraction_factor(const AnalysisKind& kind, const StepParams& p) {
  switch (kind.tag()) {
    case AnalysisTag::ExactOgd:
    case AnalysisTag::InexactOgdAbs:
    case AnalysisTag::StochOgdIid:
    case AnalysisTag::IpOgd: return mu(p.m, p.L, p.alpha);
    case AnalysisTag::InexactOgdRel: return rho_hat_rel(p.m, p.L, p.alpha, p.delta);
    case AnalysisTag::ViOgd: return std::sqrt(std::max(vi_a(p.m, p.L, p.alpha), 0.0)) + p.alpha * p.L * p.delta;
    case AnalysisTag::FiniteSum:
      return std::sqrt(std::max(finite_sum_rho_hat(kind.fn_class_or_throw(), p.m, p.L, p.alpha), 0.0));
    case AnalysisTag::BiasedSgd:
      return std::sqrt(biased_a(p.m, p.L, p.alpha)) + std::sqrt(2.0) * p.alpha * p.delta * p.L;
  }
  throw Error(ErrorCode::Unsupported, "unknown analysis");
}

long double static_multiplier(const AnalysisKind& kind, const StepParams& p) {
  switch (kind.tag()) {
    case AnalysisTag::ViOgd: return vi_a(p.m, p.L, p.alpha);
    case AnalysisTag::FiniteSum: return finite_sum_rho_hat(kind.fn_class_or_throw(), p.m, p.L, p.alpha);
    case AnalysisTag::BiasedSgd: return biased_a(p.m, p.L, p.alpha);
    default: {
      const Real f = contraction_factor(kind, p);
      return f * f;
    }
  }
}

std::optional<double> steady_state(const AnalysisKind& kind, const StepParams& p) {
  const double f = contraction_factor(kind, p);
  if (!(f < 1.0)) return std::nullopt;
  const double a = p.alpha;
  switch (kind.tag()) {
    case AnalysisTag::ExactOgd:
    case AnalysisTag::InexactOgdRel: return p.sigma / (1.0 - f);
    case AnalysisTag::InexactOgdAbs:
    case AnalysisTag::ViOgd: return (p.sigma + a * p.c) / (1.0 - f);
    case AnalysisTag::StochOgdIid: return std::sqrt(stoch_fixed_point(p.m, p.L, a, p.sigma, p.c));
    case AnalysisTag::FiniteSum: return (std::sqrt(2.0) * a * p.G + p.sigma) / (1.0 - f);
    case AnalysisTag::IpOgd: return (p.sigma + a * p.c + 2.0 * a * p.Lg) / (1.0 - f);
    case AnalysisTag::BiasedSgd:
      return (a * std::sqrt(p.c * p.c + 2.0 * p.delta * p.delta * p.G * p.G) + std::sqrt(2.0) * a * p.G) /
             (1.0 - f);
  }
  return std::nullopt;
}

namespace {

BoundTrace propagate(const AnalysisKind& kind, const ParamTrack& track, bool strict) {
  track.check();
  BoundTrace out;
  out.kind = kind;
  const auto report = validate(kind, track);
  if (strict && !report.passed()) {
    const auto f = *report.first_failure();
    throw Error(ErrorCode::ValidateFailed, "t=" + std::to_string(f.t) + ": " + f.violation);
  }
  const double nan = std::numeric_limits<double>::quiet_NaN();
  out.U.reserve(track.horizon + 1);
  out.U.push_back(track.U0);
  for (std::size_t t = 0; t < track.horizon; ++t) {
    const bool ok = report.steps[t].ok;
    out.valid.push_back(ok);
    const double prev = out.U.back();
    if (!ok || std::isnan(prev)) {
      out.factor.push_back(nan);
      out.U.push_back(nan);
      continue;
    }
    const StepParams p = track.at(t);
    out.factor.push_back(contraction_factor(kind, p));
    out.U.push_back(step(kind, p, prev));
  }
  if (track.horizon > 0 && track.is_constant() && report.passed()) out.steady_state = steady_state(kind, track.at(0));
  return out;
}

}  // namespace

BoundTrace run(const AnalysisKind& kind, const ParamTrack& track) { return propagate(kind, track, true); }

BoundTrace run_lenient(const AnalysisKind& kind, const ParamTrack& track) { return propagate(kind, track, false); }

}  // namespace trackcert
