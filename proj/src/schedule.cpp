#include "trackcert/schedule.hpp"

#include <algorithm>
#include <cmath>

#include "trackcert/error.hpp"

namespace trackcert {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::StepsizeOutOfRange: return "StepsizeOutOfRange";
    case ErrorCode::BadModuli: return "BadModuli";
    case ErrorCode::DeltaOutOfRange: return "DeltaOutOfRange";
    case ErrorCode::NonFinite: return "NonFinite";
    case ErrorCode::SingularPivot: return "SingularPivot";
    case ErrorCode::SignViolation: return "SignViolation";
    case ErrorCode::DegenerateState: return "DegenerateState";
    case ErrorCode::NoContraction: return "NoContraction";
    case ErrorCode::DegenerateFixedPoint: return "DegenerateFixedPoint";
    case ErrorCode::Infeasible: return "Infeasible";
    case ErrorCode::ValidateFailed: return "ValidateFailed";
    case ErrorCode::HorizonMismatch: return "HorizonMismatch";
    case ErrorCode::ProxUnavailable: return "ProxUnavailable";
    case ErrorCode::NonConstantSchedule: return "NonConstantSchedule";
    case ErrorCode::Unsupported: return "Unsupported";
    case ErrorCode::BadConfig: return "BadConfig";
  }
  return "Unknown";
}

AnalysisKind AnalysisKind::finite_sum(FnClass cls) {
  AnalysisKind k(AnalysisTag::FiniteSum);
  k.fn_class_ = cls;
  return k;
}

FnClass AnalysisKind::fn_class_or_throw() const {
  if (!fn_class_) throw Error(ErrorCode::BadConfig, "finite-sum analysis requires a function class");
  return *fn_class_;
}

std::string AnalysisKind::name() const {
  if (tag_ == AnalysisTag::FiniteSum && fn_class_) return "FiniteSum(" + to_string(*fn_class_) + ")";
  return to_string(tag_);
}

std::string to_string(AnalysisTag tag) {
  switch (tag) {
    case AnalysisTag::ExactOgd: return "ExactOgd";
    case AnalysisTag::InexactOgdAbs: return "InexactOgdAbs";
    case AnalysisTag::InexactOgdRel: return "InexactOgdRel";
    case AnalysisTag::ViOgd: return "ViOgd";
    case AnalysisTag::StochOgdIid: return "StochOgdIid";
    case AnalysisTag::FiniteSum: return "FiniteSum";
    case AnalysisTag::IpOgd: return "IpOgd";
    case AnalysisTag::BiasedSgd: return "BiasedSgd";
  }
  return "Unknown";
}

std::string to_string(FnClass cls) {
  switch (cls) {
    case FnClass::Smooth: return "Smooth";
    case FnClass::SmoothConvex: return "SmoothConvex";
    case FnClass::StronglyConvexSmooth: return "StronglyConvexSmooth";
  }
  return "Unknown";
}

AnalysisTag parse_analysis_tag(std::string_view s) {
  for (auto tag : {AnalysisTag::ExactOgd, AnalysisTag::InexactOgdAbs, AnalysisTag::InexactOgdRel,
                   AnalysisTag::ViOgd, AnalysisTag::StochOgdIid, AnalysisTag::FiniteSum, AnalysisTag::IpOgd,
                   AnalysisTag::BiasedSgd}) {
    if (to_string(tag) == s) return tag;
  }
  throw Error(ErrorCode::BadConfig, "unknown analysis '" + std::string(s) + "'");
}

FnClass parse_fn_class(std::string_view s) {
  for (auto cls : {FnClass::Smooth, FnClass::SmoothConvex, FnClass::StronglyConvexSmooth}) {
    if (to_string(cls) == s) return cls;
  }
  throw Error(ErrorCode::BadConfig, "unknown function class '" + std::string(s) + "'");
}

std::vector<AnalysisKind> all_analyses(FnClass finite_sum_class) {
  return {AnalysisTag::ExactOgd,    AnalysisTag::InexactOgdAbs,
          AnalysisTag::InexactOgdRel, AnalysisTag::ViOgd,
          AnalysisTag::StochOgdIid, AnalysisKind::finite_sum(finite_sum_class),
          AnalysisTag::IpOgd,       AnalysisTag::BiasedSgd};
}

bool Series::is_constant() const {
  return std::all_of(values_.begin(), values_.end(), [&](double v) { return v == values_.front(); });
}

StepParams ParamTrack::at(std::size_t t) const {
  return StepParams{m.at(t), L.at(t), alpha.at(t), sigma.at(t), c.at(t), delta.at(t), G.at(t), Lg};
}

bool ParamTrack::is_constant() const {
  return m.is_constant() && L.is_constant() && alpha.is_constant() && sigma.is_constant() && c.is_constant() &&
         delta.is_constant() && G.is_constant();
}

void ParamTrack::check() const {
  struct Named {
    const char* name;
    const Series* s;
  };
  const Named all[] = {{"m", &m},         {"L", &L},         {"alpha", &alpha}, {"sigma", &sigma},
                       {"c", &c},         {"delta", &delta}, {"G", &G}};
  for (const auto& [name, s] : all) {
    if (s->stored() != 1 && s->stored() != horizon) {
      throw Error(ErrorCode::BadConfig, std::string(name) + " has " + std::to_string(s->stored()) +
                                            " entries, expected 1 or " + std::to_string(horizon));
    }
    for (double v : s->values()) {
      if (!std::isfinite(v)) throw Error(ErrorCode::BadConfig, std::string(name) + " is not finite");
      if (v < 0.0) throw Error(ErrorCode::BadConfig, std::string(name) + " is negative");
    }
  }
  if (!std::isfinite(Lg) || Lg < 0.0) throw Error(ErrorCode::BadConfig, "Lg must be finite and >= 0");
  if (!std::isfinite(U0) || U0 < 0.0) throw Error(ErrorCode::BadConfig, "U0 must be finite and >= 0");
  const std::size_t n = std::max<std::size_t>(horizon, 1);
  for (std::size_t t = 0; t < n; ++t) {
    if (!(m.at(t) > 0.0) || m.at(t) > L.at(t)) {
      throw Error(ErrorCode::BadModuli, "need 0 < m <= L at t=" + std::to_string(t));
    }
  }
}

double mu(double m, double L, double alpha) {
  if (!(m > 0.0) || m > L) throw Error(ErrorCode::BadModuli, "need 0 < m <= L");
  if (!(alpha > 0.0) || alpha > 2.0 / L) throw Error(ErrorCode::StepsizeOutOfRange, "need 0 < alpha <= 2/L");
  if (alpha <= 2.0 / (m + L)) return 1.0 - m * alpha;
  return alpha * L - 1.0;
}

double finite_sum_alpha_bar(FnClass cls, double m, double L) {
  if (!(m > 0.0) || m > L) throw Error(ErrorCode::BadModuli, "need 0 < m <= L");
  switch (cls) {
    case FnClass::Smooth: return m / (L * L);
    case FnClass::SmoothConvex: return 1.0 / L;
    case FnClass::StronglyConvexSmooth: return 1.0 / (L + m);
  }
  return 0.0;
}

std::optional<std::string> check_step(const AnalysisKind& kind, const StepParams& p) {
  for (double v : {p.m, p.L, p.alpha, p.sigma, p.c, p.delta, p.G, p.Lg}) {
    if (!std::isfinite(v)) return "non-finite parameter";
  }
  if (!(p.m > 0.0)) return "m <= 0";
  if (p.m > p.L) return "m > L";
  if (!(p.alpha > 0.0)) return "alpha <= 0";
  if (p.sigma < 0.0) return "sigma < 0";
  if (p.c < 0.0) return "c < 0";
  if (p.delta < 0.0) return "delta < 0";
  if (p.G < 0.0) return "G < 0";
  if (p.Lg < 0.0) return "Lg < 0";

  switch (kind.tag()) {
    case AnalysisTag::ExactOgd:
    case AnalysisTag::InexactOgdAbs:
    case AnalysisTag::StochOgdIid:
    case AnalysisTag::IpOgd:
      if (p.alpha > 2.0 / p.L) return "alpha > 2/L";
      break;
    case AnalysisTag::InexactOgdRel:
      if (p.delta >= 2.0 * p.m / (p.L + p.m)) return "delta >= 2m/(L+m)";
      if (p.alpha > 2.0 / ((1.0 + p.delta) * p.L)) return "alpha > 2/((1+delta)L)";
      break;
    case AnalysisTag::ViOgd:
      if (p.delta > p.m / p.L) return "delta > m/L";
      if (p.alpha > 2.0 * (p.m - p.delta * p.L) / (p.L * p.L * (1.0 - p.delta * p.delta))) {
        return "alpha > 2(m-delta L)/(L^2(1-delta^2))";
      }
      break;
    case AnalysisTag::FiniteSum:
      if (!kind.fn_class()) return "missing function class";
      if (p.alpha > finite_sum_alpha_bar(*kind.fn_class(), p.m, p.L)) return "alpha > alpha_bar";
      break;
    case AnalysisTag::BiasedSgd:
      break;
  }
  return std::nullopt;
}

bool ValidityReport::passed() const {
  return std::all_of(steps.begin(), steps.end(), [](const StepValidity& s) { return s.ok; });
}

std::optional<StepValidity> ValidityReport::first_failure() const {
  for (const auto& s : steps) {
    if (!s.ok) return s;
  }
  return std::nullopt;
}

ValidityReport validate(const AnalysisKind& kind, const ParamTrack& track) {
  ValidityReport report;
  report.steps.reserve(track.horizon);
  for (std::size_t t = 0; t < track.horizon; ++t) {
    StepValidity s{t, true, {}};
    if (auto v = check_step(kind, track.at(t))) {
      s.ok = false;
      s.violation = *v;
    }
    report.steps.push_back(std::move(s));
  }
  return report;
}

}  // namespace trackcert
