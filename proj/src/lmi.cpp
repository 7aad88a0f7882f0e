#include "trackcert/lmi.hpp"

#include <algorithm>
#include <cmath>

#include "trackcert/certify.hpp"
#include "trackcert/error.hpp"

namespace trackcert {

int num_lambdas(const AnalysisKind& kind) {
  switch (kind.tag()) {
    case AnalysisTag::ExactOgd: return 2;
    case AnalysisTag::InexactOgdAbs:
    case AnalysisTag::InexactOgdRel: return 3;
    case AnalysisTag::ViOgd: return 4;
    case AnalysisTag::StochOgdIid: return 6;
    case AnalysisTag::FiniteSum: return 3;
    case AnalysisTag::IpOgd: return 5;
    case AnalysisTag::BiasedSgd: return 3;
  }
  return 0;
}

int lmi_dim(const AnalysisKind& kind) {
  switch (kind.tag()) {
    case AnalysisTag::ExactOgd:
    case AnalysisTag::FiniteSum:
    case AnalysisTag::BiasedSgd: return 3;
    case AnalysisTag::InexactOgdAbs:
    case AnalysisTag::InexactOgdRel:
    case AnalysisTag::ViOgd:
    case AnalysisTag::StochOgdIid: return 4;
    case AnalysisTag::IpOgd: return 6;
  }
  return 0;
}

bool lambda_sign_free(const AnalysisKind& kind, int j) {
  return kind.tag() == AnalysisTag::StochOgdIid && j >= 3;
}

std::vector<double> supply_levels(const AnalysisKind& kind, const StepParams& p) {
  const double s2 = p.sigma * p.sigma;
  const double c2 = p.c * p.c;
  switch (kind.tag()) {
    case AnalysisTag::ExactOgd: return {0.0, s2};
    case AnalysisTag::InexactOgdAbs: return {0.0, s2, c2};
    case AnalysisTag::InexactOgdRel: return {0.0, s2, 0.0};
    case AnalysisTag::ViOgd: return {0.0, s2, c2, 0.0};
    case AnalysisTag::StochOgdIid: return {0.0, s2, c2, 0.0, 0.0, 0.0};
    case AnalysisTag::FiniteSum: return {0.0, s2, 2.0 * p.G * p.G};
    case AnalysisTag::IpOgd: return {0.0, s2, c2, 4.0 * p.Lg * p.Lg, 0.0};
    case AnalysisTag::BiasedSgd: return {0.0, c2, 2.0 * p.G * p.G};
  }
  return {};
}

SymMat build(const AnalysisKind& kind, const StepParams& p, const MultiplierCertificate& cert) {
  if (!(cert.kind == kind)) throw Error(ErrorCode::BadConfig, "certificate belongs to another analysis");
  const int J = num_lambdas(kind);
  if (static_cast<int>(cert.lambdas.size()) != J) {
    throw Error(ErrorCode::BadConfig, "expected " + std::to_string(J) + " multipliers");
  }
  for (int j = 0; j < J; ++j) {
    if (!lambda_sign_free(kind, j) && cert.lambdas[j] < 0.0) {
      throw Error(ErrorCode::SignViolation, "lambda_" + std::to_string(j + 1) + " < 0");
    }
  }
  if (cert.rho2 < 0.0) throw Error(ErrorCode::SignViolation, "rho^2 < 0");

  const auto& l = cert.lambdas;
  const double a = p.alpha;
  const double a2 = a * a;
  const double m = p.m;
  const double L = p.L;
  const double r2 = cert.rho2;

  switch (kind.tag()) {
    case AnalysisTag::ExactOgd: {
      // (xi, grad f - grad f*, drift)
      SymMat M{{1.0 - r2, -a, 1.0}, {-a, a2, -a}, {1.0, -a, 1.0 - l[1]}};
      M.add(0, 0, -2.0 * L * m * l[0]);
      M.add(0, 1, (L + m) * l[0]);
      M.add(1, 1, -2.0 * l[0]);
      return M;
    }
    case AnalysisTag::InexactOgdAbs:
    case AnalysisTag::InexactOgdRel: {
      // (xi, grad, drift, gradient error)
      SymMat M{{1.0 - r2 - 2.0 * l[0] * L * m, -a + l[0] * (L + m), 1.0, -a},
               {-a + l[0] * (L + m), a2 - 2.0 * l[0], -a, a2},
               {1.0, -a, 1.0 - l[1], -a},
               {-a, a2, -a, a2 - l[2]}};
      if (kind.tag() == AnalysisTag::InexactOgdRel) M.add(1, 1, p.delta * p.delta * l[2]);
      return M;
    }
    case AnalysisTag::ViOgd: {
      // (xi, F(x) - F(x*), drift, error)
      return SymMat{{1.0 - r2 + l[3] * L * L - 2.0 * l[0] * m, l[0] - a, 1.0, -a},
                    {l[0] - a, a2 - l[3] + p.delta * p.delta * l[2], -a, a2},
                    {1.0, -a, 1.0 - l[1], -a},
                    {-a, a2, -a, a2 - l[2]}};
    }
    case AnalysisTag::StochOgdIid: {
      // (xi, grad, drift, noise); lambda_4..6 multiply the zero-correlation equalities.
      return SymMat{{1.0 - r2 - 2.0 * L * m * l[0], -a + l[0] * (L + m), 1.0, -a - l[3]},
                    {-a + l[0] * (L + m), a2 - 2.0 * l[0], -a, a2 - l[4]},
                    {1.0, -a, 1.0 - l[1], -a - l[5]},
                    {-a - l[3], a2 - l[4], -a - l[5], a2 - l[2]}};
    }
    case AnalysisTag::FiniteSum: {
      // (xi, sampled component gradient, drift)
      const SymMat X = x_tilde(kind.fn_class_or_throw(), m, L);
      SymMat M{{1.0 - r2, -a, 1.0}, {-a, a2, -a}, {1.0, -a, 1.0 - l[1]}};
      M.add(0, 0, -2.0 * m * l[0] + l[2] * X(0, 0));
      M.add(0, 1, l[0] + l[2] * X(0, 1));
      M.add(1, 1, l[2] * X(1, 1));
      return M;
    }
    case AnalysisTag::IpOgd: {
      // (xi, grad, r - r*_{t+1}, r*_{t+1} - r*_t, error, drift)
      const double l5 = l[4];
      SymMat M(6);
      M.set(0, 0, 1.0 - r2 - 2.0 * l[0] * L * m);
      M.set(0, 1, l[0] * (L + m) - a);
      M.set(1, 1, a2 - 2.0 * l[0]);
      const double S[2][4] = {{l5 - a, -a, -a, 1.0}, {a2 - a * l5, a2, a2, -a}};
      for (int i = 0; i < 2; ++i) {
        for (int j = 0; j < 4; ++j) M.set(i, 2 + j, S[i][j]);
      }
      const double R[4][4] = {{a2 - 2.0 * a * l5, a2 - a * l5, a2 - a * l5, l5 - a},
                              {a2 - a * l5, a2 - l[3], a2, -a},
                              {a2 - a * l5, a2, a2 - l[2], -a},
                              {l5 - a, -a, -a, 1.0 - l[1]}};
      for (int i = 0; i < 4; ++i) {
        for (int j = i; j < 4; ++j) M.set(2 + i, 2 + j, R[i][j]);
      }
      return M;
    }
    case AnalysisTag::BiasedSgd: {
      // (xi, gradient, error); lambdas: monotonicity, error, gradient growth.
      return SymMat{{1.0 - r2 + 2.0 * l[2] * L * L - 2.0 * l[0] * m, l[0] - a, -a},
                    {l[0] - a, a2 - l[2] + p.delta * p.delta * l[1], a2},
                    {-a, a2, a2 - l[1]}};
    }
  }
  throw Error(ErrorCode::Unsupported, "unknown analysis");
}

double objective(const AnalysisKind& kind, const StepParams& p, const MultiplierCertificate& cert, double U) {
  const auto lv = supply_levels(kind, p);
  double v = cert.rho2 * U;
  for (std::size_t j = 0; j < lv.size() && j < cert.lambdas.size(); ++j) v += cert.lambdas[j] * lv[j];
  return v;
}

double lmi_data_scale(const AnalysisKind& kind, const StepParams& p) {
  const MultiplierCertificate zero{kind, 0.0, std::vector<double>(num_lambdas(kind), 0.0)};
  return std::max(1.0, build(kind, p, zero).frobenius());
}

bool feasible(const AnalysisKind& kind, const StepParams& p, const MultiplierCertificate& cert) {
  const SymMat M = build(kind, p, cert);
  return is_nsd(M, std::max(1.0, M.frobenius()));
}

namespace {

constexpr double kAuxMin = 1e-12;
constexpr double kAuxMax = 1e12;

// Clamp an auxiliary scalar; 0/0 maps to the lower end.
double aux(double x) {
  if (std::isnan(x)) return kAuxMin;
  return std::clamp(x, kAuxMin, kAuxMax);
}

double gap(double m, double L) { return std::max(L - m, 1e-12 * L); }

}  // namespace

MultiplierCertificate certificate(const AnalysisKind& kind, const StepParams& p, double U) {
  if (auto v = check_step(kind, p)) throw Error(ErrorCode::ValidateFailed, *v);
  if (!(U >= 0.0) || !std::isfinite(U)) throw Error(ErrorCode::NonFinite, "U must be finite and >= 0");
  if (U == 0.0 && p.sigma > 0.0 && kind.tag() != AnalysisTag::BiasedSgd) {
    throw Error(ErrorCode::DegenerateState, "U = 0 with sigma > 0: optimal nu diverges");
  }

  MultiplierCertificate cert;
  cert.kind = kind;
  const double a = p.alpha;
  const double a2 = a * a;
  const double m = p.m;
  const double L = p.L;
  const double rU = std::sqrt(U);

  switch (kind.tag()) {
    case AnalysisTag::ExactOgd:
    case AnalysisTag::StochOgdIid: {
      const double mu_ = mu(m, L, a);
      const double nu = aux(p.sigma / (mu_ * rU));
      cert.rho2 = mu_ * mu_ * (1.0 + nu);
      cert.lambdas = {mu_ * a * (1.0 + nu) / gap(m, L), 1.0 + 1.0 / nu};
      if (kind.tag() == AnalysisTag::StochOgdIid) {
        cert.lambdas.insert(cert.lambdas.end(), {a2, -a, a2, -a});
      }
      return cert;
    }
    case AnalysisTag::InexactOgdAbs: {
      const double mu_ = mu(m, L, a);
      const double zeta = aux(a * p.c / (mu_ * rU));
      const double nu = aux(p.sigma / (mu_ * rU + a * p.c));
      const double psi = (1.0 + zeta) * (1.0 + nu);
      const double tau = a * std::abs(a * (L + m) - 2.0) / gap(m, L);
      cert.rho2 = psi * mu_ * mu_;
      cert.lambdas = {0.5 * (a2 + tau) * psi, 1.0 + 1.0 / nu, a2 * (1.0 + nu) * (1.0 + 1.0 / zeta)};
      return cert;
    }
    case AnalysisTag::InexactOgdRel: {
      const double rho = rho_hat_rel(m, L, a, p.delta);
      const auto [am, ap] = rel_breakpoints(m, L, p.delta);
      const double d2 = p.delta * p.delta;
      double zeta;
      if (a <= am) {
        zeta = a * p.delta * m / (1.0 - m * a);
      } else if (a >= ap) {
        zeta = a * p.delta * L / (a * L - 1.0);
      } else {
        zeta = d2 * a * (L + m) / (2.0 - a * (L + m));
      }
      zeta = aux(zeta);
      const double nu = aux(p.sigma / (rho * rU));
      const double psi = (1.0 + zeta) * (1.0 + nu);
      const double chi = a * (1.0 + d2 / zeta);
      const double tau = a * psi * std::abs(chi * (L + m) - 2.0) / gap(m, L);
      cert.rho2 = (1.0 + nu) * rho * rho;
      cert.lambdas = {0.5 * (tau + a * psi * chi), 1.0 + 1.0 / nu, a2 * (1.0 + nu) * (1.0 + 1.0 / zeta)};
      return cert;
    }
    case AnalysisTag::ViOgd: {
      const double A = (1.0 - 2.0 * a * m + a2 * L * L) * U;
      const double B = a2 * p.delta * p.delta * L * L * U + a2 * p.c * p.c;
      const double zeta = aux(std::sqrt(B / A));
      const double nu = aux(p.sigma / (std::sqrt(A) + std::sqrt(B)));
      const double psi = (1.0 + zeta) * (1.0 + nu);
      const double w = 1.0 + p.delta * p.delta / zeta;
      cert.rho2 = psi * (1.0 - 2.0 * a * m + a2 * L * L * w);
      cert.lambdas = {a * psi, 1.0 + 1.0 / nu, a2 * (1.0 + nu) * (1.0 + 1.0 / zeta), a2 * psi * w};
      return cert;
    }
    case AnalysisTag::FiniteSum: {
      const FnClass cls = kind.fn_class_or_throw();
      const double rho = finite_sum_rho_hat(cls, m, L, a);
      const double x21 = x_tilde(cls, m, L)(1, 0);
      const double nu = aux(p.sigma / std::sqrt(rho * U + 2.0 * a2 * p.G * p.G));
      cert.rho2 = (1.0 + nu) * rho;
      cert.lambdas = {a * (1.0 + nu) * (1.0 - a * x21), 1.0 + 1.0 / nu, a2 * (1.0 + nu)};
      return cert;
    }
    case AnalysisTag::IpOgd: {
      // Cauchy-Schwarz weights over the four error channels; the prox multiplier alpha
      // decouples the r - r*_{t+1} direction.
      const double mu_ = mu(m, L, a);
      double s[4] = {mu_ * rU, p.sigma, a * p.c, 2.0 * a * p.Lg};
      const double S = s[0] + s[1] + s[2] + s[3];
      for (double& v : s) v = S > 0.0 ? std::max(v, kAuxMin * S) : 1.0;
      const double Sp = s[0] + s[1] + s[2] + s[3];
      const double k = Sp / s[0];
      cert.rho2 = k * mu_ * mu_;
      cert.lambdas = {k * a * mu_ / gap(m, L), Sp / s[1], a2 * Sp / s[2], a2 * Sp / s[3], a};
      return cert;
    }
    case AnalysisTag::BiasedSgd: {
      const double d2 = p.delta * p.delta;
      const double G2 = p.G * p.G;
      const double A = (1.0 - 2.0 * a * m + 2.0 * a2 * L * L) * U + 2.0 * a2 * G2;
      const double B = a2 * (p.c * p.c + 2.0 * d2 * G2 + 2.0 * d2 * L * L * U);
      const double zeta = aux(std::sqrt(B / A));
      const double psi = 1.0 + zeta;
      const double w = 1.0 + d2 / zeta;
      cert.rho2 = psi * (1.0 - 2.0 * a * m + 2.0 * a2 * L * L * w);
      cert.lambdas = {a * psi, a2 * (1.0 + 1.0 / zeta), a2 * psi * w};
      return cert;
    }
  }
  throw Error(ErrorCode::Unsupported, "unknown analysis");
}

}  // namespace trackcert
