#include "trackcert/sdp_oracle.hpp"

#include <gsl/gsl_errno.h>
#include <gsl/gsl_min.h>
#include <gsl/gsl_multimin.h>
#include <gsl/gsl_qrng.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <mutex>
#include <random>
#include <span>

#include <Eigen/Dense>

#include "trackcert/certify.hpp"
#include "trackcert/error.hpp"

namespace trackcert {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void quiet_gsl() {
  static std::once_flag once;
  std::call_once(once, [] { gsl_set_error_handler_off(); });
}

}  // namespace

double h_tau(double m, double L, double alpha, double tau) {
  const double s = alpha * (L + m) - 2.0;
  double v = 1.0 - alpha * (L + m) + alpha * alpha * (m * m + L * L) / 2.0 + tau * (L - m) * (L - m) / 4.0;
  if (s == 0.0) return v;
  if (!(tau > 0.0)) return kInf;
  return v + alpha * alpha * s * s / (4.0 * tau);
}

double h_hat_rel(double m, double L, double alpha, double delta, double zeta, double nu) {
  const double s = alpha * (L + m);
  const double d2 = delta * delta;
  const double scale = (1.0 + zeta) * (1.0 + nu);
  const double zeta_bar = d2 * s / (2.0 - s);
  const bool upper = s >= 2.0 || zeta <= zeta_bar;
  if (upper) {
    const double e = alpha * L - 1.0;
    return scale * (e * e + alpha * alpha * d2 * L * L / zeta);
  }
  const double e = 1.0 - alpha * m;
  return scale * (e * e + alpha * alpha * d2 * m * m / zeta);
}

double h_rel_tau(double m, double L, double alpha, double delta, double zeta, double nu, double tau) {
  const double psi = (1.0 + zeta) * (1.0 + nu);
  const double chi = alpha * (1.0 + delta * delta / zeta);
  const double q = 2.0 - chi * (L + m);
  double v = -psi * (alpha * L * m * chi - 1.0) + tau * (L - m) * (L - m) / 4.0 - alpha * psi * (L + m) * q / 2.0;
  if (q == 0.0) return v;
  if (!(tau > 0.0)) return kInf;
  return v + alpha * alpha * psi * psi * q * q / (4.0 * tau);
}

// ---------------------------------------------------------------------------
// Scalar search

namespace {

struct GslScalar {
  const std::function<double(double)>* f;
  int* evals;
};

double gsl_scalar_trampoline(double s, void* ctx) {
  auto* c = static_cast<GslScalar*>(ctx);
  ++*c->evals;
  return (*c->f)(std::exp(s));
}

bool looks_unimodal(const std::vector<double>& v, std::size_t imin) {
  double mag = 0.0;
  for (double x : v) {
    if (std::isfinite(x)) mag = std::max(mag, std::abs(x));
  }
  const double tol = 1e-12 * std::max(mag, 1e-300);
  for (std::size_t k = 0; k + 1 <= imin; ++k) {
    if (v[k + 1] > v[k] + tol) return false;
  }
  for (std::size_t k = imin; k + 1 < v.size(); ++k) {
    if (v[k + 1] + tol < v[k]) return false;
  }
  return true;
}

}  // namespace

ScalarMin minimize_log_scale(const std::function<double(double)>& f, double lo, double hi) {
  quiet_gsl();
  ScalarMin out;
  double slo = std::log(lo);
  double shi = std::log(hi);
  const double widen = std::log(1e4);

  auto eval = [&](double s) {
    ++out.evals;
    const double v = f(std::exp(s));
    return std::isnan(v) ? kInf : v;
  };
  auto grid = [&](int n, std::vector<double>& xs, std::vector<double>& vs) {
    xs.resize(n);
    vs.resize(n);
    for (int i = 0; i < n; ++i) {
      xs[i] = slo + (shi - slo) * i / (n - 1);
      vs[i] = eval(xs[i]);
    }
    return static_cast<std::size_t>(std::min_element(vs.begin(), vs.end()) - vs.begin());
  };

  std::vector<double> xs, vs;
  std::size_t imin = 0;
  int lo_wide = 0;
  int hi_wide = 0;
  for (;;) {
    imin = grid(33, xs, vs);
    if (imin == 0 && lo_wide < 3) {
      slo -= widen;
      ++lo_wide;
    } else if (imin + 1 == xs.size() && hi_wide < 3) {
      shi += widen;
      ++hi_wide;
    } else {
      break;
    }
  }
  if (!looks_unimodal(vs, imin)) {
    out.unimodal = false;
    imin = grid(2048, xs, vs);
  }
  out.x = std::exp(xs[imin]);
  out.f = vs[imin];
  if (imin == 0 || imin + 1 == xs.size()) return out;

  const double a = xs[imin - 1];
  const double b = xs[imin + 1];
  if (!(vs[imin] < vs[imin - 1] && vs[imin] < vs[imin + 1])) return out;  // flat bracket

  GslScalar ctx{&f, &out.evals};
  gsl_function F{&gsl_scalar_trampoline, &ctx};
  std::unique_ptr<gsl_min_fminimizer, decltype(&gsl_min_fminimizer_free)> s(
      gsl_min_fminimizer_alloc(gsl_min_fminimizer_goldensection), &gsl_min_fminimizer_free);
  if (gsl_min_fminimizer_set_with_values(s.get(), &F, xs[imin], vs[imin], a, vs[imin - 1], b, vs[imin + 1]) !=
      GSL_SUCCESS) {
    return out;
  }
  for (int it = 0; it < 200; ++it) {
    if (gsl_min_fminimizer_iterate(s.get()) != GSL_SUCCESS) break;
    const double xa = gsl_min_fminimizer_x_lower(s.get());
    const double xb = gsl_min_fminimizer_x_upper(s.get());
    if (gsl_min_test_interval(xa, xb, 1e-10, 0.0) == GSL_SUCCESS) break;
  }
  const double fbest = gsl_min_fminimizer_f_minimum(s.get());
  if (fbest <= out.f) {
    out.f = fbest;
    out.x = std::exp(gsl_min_fminimizer_x_minimum(s.get()));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Reduced oracle

namespace {

void require_valid(const AnalysisKind& kind, const StepParams& p, double U) {
  if (auto v = check_step(kind, p)) throw Error(ErrorCode::ValidateFailed, *v);
  if (!(U >= 0.0) || !std::isfinite(U)) throw Error(ErrorCode::NonFinite, "U must be finite and >= 0");
}

OracleResult finish(const AnalysisKind& kind, const StepParams& p, double U, MultiplierCertificate cert,
                    OracleMethod method, int evals) {
  const SymMat M = build(kind, p, cert);
  OracleResult r;
  r.feasibility_residual = max_eig(M);
  if (r.feasibility_residual > nsd_tolerance(std::max(M.frobenius(), lmi_data_scale(kind, p)))) {
    throw Error(ErrorCode::Infeasible, "reconstructed certificate violates the LMI");
  }
  r.U_next = objective(kind, p, cert, U);
  r.cert = std::move(cert);
  r.method = method;
  r.iterations = evals;
  return r;
}

// min over nu of (1+nu) K + (1+1/nu) s2; nu pinned low when there is no drift.
ScalarMin nu_level(double K, double s2) {
  if (s2 == 0.0) return {1e-12, K, 0, true};
  return minimize_log_scale([&](double nu) { return (1.0 + nu) * K + (1.0 + 1.0 / nu) * s2; });
}

}  // namespace

OracleResult solve_step_reduced(const AnalysisKind& kind, double U, const StepParams& p) {
  require_valid(kind, p, U);
  const double m = p.m;
  const double L = p.L;
  const double a = p.alpha;
  const double a2 = a * a;
  const double s2 = p.sigma * p.sigma;
  const double c2 = p.c * p.c;
  MultiplierCertificate cert;
  cert.kind = kind;
  int evals = 0;

  switch (kind.tag()) {
    case AnalysisTag::ExactOgd:
    case AnalysisTag::StochOgdIid: {
      const auto H = minimize_log_scale([&](double t) { return h_tau(m, L, a, t); });
      const auto N = nu_level(H.f * U, s2);
      evals = H.evals + N.evals;
      const double nu = N.x;
      cert.rho2 = (1.0 + nu) * h_tau(m, L, a, H.x);
      cert.lambdas = {0.5 * (a2 + H.x) * (1.0 + nu), 1.0 + 1.0 / nu};
      if (kind.tag() == AnalysisTag::StochOgdIid) cert.lambdas.insert(cert.lambdas.end(), {a2, -a, a2, -a});
      break;
    }
    case AnalysisTag::InexactOgdAbs: {
      const auto H = minimize_log_scale([&](double t) { return h_tau(m, L, a, t); });
      const auto Z = minimize_log_scale(
          [&](double z) { return (1.0 + z) * H.f * U + (1.0 + 1.0 / z) * a2 * c2; });
      const auto N = nu_level(Z.f, s2);
      evals = H.evals + Z.evals + N.evals;
      const double psi = (1.0 + Z.x) * (1.0 + N.x);
      cert.rho2 = psi * h_tau(m, L, a, H.x);
      cert.lambdas = {0.5 * (a2 + H.x) * psi, 1.0 + 1.0 / N.x, a2 * (1.0 + N.x) * (1.0 + 1.0 / Z.x)};
      break;
    }
    case AnalysisTag::InexactOgdRel: {
      const double d = p.delta;
      int inner = 0;
      const auto Z = minimize_log_scale([&](double z) {
        const auto T = minimize_log_scale([&](double t) { return h_rel_tau(m, L, a, d, z, 0.0, t); });
        inner += T.evals;
        return T.f;
      });
      const auto T = minimize_log_scale([&](double t) { return h_rel_tau(m, L, a, d, Z.x, 0.0, t); });
      const auto N = nu_level(Z.f * U, s2);
      evals = inner + Z.evals + T.evals + N.evals;
      const double nu = N.x;
      const double psi = (1.0 + Z.x) * (1.0 + nu);
      const double chi = a * (1.0 + d * d / Z.x);
      const double tau = (1.0 + nu) * T.x;
      cert.rho2 = (1.0 + nu) * h_rel_tau(m, L, a, d, Z.x, 0.0, T.x);
      cert.lambdas = {0.5 * (tau + a * psi * chi), 1.0 + 1.0 / nu, a2 * (1.0 + nu) * (1.0 + 1.0 / Z.x)};
      break;
    }
    case AnalysisTag::ViOgd: {
      const double d2 = p.delta * p.delta;
      auto fbar = [&](double z) { return 1.0 - 2.0 * a * m + a2 * L * L * (1.0 + d2 / z); };
      const auto Z = minimize_log_scale(
          [&](double z) { return (1.0 + z) * fbar(z) * U + a2 * (1.0 + 1.0 / z) * c2; });
      const auto N = nu_level(Z.f, s2);
      evals = Z.evals + N.evals;
      const double psi = (1.0 + Z.x) * (1.0 + N.x);
      cert.rho2 = psi * fbar(Z.x);
      cert.lambdas = {a * psi, 1.0 + 1.0 / N.x, a2 * (1.0 + N.x) * (1.0 + 1.0 / Z.x),
                      a2 * psi * (1.0 + d2 / Z.x)};
      break;
    }
    case AnalysisTag::FiniteSum: {
      const SymMat X = x_tilde(kind.fn_class_or_throw(), m, L);
      const double x11 = X(0, 0);
      const double x21 = X(1, 0);
      const double phi = 1.0 - a * x21;
      const double G2 = p.G * p.G;
      // Everything below is per unit (1 + nu): tau' = tau/(1+nu), lambda' = lambda_1/(1+nu).
      auto hprime = [&](double t, double l) {
        const double r = l - a * phi;
        return (1.0 + a2 * x11) + 2.0 * l * (x21 - m) + t * (x11 + x21 * x21) + r * r / t - 2.0 * a * phi * x21;
      };
      int inner = 0;
      auto best_lambda = [&](double t) {
        const auto Lm = minimize_log_scale([&](double l) { return hprime(t, l) * U + 2.0 * (t + a2) * G2; });
        inner += Lm.evals;
        return Lm;
      };
      const auto T = minimize_log_scale([&](double t) { return best_lambda(t).f; });
      const auto Lm = best_lambda(T.x);
      const auto N = nu_level(T.f, s2);
      evals = inner + T.evals + N.evals;
      const double k = 1.0 + N.x;
      cert.rho2 = k * hprime(T.x, Lm.x);
      cert.lambdas = {k * Lm.x, 1.0 + 1.0 / N.x, k * (T.x + a2)};
      break;
    }
    case AnalysisTag::IpOgd:
      throw Error(ErrorCode::Unsupported, "no reduced form for the proximal analysis");
    case AnalysisTag::BiasedSgd: {
      const double d2 = p.delta * p.delta;
      const double G2 = p.G * p.G;
      auto make = [&](double z) {
        const double psi = 1.0 + z;
        const double w = 1.0 + d2 / z;
        MultiplierCertificate c{kind, psi * (1.0 - 2.0 * a * m + 2.0 * a2 * L * L * w),
                                {a * psi, a2 * (1.0 + 1.0 / z), a2 * psi * w}};
        return c;
      };
      const auto Z = minimize_log_scale([&](double z) {
        const double psi = 1.0 + z;
        const double w = 1.0 + d2 / z;
        return psi * (1.0 - 2.0 * a * m + 2.0 * a2 * L * L * w) * U + a2 * (1.0 + 1.0 / z) * c2 +
               a2 * psi * w * 2.0 * G2;
      });
      evals = Z.evals;
      cert = make(Z.x);
      break;
    }
  }
  return finish(kind, p, U, std::move(cert), OracleMethod::Reduced, evals);
}

// ---------------------------------------------------------------------------
// Generic oracle

namespace {

constexpr double kPenalty = 1e100;

// Cholesky factor of a small SPD matrix in place (lower triangle); false if not positive definite.
bool cholesky(double (&A)[6][6], int k) {
  for (int j = 0; j < k; ++j) {
    double d = A[j][j];
    for (int q = 0; q < j; ++q) d -= A[j][q] * A[j][q];
    if (!(d > 0.0)) return false;
    const double r = std::sqrt(d);
    A[j][j] = r;
    for (int i = j + 1; i < k; ++i) {
      double s = A[i][j];
      for (int q = 0; q < j; ++q) s -= A[i][q] * A[j][q];
      A[i][j] = s / r;
    }
  }
  return true;
}

// Forward substitution L y = b in place.
void forward(const double (&A)[6][6], int k, double* y) {
  for (int i = 0; i < k; ++i) {
    double s = y[i];
    for (int q = 0; q < i; ++q) s -= A[i][q] * y[q];
    y[i] = s / A[i][i];
  }
}

// A sign-constrained multiplier that enters the LMI only through one diagonal
// entry, as coef * lambda with coef < 0. Together with rho^2 it is eliminated
// exactly: the remaining block is Schur-complemented down to a 2x2 matrix.
struct DiagonalElimination {
  int j = -1;
  int row = 0;
  double coef = 0.0;
};

DiagonalElimination find_diagonal_multiplier(const AnalysisKind& kind, const StepParams& p, double U,
                                             const std::vector<double>& levels) {
  DiagonalElimination out;
  if (!(U > 0.0)) return out;
  const int J = num_lambdas(kind);
  MultiplierCertificate c;
  c.kind = kind;
  c.lambdas.assign(J, 0.0);
  const SymMat M0 = build(kind, p, c);
  const int n = M0.dim();
  for (int j = 0; j < J; ++j) {
    if (lambda_sign_free(kind, j) || !(levels[j] > 0.0)) continue;
    c.lambdas.assign(J, 0.0);
    c.lambdas[j] = 1.0;
    const SymMat M1 = build(kind, p, c);
    int hits = 0;
    int row = -1;
    for (int r = 0; r < n; ++r) {
      for (int q = r; q < n; ++q) {
        if (M1(r, q) != M0(r, q)) {
          ++hits;
          row = r == q ? r : -1;
        }
      }
    }
    const double coef = row > 0 ? M1(row, row) - M0(row, row) : 0.0;
    if (hits == 1 && row > 0 && coef < 0.0) out = {j, row, coef};  // the last candidate wins
  }
  return out;
}

struct GenericProblem {
  explicit GenericProblem(const AnalysisKind& k) : kind(k) {}

  AnalysisKind kind;
  StepParams p;
  double U = 0.0;
  std::vector<double> levels;
  std::vector<bool> free;
  std::vector<int> active;  // multipliers carried by the search vector
  DiagonalElimination elim;
  double zlo = 0.0;
  double zhi = 0.0;
  MultiplierCertificate work;
  int evals = 0;
  bool linear = false;  // z holds the multipliers themselves rather than their logs

  // Optional affine change of variables z = origin + basis * w (basis row-major).
  std::vector<double> origin;
  std::vector<double> basis;

  int dim() const { return static_cast<int>(active.size()); }

  // False when a sign-constrained multiplier would be negative.
  bool decode(const double* z) {
    for (int k = 0; k < dim(); ++k) {
      const int j = active[k];
      if (free[j]) {
        work.lambdas[j] = z[k];
      } else if (linear) {
        if (z[k] < 0.0) return false;
        work.lambdas[j] = z[k];
      } else {
        work.lambdas[j] = std::exp(std::clamp(z[k], zlo, zhi));
      }
    }
    return true;
  }

  std::vector<double> encode() const {
    std::vector<double> z(dim());
    for (int k = 0; k < dim(); ++k) {
      const double l = work.lambdas[active[k]];
      z[k] = free[active[k]] || linear ? l : std::log(std::max(l, 1e-300));
    }
    return z;
  }

  // Fills in rho^2 (and the eliminated multiplier) at their least-cost feasible
  // values. Returns a penalty above 1e100 when the rest of the LMI is not
  // negative definite.
  double complete(bool& ok) {
    work.rho2 = 0.0;
    if (elim.j >= 0) work.lambdas[elim.j] = 0.0;
    const SymMat M = build(kind, p, work);
    const int n = M.dim();
    int mid[6];
    int k = 0;
    for (int i = 1; i < n; ++i) {
      if (i != elim.row || elim.j < 0) mid[k++] = i;
    }
    double A[6][6];
    for (int i = 0; i < k; ++i) {
      for (int q = 0; q < k; ++q) A[i][q] = -M(mid[i], mid[q]);
    }
    ok = cholesky(A, k);
    if (!ok) {
      const SymMat D = M.principal(std::span<const int>(mid, k));
      const double top = max_eig(D);
      return kPenalty * (1.0 + std::max(0.0, top) / std::max(1.0, D.frobenius()));
    }
    double y[6];
    for (int i = 0; i < k; ++i) y[i] = M(0, mid[i]);
    forward(A, k, y);
    double P = M(0, 0);
    for (int i = 0; i < k; ++i) P += y[i] * y[i];
    if (elim.j < 0) {
      work.rho2 = std::max(0.0, P);
      return work.rho2;
    }
    double g[6];
    for (int i = 0; i < k; ++i) g[i] = M(elim.row, mid[i]);
    forward(A, k, g);
    double Q = M(elim.row, elim.row);
    double r = M(0, elim.row);
    for (int i = 0; i < k; ++i) {
      Q += g[i] * g[i];
      r += y[i] * g[i];
    }
    // Feasible iff p = rho^2 - P >= 0, q = |coef| lambda - Q >= 0 and p q >= r^2;
    // minimize U p + w q with w the level per unit of q.
    const double w = levels[elim.j] / -elim.coef;
    const double p_lo = std::max(0.0, -P);
    const double q_lo = std::max(0.0, -Q);
    double q = std::abs(r) * std::sqrt(U / w);
    if (p_lo > 0.0) q = std::min(q, r * r / p_lo);
    q = std::max(q, q_lo);
    double pp = p_lo;
    if (r != 0.0) {
      if (!(q > 0.0)) {
        ok = false;
        return kPenalty;
      }
      pp = std::max(p_lo, r * r / q);
    }
    work.rho2 = P + pp;
    work.lambdas[elim.j] = (Q + q) / -elim.coef;
    return work.rho2;
  }

  double value(const double* w) {
    double zbuf[8];
    const double* z = w;
    if (!basis.empty()) {
      const std::size_t n = origin.size();
      for (std::size_t i = 0; i < n; ++i) {
        zbuf[i] = origin[i];
        for (std::size_t q = 0; q < n; ++q) zbuf[i] += basis[i * n + q] * w[q];
      }
      z = zbuf;
    }
    ++evals;
    if (!decode(z)) return kPenalty;
    bool ok = false;
    const double r2 = complete(ok);
    if (!ok) return r2;
    double v = r2 * U;
    for (std::size_t j = 0; j < levels.size(); ++j) v += work.lambdas[j] * levels[j];
    return std::isfinite(v) ? v : kPenalty;
  }
};

double gsl_multi_trampoline(const gsl_vector* x, void* ctx) {
  return static_cast<GenericProblem*>(ctx)->value(x->data);
}

struct NmResult {
  std::vector<double> z;
  double f;
};

NmResult nelder_mead(GenericProblem& prob, std::vector<double> z0, const std::vector<double>& step0,
                     int restarts, int max_iter) {
  const std::size_t n = z0.size();
  NmResult best{z0, prob.value(z0.data())};
  if (n == 0) return best;
  gsl_multimin_function F{&gsl_multi_trampoline, n, &prob};
  std::unique_ptr<gsl_multimin_fminimizer, decltype(&gsl_multimin_fminimizer_free)> s(
      gsl_multimin_fminimizer_alloc(gsl_multimin_fminimizer_nmsimplex2, n), &gsl_multimin_fminimizer_free);
  std::unique_ptr<gsl_vector, decltype(&gsl_vector_free)> x(gsl_vector_alloc(n), &gsl_vector_free);
  std::unique_ptr<gsl_vector, decltype(&gsl_vector_free)> st(gsl_vector_alloc(n), &gsl_vector_free);

  for (int restart = 0; restart < restarts; ++restart) {
    for (std::size_t i = 0; i < n; ++i) {
      gsl_vector_set(x.get(), i, best.z[i]);
      gsl_vector_set(st.get(), i, restart == 0 ? step0[i] : 0.25 * step0[i]);
    }
    gsl_multimin_fminimizer_set(s.get(), &F, x.get(), st.get());
    for (int it = 0; it < max_iter; ++it) {
      if (gsl_multimin_fminimizer_iterate(s.get()) != GSL_SUCCESS) break;
      if (gsl_multimin_test_size(gsl_multimin_fminimizer_size(s.get()), 1e-10) == GSL_SUCCESS) break;
    }
    const double f = gsl_multimin_fminimizer_minimum(s.get());
    const double improvement = best.f - f;
    if (f < best.f) {
      best.f = f;
      for (std::size_t i = 0; i < n; ++i) best.z[i] = gsl_vector_get(s.get()->x, i);
    }
    if (!(improvement > 1e-12 * std::abs(best.f))) break;
  }
  return best;
}

bool on_box_edge(const GenericProblem& prob, const std::vector<double>& z) {
  for (std::size_t j = 0; j < z.size(); ++j) {
    if (!prob.free[prob.active[j]] && (z[j] <= prob.zlo + 1e-3 || z[j] >= prob.zhi - 1e-3)) return true;
  }
  return false;
}

}  // namespace

double least_feasible_rho2(const AnalysisKind& kind, const StepParams& p, const MultiplierCertificate& cert) {
  MultiplierCertificate c = cert;
  const double scale = lmi_data_scale(kind, p);
  auto feas = [&](double r2) {
    c.rho2 = r2;
    return is_nsd(build(kind, p, c), scale);
  };
  double hi = std::max(cert.rho2, 0.0);
  double d = std::max(hi, 1e-300) * 1e-12;
  for (int i = 0; i < 2000 && !feas(hi); ++i) {
    hi += d;
    d *= 2.0;
  }
  if (!feas(hi)) throw Error(ErrorCode::Infeasible, "no rho^2 makes the LMI NSD for these multipliers");
  if (hi == 0.0 || feas(0.0)) return 0.0;
  d = hi * 1e-9;
  double lo = std::max(0.0, hi - d);
  while (feas(lo)) {
    hi = lo;
    d *= 2.0;
    lo = std::max(0.0, hi - d);
  }
  while (hi - lo > 1e-12 * hi) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    (feas(mid) ? hi : lo) = mid;
  }
  return hi;
}

OracleResult solve_step_generic(const AnalysisKind& kind, double U, const StepParams& p,
                                const GenericOptions& opts) {
  require_valid(kind, p, U);
  quiet_gsl();
  const int J = num_lambdas(kind);

  GenericProblem prob(kind);
  prob.p = p;
  prob.U = U;
  prob.levels = supply_levels(kind, p);
  prob.free.resize(J);
  for (int j = 0; j < J; ++j) prob.free[j] = lambda_sign_free(kind, j);
  prob.elim = find_diagonal_multiplier(kind, p, U, prob.levels);
  for (int j = 0; j < J; ++j) {
    if (j != prob.elim.j) prob.active.push_back(j);
  }
  prob.work.kind = kind;
  prob.work.lambdas.assign(J, 0.0);
  const int n = prob.dim();

  // Magnitude of the multiplier-free LMI data sets the range of sign-free starts.
  const double data_scale = lmi_data_scale(kind, p);

  std::mt19937_64 rng(opts.seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::vector<double> shift(std::max(n, 1));
  for (double& s : shift) s = unif(rng);

  NmResult best{{}, kInf};
  for (double box : {1e8, 1e12}) {
    prob.zlo = std::log(1.0 / box);
    prob.zhi = std::log(box);
    std::unique_ptr<gsl_qrng, decltype(&gsl_qrng_free)> q(gsl_qrng_alloc(gsl_qrng_halton, std::max(n, 1)),
                                                          &gsl_qrng_free);
    std::vector<double> u(std::max(n, 1));
    std::vector<double> step(n);
    for (int k = 0; k < n; ++k) step[k] = prob.free[prob.active[k]] ? 0.1 * data_scale : 1.0;
    for (int s = 0; s < opts.starts; ++s) {
      gsl_qrng_get(q.get(), u.data());
      std::vector<double> z(n);
      for (int k = 0; k < n; ++k) {
        const double v = std::fmod(u[k] + shift[k], 1.0);
        z[k] = prob.free[prob.active[k]] ? (2.0 * v - 1.0) * data_scale : prob.zlo + v * (prob.zhi - prob.zlo);
      }
      // Cheap exploration; only the winner is polished.
      auto r = nelder_mead(prob, std::move(z), step, 1, 150 * n);
      if (r.f < best.f) best = std::move(r);
    }
    if (best.f < kPenalty) best = nelder_mead(prob, best.z, step, 12, 400 * n * n + 600);
    if (best.f < kPenalty && !on_box_edge(prob, best.z)) break;
  }
  if (!(best.f < kPenalty)) throw Error(ErrorCode::Infeasible, "no feasible multipliers found");

  // Polish in the raw multipliers, where the objective is convex, along
  // randomly rotated axes scaled to each coordinate.
  prob.decode(best.z.data());
  prob.linear = true;
  std::vector<double> lin = prob.encode();
  std::normal_distribution<double> gauss;
  int stale = 0;
  for (int pass = 0; pass < 12 && stale < 2 && n > 0; ++pass) {
    prob.origin = lin;
    prob.basis.assign(static_cast<std::size_t>(n * n), 0.0);
    Eigen::MatrixXd G(n, n);
    for (int i = 0; i < n; ++i) {
      for (int k = 0; k < n; ++k) G(i, k) = gauss(rng);
    }
    const Eigen::MatrixXd Q = pass == 0 ? Eigen::MatrixXd::Identity(n, n)
                                        : Eigen::MatrixXd(Eigen::HouseholderQR<Eigen::MatrixXd>(G).householderQ());
    for (int i = 0; i < n; ++i) {
      for (int k = 0; k < n; ++k) prob.basis[i * n + k] = 0.05 * (std::abs(lin[i]) + 1e-9 * data_scale) * Q(i, k);
    }
    const std::vector<double> w0(n, 0.0);
    const double before = prob.value(w0.data());
    auto r = nelder_mead(prob, w0, std::vector<double>(n, 1.0), 4, 200 * n * n + 600);
    if (r.f < before) {
      for (int i = 0; i < n; ++i) {
        lin[i] = prob.origin[i];
        for (int k = 0; k < n; ++k) lin[i] += prob.basis[i * n + k] * r.z[k];
      }
    }
    stale = before - r.f > 1e-12 * std::abs(r.f) ? 0 : stale + 1;
  }
  prob.basis.clear();
  prob.decode(lin.data());
  bool ok = false;
  prob.complete(ok);
  if (!ok) throw Error(ErrorCode::Infeasible, "no feasible multipliers found");
  MultiplierCertificate cert = prob.work;
  cert.rho2 = least_feasible_rho2(kind, p, cert);
  return finish(kind, p, U, std::move(cert), OracleMethod::Generic, prob.evals);
}

}  // namespace trackcert
