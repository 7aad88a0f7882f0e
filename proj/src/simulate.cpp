#include "trackcert/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <string>

#include "trackcert/error.hpp"

namespace trackcert {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t kInstanceStream = 0xffffffffffffffffULL;

Eigen::VectorXd gaussian_vector(int p, std::mt19937_64& rng) {
  std::normal_distribution<double> n01;
  Eigen::VectorXd v(p);
  for (int i = 0; i < p; ++i) v[i] = n01(rng);
  return v;
}

Eigen::VectorXd random_unit(int p, std::mt19937_64& rng) {
  for (;;) {
    Eigen::VectorXd v = gaussian_vector(p, rng);
    const double n = v.norm();
    if (n > 1e-12) return v / n;
  }
}

// Unit vector along v, or the first basis vector when v vanishes.
Eigen::VectorXd unit_or_e0(const Eigen::VectorXd& v) {
  const double n = v.norm();
  if (n > 0.0 && std::isfinite(n)) return v / n;
  Eigen::VectorXd e = Eigen::VectorXd::Zero(v.size());
  e[0] = 1.0;
  return e;
}

Eigen::MatrixXd random_orthogonal(int p, std::mt19937_64& rng) {
  Eigen::MatrixXd G(p, p);
  for (int j = 0; j < p; ++j) G.col(j) = gaussian_vector(p, rng);
  return Eigen::HouseholderQR<Eigen::MatrixXd>(G).householderQ();
}

Eigen::VectorXd spectrum_with_ends(int p, double m, double L, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(m, L);
  Eigen::VectorXd s(p);
  for (int i = 0; i < p; ++i) s[i] = u(rng);
  s[0] = m;
  if (p > 1) s[1] = L;
  return s;
}

// Error vector for one step. y is the error-free next point, target the current minimizer.
Eigen::VectorXd error_vector(ErrorPolicy policy, const Eigen::VectorXd& grad, const Eigen::VectorXd& y,
                             const Eigen::VectorXd& target, double alpha, const StepParams& p,
                             std::mt19937_64& rng) {
  const int n = static_cast<int>(grad.size());
  switch (policy) {
    case ErrorPolicy::None:
      return Eigen::VectorXd::Zero(n);
    case ErrorPolicy::AbsoluteWorstCase:
      return -p.c * unit_or_e0(y - target);
    case ErrorPolicy::Mixed: {
      const double mag = std::sqrt(p.delta * p.delta * grad.squaredNorm() + p.c * p.c);
      return -mag * unit_or_e0(y - target);
    }
    case ErrorPolicy::IidGaussian: {
      std::normal_distribution<double> g(0.0, p.c / std::sqrt(static_cast<double>(n)));
      Eigen::VectorXd v(n);
      for (int i = 0; i < n; ++i) v[i] = g(rng);
      return v;
    }
    case ErrorPolicy::RelativeWorstCase: {
      const double gn = grad.norm();
      if (gn == 0.0) return Eigen::VectorXd::Zero(n);
      const double mag = p.delta * gn;
      const Eigen::VectorXd ghat = grad / gn;
      std::vector<Eigen::VectorXd> cands{-mag * ghat};
      if (n > 1) {
        Eigen::VectorXd d = y - target;
        d -= d.dot(ghat) * ghat;
        if (d.norm() <= 1e-12 * std::max(1.0, (y - target).norm())) {
          // Any direction orthogonal to the gradient.
          Eigen::VectorXd e = Eigen::VectorXd::Zero(n);
          int k = 0;
          for (int i = 1; i < n; ++i) {
            if (std::abs(ghat[i]) < std::abs(ghat[k])) k = i;
          }
          e[k] = 1.0;
          d = e - e.dot(ghat) * ghat;
        }
        const Eigen::VectorXd t = d.normalized();
        cands.push_back(mag * t);
        cands.push_back(-mag * t);
      }
      std::size_t best = 0;
      double dist = -1.0;
      for (std::size_t k = 0; k < cands.size(); ++k) {
        const double dk = (y - alpha * cands[k] - target).norm();
        if (dk > dist) {
          dist = dk;
          best = k;
        }
      }
      return cands[best];
    }
  }
  return Eigen::VectorXd::Zero(n);
}

void require_dim(int p) {
  if (p < 1) throw Error(ErrorCode::BadConfig, "dimension must be >= 1");
}

void require_x0(const Eigen::VectorXd& x0, int p) {
  if (x0.size() != p) throw Error(ErrorCode::BadConfig, "x0 has the wrong dimension");
}

void push(Trajectory& tr, bool record, const Eigen::VectorXd& x, const Eigen::VectorXd& xs, double gap) {
  if (record) {
    tr.x.push_back(x);
    tr.x_star.push_back(xs);
  }
  tr.e.push_back((x - xs).squaredNorm());
  tr.gaps.push_back(gap);
}

double quad_gap(const Eigen::MatrixXd& H, const Eigen::VectorXd& d) { return 0.5 * d.dot(H * d); }

}  // namespace

DriftPolicy parse_drift_policy(const std::string& s) {
  if (s == "AlignedAway") return DriftPolicy::AlignedAway;
  if (s == "FixedDirection") return DriftPolicy::FixedDirection;
  if (s == "RandomUnit") return DriftPolicy::RandomUnit;
  throw Error(ErrorCode::BadConfig, "unknown drift policy '" + s + "'");
}

ErrorPolicy parse_error_policy(const std::string& s) {
  if (s == "None") return ErrorPolicy::None;
  if (s == "AbsoluteWorstCase") return ErrorPolicy::AbsoluteWorstCase;
  if (s == "RelativeWorstCase") return ErrorPolicy::RelativeWorstCase;
  if (s == "IidGaussian") return ErrorPolicy::IidGaussian;
  if (s == "Mixed") return ErrorPolicy::Mixed;
  throw Error(ErrorCode::BadConfig, "unknown error policy '" + s + "'");
}

std::mt19937_64 trial_rng(std::uint64_t seed, std::uint64_t index) {
  return std::mt19937_64(splitmix64(seed ^ index));
}

Eigen::VectorXd DriftModel::next(const Eigen::VectorXd& x_star, const Eigen::VectorXd& away_from, double sigma,
                                 std::mt19937_64& rng) const {
  if (sigma == 0.0) return x_star;
  switch (policy) {
    case DriftPolicy::AlignedAway:
      return x_star + sigma * unit_or_e0(x_star - away_from);
    case DriftPolicy::FixedDirection:
      return x_star + sigma * unit_or_e0(direction);
    case DriftPolicy::RandomUnit:
      return x_star + sigma * random_unit(static_cast<int>(x_star.size()), rng);
  }
  return x_star;
}

DriftingQuadratic DriftingQuadratic::random(int p, double m, double L, double alpha, DriftPolicy drift,
                                            std::mt19937_64& rng) {
  require_dim(p);
  DriftingQuadratic q;
  if (p == 1) {
    const double h = std::abs(1.0 - alpha * m) >= std::abs(1.0 - alpha * L) ? m : L;
    q.H = Eigen::MatrixXd::Constant(1, 1, h);
  } else {
    const Eigen::MatrixXd Q = random_orthogonal(p, rng);
    q.H = Q * spectrum_with_ends(p, m, L, rng).asDiagonal() * Q.transpose();
    q.H = 0.5 * (q.H + q.H.transpose()).eval();
  }
  q.x_star0 = Eigen::VectorXd::Zero(p);
  q.drift.policy = drift;
  q.drift.direction = random_unit(p, rng);
  q.check_spectrum(m, L);
  return q;
}

void DriftingQuadratic::check_spectrum(double m, double L) const {
  const Eigen::VectorXd ev = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(H, Eigen::EigenvaluesOnly).eigenvalues();
  const double slack = 1e-12 * std::max(1.0, L);
  if (ev.minCoeff() < m - slack || ev.maxCoeff() > L + slack) {
    throw Error(ErrorCode::BadConfig, "curvature spectrum leaves [m, L]");
  }
}

MonotoneField MonotoneField::rotation(int p, double m, double L, DriftPolicy drift, std::mt19937_64& rng) {
  require_dim(p);
  if (p == 1 && L != m) {
    throw Error(ErrorCode::BadConfig, "a scalar monotone field needs L = m");
  }
  const double b = std::sqrt(std::max(0.0, L * L - m * m));
  MonotoneField f;
  f.A = m * Eigen::MatrixXd::Identity(p, p);
  for (int k = 0; k + 1 < p; k += 2) {
    f.A(k, k + 1) = b;
    f.A(k + 1, k) = -b;
  }
  if (p > 1) {
    const Eigen::MatrixXd Q = random_orthogonal(p, rng);
    f.A = Q * f.A * Q.transpose();
  }
  f.x_star0 = Eigen::VectorXd::Zero(p);
  f.drift.policy = drift;
  f.drift.direction = random_unit(p, rng);
  return f;
}

FiniteSumInstance FiniteSumInstance::random(int p, int n, double m, double L, double alpha, DriftPolicy drift,
                                            std::mt19937_64& rng) {
  if (n < 1) throw Error(ErrorCode::BadConfig, "need at least one component");
  FiniteSumInstance inst;
  inst.base = DriftingQuadratic::random(p, m, L, alpha, drift, rng);
  inst.offsets.assign(n, Eigen::VectorXd::Zero(p));
  if (n == 1) return inst;
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(p);
  for (auto& d : inst.offsets) {
    d = gaussian_vector(p, rng);
    mean += d;
  }
  mean /= n;
  double g2 = 0.0;
  for (auto& d : inst.offsets) {
    d -= mean;
    g2 += (inst.base.H * d).squaredNorm();
  }
  const double g = std::sqrt(g2 / n);
  for (auto& d : inst.offsets) d /= g;
  return inst;
}

double soft_threshold(double x, double k) {
  if (x > k) return x - k;
  if (x < -k) return x + k;
  return 0.0;
}

double CompositeQuadratic::Lg() const { return lambda1 * std::sqrt(static_cast<double>(dim())); }

CompositeQuadratic CompositeQuadratic::random(int p, double m, double L, double Lg, DriftPolicy drift,
                                              std::mt19937_64& rng) {
  require_dim(p);
  CompositeQuadratic q;
  q.h = spectrum_with_ends(p, m, L, rng);
  q.lambda1 = Lg / std::sqrt(static_cast<double>(p));
  q.x_star0 = gaussian_vector(p, rng);
  q.drift.policy = drift;
  q.drift.direction = random_unit(p, rng);
  return q;
}

Eigen::VectorXd CompositeQuadratic::offset_for(const Eigen::VectorXd& x_star) const {
  Eigen::VectorXd b = x_star;
  for (int i = 0; i < dim(); ++i) {
    if (x_star[i] > 0.0) b[i] += lambda1 / h[i];
    if (x_star[i] < 0.0) b[i] -= lambda1 / h[i];
  }
  return b;
}

double CompositeQuadratic::objective(const Eigen::VectorXd& x, const Eigen::VectorXd& b) const {
  return 0.5 * (h.array() * (x - b).array().square()).sum() + lambda1 * x.lpNorm<1>();
}

Trajectory run_inexact_ogd(const DriftingQuadratic& problem, const ParamTrack& track, ErrorPolicy policy,
                           const Eigen::VectorXd& x0, std::uint64_t seed, bool record) {
  require_x0(x0, problem.dim());
  auto rng = trial_rng(seed, 0);
  Trajectory tr;
  tr.seed = seed;
  Eigen::VectorXd x = x0;
  Eigen::VectorXd xs = problem.x_star0;
  push(tr, record, x, xs, quad_gap(problem.H, x - xs));
  const bool stochastic = policy == ErrorPolicy::IidGaussian;
  for (std::size_t t = 0; t < track.horizon; ++t) {
    const StepParams p = track.at(t);
    const Eigen::VectorXd g = problem.H * (x - xs);
    const Eigen::VectorXd y = x - p.alpha * g;
    const Eigen::VectorXd v = error_vector(policy, g, y, xs, p.alpha, p, rng);
    x = y - p.alpha * v;
    // Stochastic runs steer the drift from the pre-noise point so it stays independent of v.
    xs = problem.drift.next(xs, stochastic ? y : x, p.sigma, rng);
    push(tr, record, x, xs, quad_gap(problem.H, x - xs));
  }
  return tr;
}

Trajectory run_vi_ogd(const MonotoneField& field, const ParamTrack& track, ErrorPolicy policy,
                      const Eigen::VectorXd& x0, std::uint64_t seed, bool record) {
  require_x0(x0, field.dim());
  if (policy != ErrorPolicy::None && policy != ErrorPolicy::Mixed) {
    throw Error(ErrorCode::BadConfig, "the VI iteration takes error policy None or Mixed");
  }
  auto rng = trial_rng(seed, 0);
  Trajectory tr;
  tr.seed = seed;
  Eigen::VectorXd x = x0;
  Eigen::VectorXd xs = field.x_star0;
  // A field has no objective; the recorded gap is <F(x), x - x*>, the usual VI merit.
  auto merit = [&](const Eigen::VectorXd& d) { return d.dot(field.A * d); };
  push(tr, record, x, xs, merit(x - xs));
  for (std::size_t t = 0; t < track.horizon; ++t) {
    const StepParams p = track.at(t);
    const Eigen::VectorXd F = field.A * (x - xs);
    const Eigen::VectorXd y = x - p.alpha * F;
    const Eigen::VectorXd v = error_vector(policy, F, y, xs, p.alpha, p, rng);
    x = y - p.alpha * v;
    xs = field.drift.next(xs, x, p.sigma, rng);
    push(tr, record, x, xs, merit(x - xs));
  }
  return tr;
}

Trajectory run_stoch_finite_sum(const FiniteSumInstance& inst, const ParamTrack& track, const Eigen::VectorXd& x0,
                                std::uint64_t seed, bool record) {
  const auto& H = inst.base.H;
  require_x0(x0, inst.base.dim());
  const int n = static_cast<int>(inst.offsets.size());
  auto rng = trial_rng(seed, 0);
  std::uniform_int_distribution<int> pick(0, n - 1);
  Trajectory tr;
  tr.seed = seed;
  Eigen::VectorXd x = x0;
  Eigen::VectorXd xs = inst.base.x_star0;
  push(tr, record, x, xs, quad_gap(H, x - xs));
  for (std::size_t t = 0; t < track.horizon; ++t) {
    const StepParams p = track.at(t);
    if (n == 1 && p.G != 0.0) throw Error(ErrorCode::BadConfig, "a single component forces G = 0");
    tr.G.push_back(p.G);
    const Eigen::VectorXd full = H * (x - xs);
    const Eigen::VectorXd y = x - p.alpha * full;
    const int i = pick(rng);
    // grad f_i(x) = H (x - x* - G d_i)
    x = y + p.alpha * p.G * (H * inst.offsets[i]);
    xs = inst.base.drift.next(xs, y, p.sigma, rng);
    push(tr, record, x, xs, quad_gap(H, x - xs));
  }
  return tr;
}

Trajectory run_ipogd(const CompositeQuadratic& problem, const ParamTrack& track, ErrorPolicy policy,
                     const Eigen::VectorXd& x0, std::uint64_t seed, bool record) {
  require_x0(x0, problem.dim());
  auto rng = trial_rng(seed, 0);
  Trajectory tr;
  tr.seed = seed;
  Eigen::VectorXd x = x0;
  Eigen::VectorXd xs = problem.x_star0;
  Eigen::VectorXd b = problem.offset_for(xs);
  auto gap = [&] { return problem.objective(x, b) - problem.objective(xs, b); };
  push(tr, record, x, xs, gap());
  const bool stochastic = policy == ErrorPolicy::IidGaussian;
  for (std::size_t t = 0; t < track.horizon; ++t) {
    const StepParams p = track.at(t);
    const Eigen::VectorXd g = problem.h.cwiseProduct(x - b);
    const Eigen::VectorXd y = x - p.alpha * g;
    // Worst-case directions aim at the prox image of the error-free point.
    Eigen::VectorXd target = xs;
    const Eigen::VectorXd v = error_vector(policy, g, y, target, p.alpha, p, rng);
    const Eigen::VectorXd z = y - p.alpha * v;
    for (int i = 0; i < problem.dim(); ++i) x[i] = soft_threshold(z[i], p.alpha * problem.lambda1);
    xs = problem.drift.next(xs, stochastic ? y : x, p.sigma, rng);
    b = problem.offset_for(xs);
    push(tr, record, x, xs, gap());
  }
  return tr;
}

SoundnessReport check_soundness(const std::vector<double>& e, const BoundTrace& bounds, SoundnessMode mode,
                                std::size_t trials) {
  if (e.size() != bounds.U.size()) {
    throw Error(ErrorCode::HorizonMismatch, "trajectory has " + std::to_string(e.size()) + " points, bound trace " +
                                                std::to_string(bounds.U.size()));
  }
  SoundnessReport r;
  const double slack = mode == SoundnessMode::MeanSquare ? 5.0 / std::sqrt(static_cast<double>(std::max<std::size_t>(trials, 1)))
                                                         : 0.0;
  for (std::size_t t = 0; t < e.size(); ++t) {
    const double U = bounds.U[t];
    if (std::isnan(U)) continue;
    const double limit =
        mode == SoundnessMode::Deterministic ? U + 1e-9 * std::max(1.0, U) : U * (1.0 + slack);
    if (U > 0.0) r.worst_ratio = std::max(r.worst_ratio, e[t] / U);
    if (!(e[t] <= limit) && r.ok) {
      r.ok = false;
      r.first_violation = t;
    }
  }
  return r;
}

ErrorPolicy default_error_policy(const AnalysisKind& kind) {
  switch (kind.tag()) {
    case AnalysisTag::ExactOgd: return ErrorPolicy::None;
    case AnalysisTag::InexactOgdAbs: return ErrorPolicy::AbsoluteWorstCase;
    case AnalysisTag::InexactOgdRel: return ErrorPolicy::RelativeWorstCase;
    case AnalysisTag::ViOgd: return ErrorPolicy::Mixed;
    case AnalysisTag::StochOgdIid: return ErrorPolicy::IidGaussian;
    case AnalysisTag::FiniteSum: return ErrorPolicy::None;
    case AnalysisTag::IpOgd: return ErrorPolicy::AbsoluteWorstCase;
    case AnalysisTag::BiasedSgd: break;
  }
  throw Error(ErrorCode::Unsupported, "no simulator for " + kind.name());
}

SimSummary simulate(const AnalysisKind& kind, const ParamTrack& track, const SimOptions& opts) {
  track.check();
  const ErrorPolicy policy = default_error_policy(kind);
  if (opts.trials < 1) throw Error(ErrorCode::BadConfig, "trials must be positive");
  require_dim(opts.dim);

  // One curvature for the whole horizon, so it must fit every step's [m_t, L_t].
  double m = 0.0;
  double L = std::numeric_limits<double>::infinity();
  for (std::size_t t = 0; t <= std::max<std::size_t>(track.horizon, 1) - 1; ++t) {
    m = std::max(m, track.m.at(t));
    L = std::min(L, track.L.at(t));
  }
  if (m > L) throw Error(ErrorCode::BadConfig, "no curvature fits every step's [m_t, L_t]");
  const double alpha0 = track.alpha.at(0);

  auto irng = trial_rng(opts.seed, kInstanceStream);
  const int p = opts.dim;
  Eigen::VectorXd dir = p == 1 ? Eigen::VectorXd::Ones(1) : random_unit(p, irng);
  const double r0 = std::sqrt(track.U0);

  std::function<Trajectory(std::uint64_t)> one;
  DriftingQuadratic quad;
  MonotoneField field;
  FiniteSumInstance fs;
  CompositeQuadratic comp;
  switch (kind.tag()) {
    case AnalysisTag::ViOgd:
      field = MonotoneField::rotation(p, m, L, opts.drift, irng);
      one = [&](std::uint64_t s) { return run_vi_ogd(field, track, policy, field.x_star0 + r0 * dir, s, false); };
      break;
    case AnalysisTag::FiniteSum:
      fs = FiniteSumInstance::random(p, opts.components, m, L, alpha0, opts.drift, irng);
      one = [&](std::uint64_t s) { return run_stoch_finite_sum(fs, track, fs.base.x_star0 + r0 * dir, s, false); };
      break;
    case AnalysisTag::IpOgd:
      comp = CompositeQuadratic::random(p, m, L, track.Lg, opts.drift, irng);
      one = [&](std::uint64_t s) { return run_ipogd(comp, track, policy, comp.x_star0 + r0 * dir, s, false); };
      break;
    default:
      quad = DriftingQuadratic::random(p, m, L, alpha0, opts.drift, irng);
      one = [&](std::uint64_t s) { return run_inexact_ogd(quad, track, policy, quad.x_star0 + r0 * dir, s, false); };
      break;
  }

  const std::size_t n = track.horizon + 1;
  SimSummary out;
  out.trials = opts.trials;
  out.e_mean.assign(n, 0.0);
  out.err_mean.assign(n, 0.0);
  out.err_max.assign(n, 0.0);
  out.gap_mean.assign(n, 0.0);
  for (std::size_t k = 0; k < opts.trials; ++k) {
    const Trajectory tr = one(opts.seed ^ k);
    for (std::size_t t = 0; t < n; ++t) {
      const double d = std::sqrt(tr.e[t]);
      out.e_mean[t] += tr.e[t];
      out.err_mean[t] += d;
      out.err_max[t] = std::max(out.err_max[t], d);
      out.gap_mean[t] += tr.gaps[t];
    }
  }
  const double inv = 1.0 / static_cast<double>(opts.trials);
  for (std::size_t t = 0; t < n; ++t) {
    out.e_mean[t] *= inv;
    out.err_mean[t] *= inv;
    out.gap_mean[t] *= inv;
  }
  return out;
}

}  // namespace trackcert
