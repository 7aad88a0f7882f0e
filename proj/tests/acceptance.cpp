// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "draws.hpp"
#include "trackcert/certify.hpp"
#include "trackcert/cli.hpp"
#include "trackcert/error.hpp"
#include "trackcert/lmi.hpp"
#include "trackcert/regret.hpp"
#include "trackcert/sdp_oracle.hpp"
#include "trackcert/simulate.hpp"

using namespace trackcert;
namespace tt = trackcert::testing;

namespace {

const std::string kConfigDir = TRACKCERT_CONFIG_DIR;

int failures = 0;

void report(int id, const std::string& title, bool ok, const std::string& detail) {
  std::printf("[%s] %d. %s: %s\n", ok ? "PASS" : "FAIL", id, title.c_str(), detail.c_str());
  std::fflush(stdout);
  if (!ok) ++failures;
}

std::string fmt(const char* f, double a) {
  char buf[96];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

double rel(double a, double b) { return std::abs(a - b) / std::abs(b); }

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

struct Draw {
  AnalysisKind kind;
  StepParams p;
  double U;
};

std::vector<Draw> oracle_draws() {
  std::mt19937_64 g(20240601);
  std::vector<Draw> out;
  for (auto tag : tt::kAllTags) {
    for (int i = 0; i < 100; ++i) {
      const auto kind = tt::kind_for_draw(tag, i);
      const auto p = tt::draw_params(kind, g);
      out.push_back({kind, p, tt::draw_state(g)});
    }
  }
  return out;
}

// 1 and 2: oracles and explicit certificates on the same draws.
void oracle_and_certificates(const std::vector<Draw>& draws) {
  const auto t0 = std::chrono::steady_clock::now();
  double worst_gen = 0.0, worst_red = 0.0;
  std::string worst_gen_kind, worst_red_kind;
  double worst_eig = -1e300, worst_obj = 0.0;
  int errors = 0;
  for (const auto& d : draws) {
    try {
      const double closed = step(d.kind, d.p, d.U);
      if (d.kind.tag() != AnalysisTag::IpOgd) {
        const double e = rel(solve_step_reduced(d.kind, d.U, d.p).U_next, closed);
        if (e > worst_red) {
          worst_red = e;
          worst_red_kind = d.kind.name();
        }
      }
      const double e = rel(solve_step_generic(d.kind, d.U, d.p).U_next, closed);
      if (e > worst_gen) {
        worst_gen = e;
        worst_gen_kind = d.kind.name();
      }
    } catch (const std::exception& ex) {
      ++errors;
      std::printf("  oracle error on %s: %s\n", d.kind.name().c_str(), ex.what());
    }
  }
  const double elapsed = seconds_since(t0);

  int cert_errors = 0;
  for (const auto& d : draws) {
    try {
      const auto cert = certificate(d.kind, d.p, d.U);
      const SymMat M = build(d.kind, d.p, cert);
      const double scale = std::max(M.frobenius(), lmi_data_scale(d.kind, d.p));
      worst_eig = std::max(worst_eig, max_eig(M) / nsd_tolerance(scale));
      worst_obj = std::max(worst_obj, rel(objective(d.kind, d.p, cert, d.U), step(d.kind, d.p, d.U)));
    } catch (const std::exception& ex) {
      ++cert_errors;
      std::printf("  certificate error on %s: %s\n", d.kind.name().c_str(), ex.what());
    }
  }

  std::ostringstream a;
  a << draws.size() << " draws; generic worst rel " << fmt("%.2e", worst_gen) << " (" << worst_gen_kind
    << ", limit 1e-4); reduced worst rel " << fmt("%.2e", worst_red) << " (" << worst_red_kind
    << ", limit 1e-7); " << fmt("%.1f", elapsed) << " s (limit 300 s)";
  report(1, "closed form = SDP optimum", errors == 0 && worst_gen <= 1e-4 && worst_red <= 1e-7 && elapsed <= 300.0,
         a.str());

  std::ostringstream b;
  b << "max eigenvalue / (1e-9 scale) = " << fmt("%.3f", worst_eig) << " (limit 1); objective worst rel "
    << fmt("%.2e", worst_obj) << " (limit 1e-10)";
  report(2, "certificate feasibility", cert_errors == 0 && worst_eig <= 1.0 && worst_obj <= 1e-10, b.str());
}

// 3: the aligned-drift 1-D instance attains the exact-OGD bound.
void tightness() {
  const double m = 1.0, L = 10.0, alpha = 0.1, sigma = 0.05;
  ParamTrack tr;
  tr.horizon = 100;
  tr.m = m;
  tr.L = L;
  tr.alpha = alpha;
  tr.sigma = sigma;
  tr.U0 = 1.0;
  std::mt19937_64 g(1);
  auto q = DriftingQuadratic::random(1, m, L, alpha, DriftPolicy::AlignedAway, g);
  const auto traj = run_inexact_ogd(q, tr, ErrorPolicy::None, q.x_star0 + Eigen::VectorXd::Ones(1), 0);
  const auto bound = run(AnalysisTag::ExactOgd, tr);
  const double mu_ = mu(m, L, alpha);
  const double fix = sigma / (1.0 - mu_);
  double worst_closed = 0.0, worst_bound = 0.0;
  for (std::size_t t = 0; t <= tr.horizon; ++t) {
    const double expect = std::pow(mu_, static_cast<double>(t)) * (1.0 - fix) + fix;
    worst_closed = std::max(worst_closed, std::abs(std::sqrt(traj.e[t]) - expect));
    worst_bound = std::max(worst_bound, std::abs(traj.e[t] - bound.U[t]));
  }
  std::ostringstream s;
  s << "T=100; max |sqrt(e_t) - closed form| = " << fmt("%.2e", worst_closed) << ", max |e_t - U_t| = "
    << fmt("%.2e", worst_bound) << " (limit 1e-12)";
  report(3, "tightness witness", worst_closed <= 1e-12 && worst_bound <= 1e-12, s.str());
}

// Track with constant parameters taken from a draw.
ParamTrack constant_track(const StepParams& p, std::size_t T, double U0) {
  ParamTrack tr;
  tr.horizon = T;
  tr.m = p.m;
  tr.L = p.L;
  tr.alpha = p.alpha;
  tr.sigma = p.sigma;
  tr.c = p.c;
  tr.delta = p.delta;
  tr.G = p.G;
  tr.Lg = p.Lg;
  tr.U0 = U0;
  return tr;
}

// 4: simulated errors never exceed the certified bounds.
void soundness_sweep() {
  std::mt19937_64 g(777);
  const DriftPolicy drifts[] = {DriftPolicy::AlignedAway, DriftPolicy::RandomUnit, DriftPolicy::FixedDirection};
  std::ostringstream s;
  bool ok = true;
  for (auto tag : {AnalysisTag::InexactOgdAbs, AnalysisTag::InexactOgdRel, AnalysisTag::ViOgd, AnalysisTag::IpOgd}) {
    double worst = 0.0;
    int bad = 0;
    for (int i = 0; i < 50; ++i) {
      const auto p = tt::draw_params(tag, g);
      const auto tr = constant_track(p, 200, tt::draw_state(g));
      SimOptions o;
      o.dim = 10;
      o.drift = drifts[i % 3];
      o.seed = g();
      const auto sim = simulate(tag, tr, o);
      const auto bound = run(tag, tr);
      for (std::size_t t = 0; t <= tr.horizon; ++t) {
        const double e = sim.err_max[t] * sim.err_max[t];
        if (t > 0) worst = std::max(worst, e / bound.U[t]);
        if (!(e <= bound.U[t] * (1.0 + 1e-9))) ++bad;
      }
    }
    ok = ok && bad == 0;
    s << AnalysisKind(tag).name() << " max e/U " << fmt("%.6f", worst) << "; ";
  }
  for (auto tag : {AnalysisTag::StochOgdIid, AnalysisTag::FiniteSum}) {
    double worst = 0.0;
    int bad = 0;
    for (int i = 0; i < 4; ++i) {
      const auto kind = tt::kind_for_draw(tag, i);
      const auto p = tt::draw_params(kind, g);
      const auto tr = constant_track(p, 200, tt::draw_state(g));
      SimOptions o;
      o.dim = 10;
      o.drift = drifts[i % 3];
      o.trials = 10000;
      o.seed = g();
      const auto sim = simulate(kind, tr, o);
      const auto bound = run(kind, tr);
      for (std::size_t t = 0; t <= tr.horizon; ++t) {
        if (t > 0) worst = std::max(worst, sim.e_mean[t] / bound.U[t]);
        if (!(sim.e_mean[t] <= bound.U[t] * 1.05)) ++bad;
      }
    }
    ok = ok && bad == 0;
    s << AnalysisKind(tag).name() << " max mean e/U " << fmt("%.4f", worst) << "; ";
  }
  s << "ratios over t >= 1 (x_0 starts on the bound); limits 1+1e-9 (50 instances, T=200, 10-D) and 1.05 (1e4 trials)";
  report(4, "soundness sweep", ok, s.str());
}

// 5: the exact second-moment recursion of a 1-D quadratic stays below the IID trace.
void stochastic_dominance() {
  std::mt19937_64 g(55);
  double worst = 0.0;
  bool ok = true;
  for (int i = 0; i < 200; ++i) {
    StepParams p = tt::draw_params(AnalysisTag::StochOgdIid, g);
    p.sigma = 0.0;
    const double h = i % 4 == 0 ? p.m : (i % 4 == 1 ? p.L : tt::uniform(g, p.m, p.L));
    const auto tr = constant_track(p, 500, tt::draw_state(g));
    const auto bound = run(AnalysisTag::StochOgdIid, tr);
    double E = tr.U0;
    const double k = (1.0 - p.alpha * h) * (1.0 - p.alpha * h);
    for (std::size_t t = 1; t <= tr.horizon; ++t) {
      E = k * E + p.alpha * p.alpha * p.c * p.c;
      worst = std::max(worst, E / bound.U[t]);
      // Equality holds at the extreme curvature; allow for the last rounding.
      if (!(E <= bound.U[t] * (1.0 + 4e-16 * static_cast<double>(t)))) ok = false;
    }
  }
  report(5, "exact stochastic dominance", ok,
         "200 draws (h at m, L and interior), T=500; max E e_t / U_t = " + fmt("%.17g", worst));
}

// 6: the piecewise relative-error factor is continuous at its breakpoints.
void piecewise_consistency() {
  std::mt19937_64 g(66);
  double worst = 0.0;
  for (int i = 0; i < 100; ++i) {
    const double m = tt::log_uniform(g, 0.1, 10.0);
    const double L = m * tt::log_uniform(g, 1.0, 100.0);
    const double delta = tt::uniform(g, 0.0, 0.999) * 2.0 * m / (L + m);
    const auto bp = rel_breakpoints(m, L, delta);
    for (double a : {bp.alpha_minus, bp.alpha_plus}) {
      const double lo = rho_hat_rel(m, L, std::nextafter(a, 0.0), delta);
      const double at = rho_hat_rel(m, L, a, delta);
      const double hi = rho_hat_rel(m, L, std::nextafter(a, 1e300), delta);
      worst = std::max({worst, std::abs(lo - at), std::abs(hi - at)});
    }
  }
  const auto bp = rel_breakpoints(1, 3, 0.25);
  const double v1 = rho_hat_rel(1, 3, bp.alpha_minus, 0.25);
  const double v2 = rho_hat_rel(1, 3, bp.alpha_plus, 0.25);
  const bool ok = worst <= 1e-9 && std::abs(v1 - 0.75) <= 1e-9 && std::abs(v2 - 0.75) <= 1e-9;
  report(6, "piecewise consistency", ok,
         "max jump " + fmt("%.2e", worst) + " over 100 draws (limit 1e-9); m=1,L=3,delta=0.25 gives " +
             fmt("%.15g", v1) + " and " + fmt("%.15g", v2));
}

// 7: fixed point and rate identity of the IID recursion.
void fixed_point_identities() {
  std::mt19937_64 g(77);
  double worst_res = 0.0, worst_id = 0.0;
  bool dominated = true;
  for (int i = 0; i < 100; ++i) {
    const auto p = tt::draw_params(AnalysisTag::StochOgdIid, g);
    const double Us = stoch_fixed_point(p.m, p.L, p.alpha, p.sigma, p.c);
    const double mu_ = mu(p.m, p.L, p.alpha);
    worst_res = std::max(worst_res, std::abs(step_stoch_iid(Us, p.m, p.L, p.alpha, p.sigma, p.c) - Us) /
                                        std::max(1.0, Us));
    const double r = mu_ + p.sigma / std::sqrt(Us);
    worst_id = std::max(worst_id, std::abs(r * r - (1.0 - p.alpha * p.alpha * p.c * p.c / Us)));
    const auto tr = constant_track(p, 500, tt::draw_state(g));
    const auto bound = run(AnalysisTag::StochOgdIid, tr);
    for (std::size_t t = 0; t <= 500; ++t) {
      const double alt = stoch_alt_bound(tr.U0, t, p.m, p.L, p.alpha, p.sigma, p.c);
      if (!(bound.U[t] <= alt * (1.0 + 1e-12))) dominated = false;
    }
  }
  report(7, "fixed-point identities", worst_res <= 1e-12 && worst_id <= 1e-10 && dominated,
         "residual " + fmt("%.2e", worst_res) + " (limit 1e-12), rate identity " + fmt("%.2e", worst_id) +
             " (limit 1e-10), alternative bound dominates for t <= 500: " + (dominated ? "yes" : "no"));
}

// 8: regret bounds dominate simulated regret.
void regret_domination() {
  std::ostringstream s;
  bool ok = true;
  for (const char* name : {"exact_ogd_tight", "abs_error", "rel_error", "stoch_iid", "finite_sum", "ipogd"}) {
    const auto cfg = load_config(kConfigDir + "/" + name + ".json");
    auto rep = regret_bound_for(cfg.analysis, cfg.schedule);
    SimOptions o;
    o.dim = cfg.dimension;
    o.components = cfg.components;
    o.drift = cfg.drift;
    o.trials = cfg.trials;
    o.seed = cfg.seed;
    rep.empirical = empirical_regret(simulate(cfg.analysis, cfg.schedule, o));
    const bool d = dominated(rep, o.trials);
    ok = ok && d;
    s << name << " " << fmt("%.4g", *rep.empirical) << "<=" << fmt("%.4g", rep.bound) << (d ? "" : " VIOLATED")
      << "; ";
  }
  const auto abs = load_config(kConfigDir + "/abs_error.json");
  const auto rep = regret_bound_for(abs.analysis, abs.schedule);
  const double split = rep.bound_split.value_or(0.0);
  ok = ok && rel(split, 1580.0) <= 1e-9;
  s << "split form " << fmt("%.12g", split) << " (expected 1580)";
  report(8, "regret domination", ok, s.str());
}

// 9: with no perturbations every trace is the pure geometric contraction.
void static_recovery() {
  std::mt19937_64 g(99);
  double worst = 0.0;
  for (auto tag : tt::kAllTags) {
    for (int i = 0; i < 20; ++i) {
      const auto kind = tt::kind_for_draw(tag, i);
      StepParams p = tt::draw_params(kind, g);
      // Biased SGD contracts only for alpha < m/L^2.
      if (tag == AnalysisTag::BiasedSgd) p.alpha = p.m / (p.L * p.L) * tt::uniform(g, 0.001, 0.999);
      ParamTrack tr;
      tr.horizon = 1000;
      tr.m = p.m;
      tr.L = p.L;
      tr.alpha = p.alpha;
      tr.delta = tag == AnalysisTag::InexactOgdRel ? p.delta : 0.0;
      tr.U0 = tt::draw_state(g);
      const auto trace = run(kind, tr);
      const long double k = static_multiplier(kind, tr.at(0));
      long double ref = tr.U0;
      for (std::size_t t = 1; t <= tr.horizon; ++t) {
        ref *= k;
        if (ref < 1e-290L) break;
        worst = std::max(worst, rel(trace.U[t], static_cast<double>(ref)));
      }
    }
  }
  report(9, "static recovery", worst <= 1e-14,
         "8 analyses x 20 draws, T=1000; worst rel deviation from U0 k^t " + fmt("%.2e", worst) + " (limit 1e-14)");
}

std::string slurp(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  std::ostringstream s;
  s << f.rdbuf();
  return s.str();
}

int cli(const std::vector<std::string>& args) {
  std::vector<const char*> argv{"trackcert"};
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  return run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
}

// 10: byte-identical outputs and clean oracle runs on every config.
void cli_determinism() {
  const std::vector<std::string> names{"exact_ogd_tight", "abs_error", "rel_error", "vi_ogd",
                                       "stoch_iid",       "finite_sum", "ipogd",   "biased_sgd"};
  const auto dir = std::filesystem::temp_directory_path() / "trackcert_acceptance";
  std::filesystem::create_directories(dir);
  bool ok = true;
  std::ostringstream s;
  int oracle_ok = 0, identical = 0, compared = 0;
  for (const auto& name : names) {
    const std::string cfg = kConfigDir + "/" + name + ".json";
    std::string first[3];
    for (int run = 0; run < 2; ++run) {
      const std::string base = (dir / (name + "_" + std::to_string(run))).string();
      const int oc = cli({"oracle", "--config", cfg, "--out", base + "_oracle.csv"});
      if (run == 0 && oc == exit_code::ok) ++oracle_ok;
      if (oc != exit_code::ok) {
        ok = false;
        s << name << " oracle exit " << oc << "; ";
      }
      std::string got[3] = {slurp(base + "_oracle.csv"), "", ""};
      if (name != "biased_sgd") {
        const int sc = cli({"simulate", "--config", cfg, "--out", base + "_sim.csv", "--svg", base + "_sim.svg"});
        if (sc != exit_code::ok) {
          ok = false;
          s << name << " simulate exit " << sc << "; ";
        }
        got[1] = slurp(base + "_sim.csv");
        got[2] = slurp(base + "_sim.svg");
      }
      for (int k = 0; k < 3; ++k) {
        if (run == 0) {
          first[k] = got[k];
        } else if (!got[k].empty() || !first[k].empty()) {
          ++compared;
          if (got[k] == first[k] && !got[k].empty()) {
            ++identical;
          } else {
            ok = false;
          }
        }
      }
    }
  }
  s << identical << "/" << compared << " outputs byte-identical across two runs; oracle exit 0 on " << oracle_ok << "/"
    << names.size() << " configs";
  report(10, "CLI determinism", ok, s.str());
}

}  // namespace

int main() {
  const auto t0 = std::chrono::steady_clock::now();
  const std::vector<std::function<void()>> criteria{
      [] { oracle_and_certificates(oracle_draws()); },
      tightness,
      soundness_sweep,
      stochastic_dominance,
      piecewise_consistency,
      fixed_point_identities,
      regret_domination,
      static_recovery,
      cli_determinism,
  };
  for (const auto& c : criteria) {
    try {
      c();
    } catch (const std::exception& e) {
      std::printf("[FAIL] unexpected error: %s\n", e.what());
      ++failures;
    }
  }
  std::printf("%d criteria failed; total %.1f s\n", failures, seconds_since(t0));
  return failures == 0 ? 0 : 1;
}
