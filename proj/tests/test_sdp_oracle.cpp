#include <doctest.h>

#include <cmath>
#include <random>

#include "draws.hpp"
#include "trackcert/certify.hpp"
#include "trackcert/error.hpp"
#include "trackcert/sdp_oracle.hpp"

using namespace trackcert;

TEST_CASE("h_tau") {
  CHECK(h_tau(1, 10, 2.0 / 11.0, 0.0) == doctest::Approx(81.0 / 121.0).epsilon(1e-14));
  const auto r = minimize_log_scale([](double t) { return h_tau(1, 10, 0.1, t); });
  CHECK(r.f == doctest::Approx(0.81).epsilon(1e-10));
  // m = L: the tau term vanishes.
  const auto eq = minimize_log_scale([](double t) { return h_tau(2, 2, 0.1, t); });
  CHECK(eq.f == doctest::Approx(0.64).epsilon(1e-8));
}

TEST_CASE("h_hat_rel") {
  const double nu = 0.3;
  auto r = minimize_log_scale([&](double z) { return h_hat_rel(1, 3, 0.2, 0.25, z, nu) / (1 + nu); });
  CHECK(r.f == doctest::Approx(0.7225).epsilon(1e-9));

  r = minimize_log_scale([&](double z) { return h_hat_rel(1, 3, 0.4, 0.25, z, nu); });
  CHECK(r.x == doctest::Approx(0.25).epsilon(1e-5));
  CHECK(r.f == doctest::Approx(0.5 * (1 + nu)).epsilon(1e-10));

  r = minimize_log_scale([&](double z) { return h_hat_rel(1, 3, 0.2, 0.0, z, nu) / (1 + nu); });
  CHECK(r.f == doctest::Approx(mu(1, 3, 0.2) * mu(1, 3, 0.2)).epsilon(1e-9));

  // Eliminating tau never loses: h_hat is the minimum over tau.
  for (double tau : {1e-3, 0.1, 1.0, 10.0}) {
    CHECK(h_rel_tau(1, 3, 0.2, 0.25, 0.1, nu, tau) >= h_hat_rel(1, 3, 0.2, 0.25, 0.1, nu) - 1e-12);
  }
}

TEST_CASE("minimize_log_scale widens the bracket") {
  const auto r = minimize_log_scale([](double x) { return std::pow(std::log(x) - std::log(1e10), 2); });
  CHECK(r.x == doctest::Approx(1e10).epsilon(1e-5));
  CHECK(r.evals > 0);
}

TEST_CASE("reduced oracle worked examples") {
  StepParams p;
  p.m = 1;
  p.L = 10;
  p.alpha = 0.1;
  p.sigma = 0.05;
  p.c = 0.2;
  auto r = solve_step_reduced(AnalysisTag::InexactOgdAbs, 1.0, p);
  CHECK(r.U_next == doctest::Approx(0.9409).epsilon(1e-8));
  CHECK(r.method == OracleMethod::Reduced);
  CHECK(r.feasibility_residual <= 1e-8);

  StepParams v;
  v.m = 1;
  v.L = 2;
  v.alpha = 0.2;
  v.sigma = 0.05;
  v.delta = 0.1;
  v.c = 0.1;
  r = solve_step_reduced(AnalysisTag::ViOgd, 1.0, v);
  CHECK(r.U_next == doctest::Approx(0.93412).epsilon(1e-4));

  p.sigma = 0.0;
  p.c = 0.0;
  r = solve_step_reduced(AnalysisTag::ExactOgd, 1.0, p);
  CHECK(r.U_next == doctest::Approx(0.81).epsilon(1e-12));

  CHECK_THROWS_AS(solve_step_reduced(AnalysisTag::IpOgd, 1.0, p), Error);
}

TEST_CASE("generic oracle worked examples") {
  StepParams p;
  p.m = 1;
  p.L = 10;
  p.alpha = 0.1;
  p.sigma = 0.05;
  p.c = 0.1;
  p.Lg = 0.5;
  auto r = solve_step_generic(AnalysisTag::IpOgd, 1.0, p);
  CHECK(r.U_next == doctest::Approx(1.1236).epsilon(1e-4));
  CHECK(r.method == OracleMethod::Generic);
  CHECK(feasible(AnalysisTag::IpOgd, p, r.cert));

  StepParams b;
  b.m = 1;
  b.L = 2;
  b.alpha = 0.1;
  b.delta = 0.1;
  b.c = 0.1;
  b.G = 0.5;
  r = solve_step_generic(AnalysisTag::BiasedSgd, 1.0, b);
  CHECK(r.U_next == doctest::Approx(0.94393).epsilon(1e-4));
}

TEST_CASE("generic oracle is deterministic for a fixed seed") {
  StepParams p;
  p.m = 0.5;
  p.L = 4;
  p.alpha = 0.3;
  p.sigma = 0.1;
  p.c = 0.3;
  const auto a = solve_step_generic(AnalysisTag::InexactOgdAbs, 2.0, p, {123, 16});
  const auto b = solve_step_generic(AnalysisTag::InexactOgdAbs, 2.0, p, {123, 16});
  CHECK(a.U_next == b.U_next);
  CHECK(a.cert.lambdas == b.cert.lambdas);
}

TEST_CASE("both oracles agree with the closed form on random draws") {
  std::mt19937_64 g(77);
  for (auto tag : testing::kAllTags) {
    for (int i = 0; i < 3; ++i) {
      const auto kind = testing::kind_for_draw(tag, i);
      const auto p = testing::draw_params(kind, g);
      const double U = testing::draw_state(g);
      const double closed = step(kind, p, U);
      INFO(kind.name(), " draw ", i);
      if (tag != AnalysisTag::IpOgd) {
        CHECK(std::abs(solve_step_reduced(kind, U, p).U_next - closed) <= 1e-7 * closed);
      }
      const auto gen = solve_step_generic(kind, U, p);
      CHECK(std::abs(gen.U_next - closed) <= 1e-4 * closed);
      // The returned point is never better than the optimum: it is feasible.
      const auto M = build(kind, p, gen.cert);
      CHECK(max_eig(M) <= nsd_tolerance(std::max(M.frobenius(), lmi_data_scale(kind, p))));
    }
  }
}

TEST_CASE("least feasible rho^2 recovers the certificate's value") {
  StepParams p;
  p.m = 1;
  p.L = 10;
  p.alpha = 0.1;
  p.sigma = 0.09;
  auto cert = certificate(AnalysisTag::ExactOgd, p, 1.0);
  CHECK(least_feasible_rho2(AnalysisTag::ExactOgd, p, cert) == doctest::Approx(0.891).epsilon(1e-8));
}
