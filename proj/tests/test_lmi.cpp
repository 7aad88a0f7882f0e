#include <doctest.h>

#include <random>

#include "draws.hpp"
#include "trackcert/certify.hpp"
#include "trackcert/error.hpp"
#include "trackcert/lmi.hpp"

using namespace trackcert;

namespace {

void check_matrix(const SymMat& M, std::initializer_list<std::initializer_list<double>> expected) {
  int i = 0;
  for (const auto& row : expected) {
    int j = 0;
    for (double v : row) {
      CHECK(M(i, j) == doctest::Approx(v).epsilon(1e-15));
      ++j;
    }
    ++i;
  }
}

StepParams running_example() {
  StepParams p;
  p.m = 1.0;
  p.L = 10.0;
  p.alpha = 0.1;
  return p;
}

}  // namespace

TEST_CASE("sizes and sign rules") {
  CHECK(num_lambdas(AnalysisTag::ExactOgd) == 2);
  CHECK(num_lambdas(AnalysisTag::StochOgdIid) == 6);
  CHECK(lmi_dim(AnalysisTag::IpOgd) == 6);
  CHECK(lmi_dim(AnalysisTag::InexactOgdAbs) == 4);
  CHECK(lambda_sign_free(AnalysisTag::StochOgdIid, 3));
  CHECK_FALSE(lambda_sign_free(AnalysisTag::StochOgdIid, 2));
  CHECK_FALSE(lambda_sign_free(AnalysisTag::ExactOgd, 0));
}

TEST_CASE("build: exact OGD entrywise substitution") {
  const MultiplierCertificate cert{AnalysisTag::ExactOgd, 1.0, {0.0, 1.0}};
  const auto M = build(AnalysisTag::ExactOgd, running_example(), cert);
  check_matrix(M, {{0, -0.1, 1}, {-0.1, 0.01, -0.1}, {1, -0.1, 0}});
}

TEST_CASE("build: zero stepsize patterns") {
  StepParams p = running_example();
  p.alpha = 0.0;
  const MultiplierCertificate abs{AnalysisTag::InexactOgdAbs, 1.0, {0.0, 0.0, 0.0}};
  check_matrix(build(AnalysisTag::InexactOgdAbs, p, abs), {{0, 0, 1, 0}, {0, 0, 0, 0}, {1, 0, 1, 0}, {0, 0, 0, 0}});

  const MultiplierCertificate ip{AnalysisTag::IpOgd, 1.0, {0.0, 0.0, 0.0, 0.0, 0.0}};
  const auto M = build(AnalysisTag::IpOgd, p, ip);
  CHECK(M(0, 0) == 0.0);
  CHECK(M(0, 1) == 0.0);
  CHECK(M(1, 1) == 0.0);
  CHECK(M(5, 5) == 1.0);
  for (int i = 0; i < 6; ++i) {
    for (int j = 0; j < 6; ++j) {
      if (!((i == 5 && j == 5) || (i == 0 && j == 5) || (i == 5 && j == 0))) CHECK(M(i, j) == 0.0);
    }
  }
  CHECK(M(0, 5) == 1.0);
}

TEST_CASE("build rejects malformed certificates") {
  const auto p = running_example();
  try {
    build(AnalysisTag::ExactOgd, p, {AnalysisTag::ExactOgd, 1.0, {-1.0, 1.0}});
    FAIL("expected SignViolation");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::SignViolation);
  }
  CHECK_THROWS_AS(build(AnalysisTag::ExactOgd, p, {AnalysisTag::ExactOgd, 1.0, {1.0}}), Error);
  CHECK_THROWS_AS(build(AnalysisTag::ExactOgd, p, {AnalysisTag::InexactOgdAbs, 1.0, {0, 0, 0}}), Error);
  // Sign-free multipliers accept negative values.
  CHECK_NOTHROW(build(AnalysisTag::StochOgdIid, p, {AnalysisTag::StochOgdIid, 1.0, {0, 0, 0, -1, -1, -1}}));
}

TEST_CASE("certificate: exact OGD worked example") {
  StepParams p = running_example();
  p.sigma = 0.09;
  const auto cert = certificate(AnalysisTag::ExactOgd, p, 1.0);
  CHECK(cert.rho2 == doctest::Approx(0.891).epsilon(1e-14));
  CHECK(cert.lambdas[0] == doctest::Approx(0.011).epsilon(1e-14));
  CHECK(cert.lambdas[1] == doctest::Approx(11.0).epsilon(1e-14));
  CHECK(feasible(AnalysisTag::ExactOgd, p, cert));
  CHECK(objective(AnalysisTag::ExactOgd, p, cert, 1.0) == doctest::Approx(0.9801).epsilon(1e-14));
}

TEST_CASE("certificate: IID worked example") {
  StepParams p = running_example();
  p.sigma = 0.09;
  p.c = 0.2;
  const auto cert = certificate(AnalysisTag::StochOgdIid, p, 1.0);
  REQUIRE(cert.lambdas.size() == 6);
  CHECK(cert.lambdas[3] == doctest::Approx(-0.1));
  CHECK(cert.lambdas[4] == doctest::Approx(0.01));
  CHECK(cert.lambdas[5] == doctest::Approx(-0.1));
  CHECK(objective(AnalysisTag::StochOgdIid, p, cert, 1.0) == doctest::Approx(0.9805).epsilon(1e-14));
  CHECK(feasible(AnalysisTag::StochOgdIid, p, cert));
}

TEST_CASE("certificate: static exact OGD") {
  const auto p = running_example();
  const auto cert = certificate(AnalysisTag::ExactOgd, p, 1.0);
  CHECK(objective(AnalysisTag::ExactOgd, p, cert, 1.0) == doctest::Approx(0.81).epsilon(1e-11));
  CHECK(feasible(AnalysisTag::ExactOgd, p, cert));
}

TEST_CASE("certificate: degenerate state") {
  StepParams p = running_example();
  p.sigma = 0.1;
  try {
    certificate(AnalysisTag::ExactOgd, p, 0.0);
    FAIL("expected DegenerateState");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::DegenerateState);
  }
  p.alpha = 0.3;
  CHECK_THROWS_AS(certificate(AnalysisTag::ExactOgd, p, 1.0), Error);
}

TEST_CASE("certificates are feasible and attain the closed form on random draws") {
  std::mt19937_64 g(2024);
  for (auto tag : testing::kAllTags) {
    for (int i = 0; i < 30; ++i) {
      const auto kind = testing::kind_for_draw(tag, i);
      const auto p = testing::draw_params(kind, g);
      const double U = testing::draw_state(g);
      const auto cert = certificate(kind, p, U);
      const auto M = build(kind, p, cert);
      INFO(kind.name(), " draw ", i);
      CHECK(max_eig(M) <= nsd_tolerance(std::max(M.frobenius(), lmi_data_scale(kind, p))));
      const double closed = step(kind, p, U);
      CHECK(std::abs(objective(kind, p, cert, U) - closed) <= 1e-10 * closed);
    }
  }
}

TEST_CASE("supply levels") {
  StepParams p = running_example();
  p.sigma = 0.1;
  p.c = 0.2;
  p.G = 0.5;
  p.Lg = 0.25;
  const auto ip = supply_levels(AnalysisTag::IpOgd, p);
  CHECK(ip[1] == doctest::Approx(0.01));
  CHECK(ip[2] == doctest::Approx(0.04));
  CHECK(ip[3] == doctest::Approx(0.25));
  CHECK(supply_levels(AnalysisKind::finite_sum(FnClass::Smooth), p)[2] == doctest::Approx(0.5));
  CHECK(lmi_data_scale(AnalysisTag::ExactOgd, p) >= 1.0);
}
