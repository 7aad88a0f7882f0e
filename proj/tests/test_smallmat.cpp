#include <doctest.h>

#include <Eigen/Dense>
#include <algorithm>
#include <random>
#include <vector>

#include "trackcert/error.hpp"
#include "trackcert/smallmat.hpp"

using namespace trackcert;

namespace {

void check_values(const SymMat& m, std::vector<double> expected) {
  const auto v = eigvals(m);
  REQUIRE(v.size() == expected.size());
  for (std::size_t i = 0; i < v.size(); ++i) CHECK(v[i] == doctest::Approx(expected[i]).epsilon(1e-14));
}

}  // namespace

TEST_CASE("eigenvalues of small fixed matrices") {
  check_values(SymMat{{2, 0}, {0, 3}}, {2, 3});
  check_values(SymMat{{0, 1}, {1, 0}}, {-1, 1});
  check_values(SymMat{{-1, 2}, {2, -1}}, {-3, 1});
}

TEST_CASE("Jacobi agrees with an independent solver on random matrices") {
  std::mt19937_64 g(42);
  std::normal_distribution<double> n(0.0, 1.0);
  double worst = 0.0;
  for (int trial = 0; trial < 300; ++trial) {
    const int d = 1 + trial % SymMat::kMaxDim;
    SymMat m(d);
    Eigen::MatrixXd e(d, d);
    const double scale = std::pow(10.0, (trial % 7) - 3);
    for (int i = 0; i < d; ++i) {
      for (int j = 0; j <= i; ++j) {
        const double x = scale * n(g);
        m.set(i, j, x);
        e(i, j) = e(j, i) = x;
      }
    }
    const auto ours = eigvals(m);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> ref(e, Eigen::EigenvaluesOnly);
    for (int k = 0; k < d; ++k) worst = std::max(worst, std::abs(ours[k] - ref.eigenvalues()(k)) / m.frobenius());
    CHECK(max_eig(m) == ours.back());
  }
  CHECK(worst < 1e-13);
}

TEST_CASE("eigenvectors satisfy the eigen equation") {
  SymMat m{{4, 1, 0.5}, {1, 3, -1}, {0.5, -1, 2}};
  const auto ed = eigen_sym(m);
  for (int k = 0; k < 3; ++k) {
    for (int i = 0; i < 3; ++i) {
      double r = -ed.values[k] * ed.vectors[k][i];
      for (int j = 0; j < 3; ++j) r += m(i, j) * ed.vectors[k][j];
      CHECK(std::abs(r) < 1e-12);
    }
  }
}

TEST_CASE("NSD test with scaled tolerance") {
  CHECK(is_nsd(SymMat{{-1, 0}, {0, -1}}, 1.0));
  CHECK_FALSE(is_nsd(SymMat{{0, 1}, {1, 0}}, 1.0));
  CHECK(is_nsd(SymMat{{-1, 0}, {0, 5e-10}}, 1.0));
  CHECK_FALSE(is_nsd(SymMat{{-1, 0}, {0, 2e-9}}, 1.0));
  CHECK(nsd_tolerance(0.5) == 1e-9);
  CHECK(nsd_tolerance(100.0) == doctest::Approx(1e-7));
  CHECK(is_nsd(SymMat{{-1e6, 0}, {0, 5e-4}}));
}

TEST_CASE("symmetrizing constructor and principal submatrix") {
  SymMat m{{1, 2}, {4, 5}};
  CHECK(m(0, 1) == 3);
  CHECK(m(1, 0) == 3);
  SymMat big{{1, 2, 3}, {2, 4, 5}, {3, 5, 6}};
  const int idx[] = {0, 2};
  const auto p = big.principal(idx);
  CHECK(p.dim() == 2);
  CHECK(p(0, 1) == 3);
  CHECK(p(1, 1) == 6);
}

TEST_CASE("Schur reduction") {
  const int last[] = {1};
  auto r = schur_reduce(SymMat{{-1, 0}, {0, -2}}, last);
  CHECK(r.reduced.dim() == 1);
  CHECK(r.reduced(0, 0) == doctest::Approx(-1));
  CHECK(r.pivot_negative_definite);

  r = schur_reduce(SymMat{{1, 1}, {1, -1}}, last);
  CHECK(r.reduced(0, 0) == doctest::Approx(2));
  CHECK(r.pivot_negative_definite);

  r = schur_reduce(SymMat{{1, 1}, {1, 2}}, last);
  CHECK_FALSE(r.pivot_negative_definite);

  try {
    schur_reduce(SymMat{{1, 1}, {1, 0}}, last);
    FAIL("expected SingularPivot");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::SingularPivot);
  }
}

TEST_CASE("non-finite input is rejected") {
  SymMat m(2);
  m.set(0, 1, std::nan(""));
  CHECK_FALSE(m.all_finite());
  CHECK_THROWS_AS(eigvals(m), Error);
}
