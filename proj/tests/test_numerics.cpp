#include <cmath>
#include <limits>
#include <vector>

#include "doctest.h"

#include "bvi/error.hpp"
#include "bvi/numerics.hpp"

using namespace bvi;

namespace {

Eigen::MatrixXd random_symmetric(RngStream& rng, int d) {
  Eigen::MatrixXd m = rng.normal_matrix(d, d);
  return 0.5 * (m + m.transpose());
}

}  // namespace

TEST_CASE("SymMatrix symmetrizes exactly") {
  Eigen::MatrixXd m(2, 2);
  m << 1.0, 2.0, 3.0, 4.0;
  SymMatrix s(m);
  CHECK(s(0, 1) == s(1, 0));
  CHECK(s(0, 1) == doctest::Approx(2.5));
  CHECK_THROWS_AS(SymMatrix(Eigen::MatrixXd(2, 3)), InvalidInput);
  CHECK_THROWS_AS(SymMatrix(Eigen::MatrixXd(0, 0)), InvalidInput);
}

TEST_CASE("sym_eigen examples") {
  SUBCASE("identity") {
    const SpectralDecomp e = sym_eigen(SymMatrix::identity(2));
    CHECK(e.eigenvalues(0) == doctest::Approx(1.0));
    CHECK(e.eigenvalues(1) == doctest::Approx(1.0));
    CHECK((e.basis.transpose() * e.basis - Eigen::MatrixXd::Identity(2, 2)).norm() < 1e-12);
  }
  SUBCASE("diagonal input sorts ascending") {
    Eigen::MatrixXd m = Eigen::Vector2d(3.0, 1.0).asDiagonal();
    const SpectralDecomp e = sym_eigen(SymMatrix(m));
    CHECK(e.eigenvalues(0) == doctest::Approx(1.0));
    CHECK(e.eigenvalues(1) == doctest::Approx(3.0));
    CHECK(std::abs(e.basis(1, 0)) == doctest::Approx(1.0));
    CHECK(std::abs(e.basis(0, 1)) == doctest::Approx(1.0));
  }
  SUBCASE("2x2 with known eigenvectors") {
    Eigen::MatrixXd m(2, 2);
    m << 2.0, 1.0, 1.0, 2.0;
    const SpectralDecomp e = sym_eigen(SymMatrix(m));
    CHECK(e.eigenvalues(0) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(e.eigenvalues(1) == doctest::Approx(3.0).epsilon(1e-14));
    const double r = 1.0 / std::sqrt(2.0);
    CHECK(std::abs(e.basis.col(0).dot(Eigen::Vector2d(r, -r))) == doctest::Approx(1.0));
    CHECK(std::abs(e.basis.col(1).dot(Eigen::Vector2d(r, r))) == doctest::Approx(1.0));
  }
  SUBCASE("non-finite input") {
    Eigen::MatrixXd m = Eigen::MatrixXd::Identity(2, 2);
    m(0, 0) = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(sym_eigen(SymMatrix(m)), InvalidInput);
  }
}

TEST_CASE("sym_eigen reconstruction and orthonormality over random matrices") {
  RngStream rng(11, 0);
  int trials = 0;
  for (int t = 0; t < 1000; ++t) {
    const int d = 1 + static_cast<int>(rng.next_u64() % 40);
    const Eigen::MatrixXd m = random_symmetric(rng, d);
    const SpectralDecomp e = sym_eigen(SymMatrix(m));
    const double scale = m.norm();
    REQUIRE((e.reconstruct() - m).norm() <= 1e-10 * scale);
    REQUIRE((e.basis.transpose() * e.basis - Eigen::MatrixXd::Identity(d, d)).norm() <=
            1e-10 * std::sqrt(static_cast<double>(d)));
    for (int i = 1; i < d; ++i) REQUIRE(e.eigenvalues(i - 1) <= e.eigenvalues(i));
    ++trials;
  }
  CHECK(trials == 1000);
}

TEST_CASE("sym_eigen eigenvalues agree with an independent solver") {
  RngStream rng(12, 0);
  for (int t = 0; t < 50; ++t) {
    const int d = 2 + t % 30;
    const Eigen::MatrixXd m = random_symmetric(rng, d);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> oracle(m);
    const SpectralDecomp e = sym_eigen(SymMatrix(m));
    CHECK((e.eigenvalues - oracle.eigenvalues()).norm() <= 1e-10 * m.norm());
  }
}

TEST_CASE("cholesky examples") {
  const CholeskyFactor id = cholesky(SymMatrix::identity(3));
  CHECK((id.lower - Eigen::MatrixXd::Identity(3, 3)).norm() == 0.0);

  Eigen::MatrixXd m(2, 2);
  m << 4.0, 0.0, 0.0, 9.0;
  const CholeskyFactor c = cholesky(SymMatrix(m));
  CHECK(c.lower(0, 0) == doctest::Approx(2.0));
  CHECK(c.lower(1, 1) == doctest::Approx(3.0));
  CHECK(c.lower(1, 0) == 0.0);
  CHECK(c.logdet() == doctest::Approx(std::log(36.0)));

  Eigen::MatrixXd bad(2, 2);
  bad << 1.0, 2.0, 2.0, 1.0;
  CHECK_THROWS_AS(cholesky(SymMatrix(bad)), NotPositiveDefinite);
  CHECK_FALSE(is_positive_definite(SymMatrix(bad)));
  CHECK_FALSE(is_positive_definite(SymMatrix(Eigen::MatrixXd::Zero(2, 2))));
}

TEST_CASE("cholesky recovers random lower factors") {
  RngStream rng(13, 0);
  for (int t = 0; t < 200; ++t) {
    const int d = 1 + t % 25;
    Eigen::MatrixXd l = rng.normal_matrix(d, d).triangularView<Eigen::Lower>();
    l /= std::sqrt(static_cast<double>(d));
    for (int i = 0; i < d; ++i) l(i, i) = 1.0 + std::abs(l(i, i));
    const Eigen::MatrixXd m = l * l.transpose();
    const CholeskyFactor c = cholesky(SymMatrix(m));
    REQUIRE((c.lower - l).norm() <= 1e-10 * std::max(1.0, l.norm()));
    REQUIRE((c.lower * c.lower.transpose() - m).norm() <= 1e-10 * m.norm());
    const Eigen::VectorXd b = rng.normal_vector(d);
    REQUIRE((m * c.solve(b) - b).norm() <= 1e-8 * (1.0 + b.norm()) * m.norm());
  }
}

TEST_CASE("cholesky forward error follows the condition number") {
  RngStream rng(14, 0);
  for (int t = 0; t < 200; ++t) {
    const int d = 1 + t % 25;
    Eigen::MatrixXd l = rng.normal_matrix(d, d).triangularView<Eigen::Lower>();
    for (int i = 0; i < d; ++i) l(i, i) = 0.5 + std::abs(l(i, i));
    const Eigen::MatrixXd m = l * l.transpose();
    const Eigen::VectorXd ev = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(m).eigenvalues();
    const double cond = ev(d - 1) / ev(0);
    const CholeskyFactor c = cholesky(SymMatrix(m));
    REQUIRE((c.lower - l).norm() <= 1e-14 * d * cond * std::max(1.0, l.norm()));
    REQUIRE((c.lower * c.lower.transpose() - m).norm() <= 1e-10 * m.norm());
  }
}

TEST_CASE("log_sum_exp") {
  const double inf = std::numeric_limits<double>::infinity();
  CHECK(log_sum_exp(std::vector<double>{0.0, 0.0}) == doctest::Approx(std::log(2.0)));
  CHECK(log_sum_exp(std::vector<double>{-inf, 0.0}) == 0.0);
  CHECK(log_sum_exp(std::vector<double>{1000.0, 1000.0}) ==
        doctest::Approx(1000.0 + std::log(2.0)).epsilon(1e-15));
  CHECK(log_sum_exp(std::vector<double>{-inf, -inf}) == -inf);
  CHECK_THROWS_AS(log_sum_exp(std::vector<double>{}), InvalidInput);

  RngStream rng(14, 0);
  for (int t = 0; t < 200; ++t) {
    const Eigen::VectorXd v = 10.0 * rng.normal_vector(1 + t % 50);
    const double c = 100.0 * rng.normal();
    const Eigen::VectorXd shifted = v.array() + c;
    CHECK(log_sum_exp(shifted) == doctest::Approx(log_sum_exp(v) + c).epsilon(1e-12));
  }
}

TEST_CASE("x_minus_log1p is accurate near zero") {
  for (double x : {1e-12, -1e-9, 1e-6, -0.2, 0.25, 0.3, 2.0, -0.9}) {
    const double ref = x - std::log1p(x);
    const double series = x * x / 2.0 - x * x * x / 3.0 + x * x * x * x / 4.0;
    const double want = std::abs(x) < 1e-3 ? series : ref;
    CHECK(x_minus_log1p(x) == doctest::Approx(want).epsilon(1e-12));
  }
}

TEST_CASE("RngStream reproducibility and independence") {
  RngStream a(42, 7);
  RngStream b(42, 7);
  RngStream c(42, 8);
  int differ = 0;
  for (int i = 0; i < 10000; ++i) {
    const double x = a.uniform();
    REQUIRE(x == b.uniform());
    if (x != c.uniform()) ++differ;
  }
  CHECK(differ > 9990);

  RngStream n1(5, 0);
  RngStream n2(5, 0);
  for (int i = 0; i < 1001; ++i) REQUIRE(n1.normal() == n2.normal());

  RngStream u(1, 1);
  double mean = 0.0;
  double sq = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double z = u.normal();
    mean += z;
    sq += z * z;
  }
  mean /= n;
  sq /= n;
  CHECK(std::abs(mean) < 0.02);
  CHECK(std::abs(sq - 1.0) < 0.02);
  for (int i = 0; i < 1000; ++i) {
    const double x = u.uniform();
    REQUIRE(x >= 0.0);
    REQUIRE(x < 1.0);
  }
}
