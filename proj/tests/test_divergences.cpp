#include <cmath>
#include <numbers>

#include "doctest.h"

#include "bvi/divergences.hpp"
#include "bvi/error.hpp"
#include "test_helpers.hpp"

using namespace bvi;
using bvi::testing::random_theta;

namespace {

NaturalParams full1(double mean, double var) {
  return ExponentialFamily::full_gaussian(1).natural_from_gaussian(
      Eigen::VectorXd::Constant(1, mean), Eigen::MatrixXd::Constant(1, 1, var));
}

NaturalParams centered(double t) {
  return NaturalParams({Eigen::VectorXd(0), Eigen::MatrixXd::Constant(1, 1, t)});
}

LogDensity1D normal_logpdf(double mean, double var) {
  return [=](double x) {
    return -0.5 * std::log(2.0 * std::numbers::pi * var) - 0.5 * (x - mean) * (x - mean) / var;
  };
}

double naive_bregman(const ExponentialFamily& fam, const NaturalParams& a, const NaturalParams& b) {
  return fam.log_partition(b) - fam.log_partition(a) -
         fam.moments(a).dot(static_cast<const ParamVector&>(b) - a);
}

std::vector<ExponentialFamily> test_families() {
  RngStream rng(21, 0);
  return {ExponentialFamily::full_gaussian(1), ExponentialFamily::full_gaussian(3),
          ExponentialFamily::diag_gaussian(3),
          ExponentialFamily::diag_gaussian(bvi::testing::random_orthonormal(rng, 3)),
          ExponentialFamily::centered_gaussian_1d()};
}

}  // namespace

TEST_CASE("kl examples") {
  const auto f1 = ExponentialFamily::full_gaussian(1);
  CHECK(kl_in_family(f1, full1(0.3, 2.0), full1(0.3, 2.0)) == 0.0);
  CHECK(kl_in_family(f1, full1(0.0, 1.0), full1(0.0, 2.0)) ==
        doctest::Approx(0.0965735902799726547086).epsilon(1e-14));
  CHECK(kl_in_family(f1, full1(1.0, 1.0), full1(0.0, 1.0)) == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(bregman_divergence(f1, full1(0.0, 2.0), full1(0.0, 1.0)) ==
        doctest::Approx(0.0965735902799726547086).epsilon(1e-14));
  CHECK_THROWS_AS(kl_in_family(f1, full1(0.0, 1.0), NaturalParams(f1.zero())), DomainViolation);
}

TEST_CASE("kl agrees with the Bregman formula and with quadrature") {
  RngStream rng(22, 0);
  for (const auto& fam : test_families()) {
    for (int t = 0; t < 200; ++t) {
      const NaturalParams a = random_theta(fam, rng);
      const NaturalParams b = random_theta(fam, rng);
      const double kl = kl_in_family(fam, a, b);
      REQUIRE(kl == doctest::Approx(naive_bregman(fam, a, b)).epsilon(1e-9));
      REQUIRE(kl == doctest::Approx(bregman_divergence(fam, b, a)).epsilon(1e-15));
    }
  }
  const auto f1 = ExponentialFamily::full_gaussian(1);
  for (int t = 0; t < 20; ++t) {
    const double ma = rng.normal();
    const double mb = rng.normal();
    const double va = rng.uniform(0.3, 3.0);
    const double vb = rng.uniform(0.3, 3.0);
    const auto grid = QuadratureGrid::covering({{ma, std::sqrt(va)}, {mb, std::sqrt(vb)}});
    const double quad = quadrature_renyi(normal_logpdf(ma, va), normal_logpdf(mb, vb), 1.0, grid);
    CHECK(std::abs(kl_in_family(f1, full1(ma, va), full1(mb, vb)) - quad) <= 1e-7);
  }
}

TEST_CASE("kl keeps relative accuracy for nearby points") {
  const auto f = ExponentialFamily::full_gaussian(2);
  const NaturalParams a = f.natural_from_gaussian(Eigen::Vector2d(1.0, -1.0), Eigen::Matrix2d::Identity());
  const NaturalParams b = f.natural_from_gaussian(Eigen::Vector2d(1.0 + 1e-7, -1.0), Eigen::Matrix2d::Identity());
  CHECK(kl_in_family(f, a, b) == doctest::Approx(0.5e-14).epsilon(1e-6));
}

TEST_CASE("renyi examples") {
  const auto c = ExponentialFamily::centered_gaussian_1d();
  CHECK(renyi_in_family(c, 0.5, centered(-0.5), centered(-0.5)) == 0.0);
  const double rd = renyi_in_family(c, 0.5, centered(-0.5), centered(-0.25));
  CHECK(rd == doctest::Approx(0.0588915178281917).epsilon(1e-13));
  const auto grid = QuadratureGrid::covering({{0.0, 1.0}, {0.0, std::sqrt(2.0)}});
  CHECK(std::abs(quadrature_renyi(normal_logpdf(0, 1), normal_logpdf(0, 2), 0.5, grid) - rd) <= 1e-6);

  const auto f1 = ExponentialFamily::full_gaussian(1);
  const double kl = renyi_in_family(f1, 1.0, full1(0, 1), full1(0, 2));
  CHECK(kl == doctest::Approx(0.0965735902799726547086).epsilon(1e-14));
  const double near = renyi_in_family(f1, 0.999, full1(0, 1), full1(0, 2));
  CHECK(near == doctest::Approx(0.0965110694388237).epsilon(1e-12));
  CHECK(std::abs(near - kl) <= 1e-3 * kl);
  CHECK(renyi_in_family(f1, 0.5, full1(0, 1), full1(1, 1)) == doctest::Approx(0.25).epsilon(1e-14));
  CHECK(renyi_in_family(f1, 1.5, full1(0.3, 0.8), full1(-0.2, 1.1)) ==
        doctest::Approx(0.181393494049382).epsilon(1e-12));
  CHECK(renyi_in_family(f1, 0.25, full1(0.3, 0.8), full1(-0.2, 1.1)) ==
        doctest::Approx(0.0423801029876547).epsilon(1e-12));

  // alpha = 3 with q much narrower than pi: 3 theta_pi - 2 theta > 0.
  CHECK_THROWS_AS(renyi_in_family(c, 3.0, centered(-0.1), centered(-1.0)), DomainViolation);
  CHECK_THROWS_AS(renyi_in_family(c, 0.0, centered(-0.5), centered(-0.5)), InvalidInput);
}

TEST_CASE("renyi is continuous in alpha at 1 from below") {
  RngStream rng(23, 0);
  for (const auto& fam : test_families()) {
    for (int t = 0; t < 50; ++t) {
      const NaturalParams a = random_theta(fam, rng);
      const NaturalParams b = random_theta(fam, rng);
      const double kl = renyi_in_family(fam, 1.0, a, b);
      REQUIRE(std::abs(renyi_in_family(fam, 1.0 - 1e-4, a, b) - kl) <= 1e-3 * kl + 1e-12);
    }
  }
}

TEST_CASE("renyi agrees with quadrature in one dimension") {
  RngStream rng(24, 0);
  const auto f1 = ExponentialFamily::full_gaussian(1);
  for (double alpha : {0.25, 0.5, 0.75, 1.0, 1.5}) {
    for (int t = 0; t < 10; ++t) {
      const double mp = rng.normal();
      const double mq = rng.normal();
      const double vp = rng.uniform(0.5, 2.0);
      const double vq = rng.uniform(0.8, 2.0) * vp;
      const auto grid = QuadratureGrid::covering({{mp, std::sqrt(vp)}, {mq, std::sqrt(vq)}});
      const double quad = quadrature_renyi(normal_logpdf(mp, vp), normal_logpdf(mq, vq), alpha, grid);
      CHECK(std::abs(renyi_in_family(f1, alpha, full1(mp, vp), full1(mq, vq)) - quad) <= 1e-7);
    }
  }
}

TEST_CASE("nonnegativity and identity of indiscernibles") {
  RngStream rng(25, 0);
  for (const auto& fam : test_families()) {
    for (int t = 0; t < 1000; ++t) {
      const NaturalParams a = random_theta(fam, rng);
      const NaturalParams b = random_theta(fam, rng);
      REQUIRE(kl_in_family(fam, a, b) > 0.0);
      REQUIRE(kl_in_family(fam, a, a) == 0.0);
      for (double alpha : {0.25, 0.5, 0.75, 1.0, 1.5}) {
        REQUIRE(renyi_in_family(fam, alpha, a, a) == 0.0);
        NaturalParams blend(alpha * static_cast<const ParamVector&>(a) +
                            (1.0 - alpha) * static_cast<const ParamVector&>(b));
        if (!fam.is_in_domain(blend)) continue;
        REQUIRE(renyi_in_family(fam, alpha, a, b) > 0.0);
      }
    }
  }
}

TEST_CASE("geometric average") {
  const auto c = ExponentialFamily::centered_gaussian_1d();
  CHECK(geometric_average_in_family(c, 1.0, centered(-0.5), centered(-1.0)).mat(0, 0) == -0.5);
  CHECK(geometric_average_in_family(c, 0.0, centered(-0.5), centered(-1.0)).mat(0, 0) == -1.0);
  CHECK(geometric_average_in_family(c, 0.5, centered(-0.5), centered(-1.0)).mat(0, 0) == -0.75);
  CHECK_THROWS_AS(geometric_average_in_family(c, 3.0, centered(-0.1), centered(-1.0)), DomainViolation);

  const auto f1 = ExponentialFamily::full_gaussian(1);
  const MeanParams m = in_family_provider(f1, 0.5, full1(0.3, 0.8))(full1(-0.2, 1.1));
  CHECK(m.vec(0) == doctest::Approx(0.0894736842105263).epsilon(1e-13));
  CHECK(m.mat(0, 0) == doctest::Approx(0.934321329639889).epsilon(1e-13));
}

TEST_CASE("gradient of f") {
  RngStream rng(26, 0);
  const auto c = ExponentialFamily::centered_gaussian_1d();
  const NaturalParams tp = centered(-0.5);
  for (double alpha : {0.5, 1.0}) {
    const auto provider = in_family_provider(c, alpha, tp);
    CHECK(grad_f(c, provider, tp).norm() <= 1e-15);
    for (int t = 0; t < 50; ++t) {
      const double th = -rng.uniform(0.1, 2.0);
      const double h = 1e-6 * std::abs(th);
      const double fd = (renyi_in_family(c, alpha, tp, centered(th + h)) -
                         renyi_in_family(c, alpha, tp, centered(th - h))) /
                        (2 * h);
      const double g = grad_f(c, provider, centered(th)).mat(0, 0);
      REQUIRE(std::abs(fd - g) <= 1e-4 * std::max(std::abs(g), 1e-3));
    }
  }

  for (const auto& fam : test_families()) {
    const NaturalParams pi = random_theta(fam, rng);
    const NaturalParams theta = random_theta(fam, rng);
    const ParamVector g = grad_f(fam, in_family_provider(fam, 1.0, pi), theta);
    CHECK((g - (fam.moments(theta) - fam.moments(pi))).norm() <= 1e-14 * (1.0 + g.norm()));
    for (double alpha : {0.5, 1.0, 1.5}) {
      const auto provider = in_family_provider(fam, alpha, pi);
      const ParamVector ga = grad_f(fam, provider, theta);
      const double h = 1e-6;
      for (Eigen::Index i = 0; i < theta.size(); ++i) {
        const ParamVector e = bvi::testing::basis_direction(fam, i);
        const double fd = (renyi_in_family(fam, alpha, pi, NaturalParams(theta + h * e)) -
                           renyi_in_family(fam, alpha, pi, NaturalParams(theta - h * e))) /
                          (2 * h);
        REQUIRE(std::abs(fd - ga.dot(e)) <= 1e-5 * std::max(1.0, std::abs(fd)));
      }
    }
  }
}

TEST_CASE("second derivative in one dimension") {
  CHECK(hessian_f_1d(1.0, -0.5, -0.5) == doctest::Approx(2.0).epsilon(1e-15));
  CHECK(hessian_f_1d(0.5, -0.5, -0.5) == doctest::Approx(1.0).epsilon(1e-15));
  const auto c = ExponentialFamily::centered_gaussian_1d();
  RngStream rng(27, 0);
  for (double alpha : {0.25, 0.5, 1.0, 1.5}) {
    for (int t = 0; t < 20; ++t) {
      const double tp = -rng.uniform(0.2, 2.0);
      const double th = -rng.uniform(0.2, 2.0);
      if (alpha * tp + (1 - alpha) * th >= -0.05) continue;
      const double h = 1e-4 * std::abs(th);
      const double f0 = renyi_in_family(c, alpha, centered(tp), centered(th));
      const double fp = renyi_in_family(c, alpha, centered(tp), centered(th + h));
      const double fm = renyi_in_family(c, alpha, centered(tp), centered(th - h));
      const double fd = (fp - 2 * f0 + fm) / (h * h);
      const double exact = hessian_f_1d(alpha, tp, th);
      REQUIRE(std::abs(fd - exact) <= 1e-4 * std::max(1.0, std::abs(exact)));
    }
  }
  const double fd = (renyi_in_family(c, 0.5, centered(-0.5), centered(-0.5 + 1e-4)) -
                     2 * renyi_in_family(c, 0.5, centered(-0.5), centered(-0.5)) +
                     renyi_in_family(c, 0.5, centered(-0.5), centered(-0.5 - 1e-4))) /
                    1e-8;
  CHECK(fd == doctest::Approx(1.0).epsilon(1e-5));

  double prev = 0.0;
  for (int k = 1; k <= 6; ++k) {
    const double v = hessian_f_1d(0.5, -0.5, -std::pow(10.0, -k));
    CHECK(v > prev);
    prev = v;
  }
  CHECK(prev > 1e11);
  CHECK_THROWS_AS(hessian_f_1d(0.5, -0.5, 0.0), DomainViolation);
}

TEST_CASE("relative smoothness and strong convexity") {
  RngStream rng(28, 0);
  for (const auto& fam : test_families()) {
    const NaturalParams pi = random_theta(fam, rng);
    for (double alpha : {0.25, 0.5, 0.75, 1.0, 1.5, 2.0}) {
      const auto provider = in_family_provider(fam, alpha, pi);
      int checked = 0;
      for (int t = 0; t < 500; ++t) {
        const NaturalParams a = random_theta(fam, rng);
        const NaturalParams b = random_theta(fam, rng);
        double gap = 0.0;
        try {
          gap = renyi_in_family(fam, alpha, pi, a) - renyi_in_family(fam, alpha, pi, b) -
                grad_f(fam, provider, b).dot(static_cast<const ParamVector&>(a) - b);
        } catch (const DomainViolation&) {
          continue;
        }
        ++checked;
        const double da = bregman_divergence(fam, a, b);
        const double slack = 1e-10 + 1e-10 * std::abs(da);
        if (alpha <= 1.0) REQUIRE(gap <= da + slack);
        if (alpha >= 1.0) REQUIRE(gap >= da - slack);
      }
      CHECK(checked > 50);
    }
  }
}

TEST_CASE("local quadratic behavior near the target") {
  RngStream rng(29, 0);
  const double h = 1e-5;
  for (const auto& fam : test_families()) {
    const NaturalParams pi = random_theta(fam, rng);
    for (double alpha : {0.5, 1.0, 1.5}) {
      ParamVector u = fam.zero();
      for (Eigen::Index i = 0; i < u.size(); ++i) u.coeff(i) = rng.normal();
      if (fam.kind() == FamilyKind::FullGaussian) u.mat = 0.5 * (u.mat + u.mat.transpose()).eval();
      u *= 1.0 / u.norm();
      const double curvature = u.dot(fam.moments(NaturalParams(pi + h * u)) -
                                     fam.moments(NaturalParams(pi - h * u))) /
                               (2 * h);
      double ratio[2];
      int idx = 0;
      for (double v : {1e-2, 1e-3}) {
        const NaturalParams theta(pi + v * u);
        const double quad = 0.5 * alpha * v * v * curvature;
        ratio[idx++] = std::abs(renyi_in_family(fam, alpha, pi, theta) - quad) / (v * v);
      }
      CHECK(ratio[0] >= 5.0 * ratio[1]);
    }
  }
}

TEST_CASE("skew symmetry of the Renyi divergence") {
  RngStream rng(30, 0);
  for (double alpha : {0.25, 0.5, 0.75}) {
    for (int t = 0; t < 5; ++t) {
      const double mp = rng.normal();
      const double mq = rng.normal();
      const double vp = rng.uniform(0.5, 2.0);
      const double vq = rng.uniform(0.5, 2.0);
      const auto grid = QuadratureGrid::covering({{mp, std::sqrt(vp)}, {mq, std::sqrt(vq)}});
      const double lhs = quadrature_renyi(normal_logpdf(mq, vq), normal_logpdf(mp, vp), 1.0 - alpha, grid);
      const double rhs = quadrature_renyi(normal_logpdf(mp, vp), normal_logpdf(mq, vq), alpha, grid);
      CHECK(lhs == doctest::Approx((1.0 - alpha) / alpha * rhs).epsilon(1e-8));
    }
  }
}

TEST_CASE("quadrature oracle") {
  const auto grid = QuadratureGrid::covering({{0.0, 1.0}});
  CHECK(std::abs(quadrature_renyi(normal_logpdf(0, 1), normal_logpdf(0, 1), 0.5, grid)) <= 1e-10);
  CHECK(std::abs(quadrature_renyi(normal_logpdf(0, 1), normal_logpdf(0, 1), 1.0, grid)) <= 1e-10);
  CHECK(std::abs(quadrature_log_integral(normal_logpdf(0.0, 1.0), grid)) <= 1e-9);
  const auto g2 = QuadratureGrid::covering({{0.0, 1.0}, {0.0, std::sqrt(2.0)}});
  CHECK(std::abs(quadrature_renyi(normal_logpdf(0, 1), normal_logpdf(0, 2), 1.0, g2) - 0.0965735902799727) <= 1e-7);
  const auto g3 = QuadratureGrid::covering({{0.0, 1.0}, {1.0, 1.0}});
  const auto f1 = ExponentialFamily::full_gaussian(1);
  CHECK(std::abs(quadrature_renyi(normal_logpdf(0, 1), normal_logpdf(1, 1), 0.5, g3) -
                 renyi_in_family(f1, 0.5, full1(0, 1), full1(1, 1))) <= 1e-7);

  CHECK_THROWS_AS(quadrature_log_integral([](double) { return std::nan(""); }, grid), OracleFailure);
  CHECK_THROWS_AS(QuadratureGrid(0.0, 1.0, 4), InvalidInput);
  CHECK_THROWS_AS(QuadratureGrid(1.0, 0.0), InvalidInput);

  const auto provider = quadrature_moments_provider(f1, 0.5, normal_logpdf(0.3, 0.8),
                                                    QuadratureGrid(-15.0, 15.0));
  const MeanParams m = provider(full1(-0.2, 1.1));
  CHECK(m.vec(0) == doctest::Approx(0.0894736842105263).epsilon(1e-9));
  CHECK(m.mat(0, 0) == doctest::Approx(0.934321329639889).epsilon(1e-9));
}
