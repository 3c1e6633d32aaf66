#include <algorithm>
#include <cmath>
#include <numeric>

#include "doctest.h"

#include "bvi/error.hpp"
#include "bvi/metrics.hpp"

using namespace bvi;

TEST_CASE("parameter errors") {
  const auto fam = ExponentialFamily::full_gaussian(3);
  const Eigen::Vector3d mean(0.1, -0.2, 0.3);
  const Eigen::Matrix3d cov = Eigen::Vector3d(1.0, 2.0, 0.5).asDiagonal();
  const ParamMse same = param_mse(fam, fam.natural_from_gaussian(mean, cov), mean, cov);
  CHECK(same.mse_mean <= 1e-28);
  CHECK(same.mse_cov <= 1e-28);

  const ParamMse shifted = param_mse(fam, fam.natural_from_gaussian(mean + Eigen::Vector3d::UnitY(), cov), mean, cov);
  CHECK(shifted.mse_mean == doctest::Approx(1.0).epsilon(1e-14));

  const ParamMse doubled = param_mse(fam, fam.natural_from_gaussian(mean, 2.0 * Eigen::Matrix3d::Identity()),
                                     mean, Eigen::Matrix3d::Identity());
  CHECK(doubled.mse_cov == doctest::Approx(3.0).epsilon(1e-14));

  CHECK_THROWS_AS(param_mse(fam, fam.natural_from_gaussian(mean, cov), Eigen::Vector2d::Zero(), cov), InvalidInput);

  const auto diag = ExponentialFamily::diag_gaussian(3);
  const ParamMse d = param_mse(diag, diag.natural_from_gaussian(mean, cov), mean, Eigen::Matrix3d::Identity());
  CHECK(d.mse_cov == doctest::Approx(1.25).epsilon(1e-14));
}

TEST_CASE("zero-pattern F1") {
  Eigen::VectorXd truth(5);
  truth << 0.7, 1.0, 0.0, 0.0, -2.0;
  CHECK(f1_zero_pattern(truth, truth) == 1.0);
  Eigen::VectorXd dense(5);
  dense << 0.1, 0.2, 0.3, 0.4, 0.5;
  CHECK(f1_zero_pattern(dense, truth) == 0.0);
  Eigen::VectorXd partial(5);
  partial << 0.0, 1.0, 0.5, 0.0, -2.0;
  CHECK(f1_zero_pattern(partial, truth) == doctest::Approx(2.0 / 3.0).epsilon(1e-15));

  CHECK(f1_zero_pattern(dense, dense) == 1.0);
  Eigen::VectorXd spurious = dense;
  spurious(3) = 0.0;
  CHECK(f1_zero_pattern(spurious, dense) == 0.0);

  Eigen::VectorXd bias_only = truth;
  bias_only(0) = 0.0;
  CHECK(f1_zero_pattern(bias_only, truth) == 1.0);

  CHECK(f1_zero_pattern(Eigen::Vector3d(0.0, 1e-3, 0.0), Eigen::Vector3d(1.0, 0.0, 0.0), 1e-2) == 1.0);
  CHECK_THROWS_AS(f1_zero_pattern(Eigen::Vector3d::Zero(), truth), InvalidInput);
}

TEST_CASE("F1 is invariant under a common permutation of the coefficients") {
  RngStream rng(1, 0);
  for (int t = 0; t < 200; ++t) {
    Eigen::VectorXd truth(7);
    Eigen::VectorXd pred(7);
    for (int i = 0; i < 7; ++i) {
      truth(i) = rng.uniform() < 0.4 ? 0.0 : rng.normal();
      pred(i) = rng.uniform() < 0.4 ? 0.0 : rng.normal();
    }
    std::vector<int> perm(6);
    std::iota(perm.begin(), perm.end(), 1);
    for (int i = 5; i > 0; --i) std::swap(perm[i], perm[static_cast<int>(rng.uniform() * (i + 1))]);
    Eigen::VectorXd tp = truth;
    Eigen::VectorXd pp = pred;
    for (int i = 0; i < 6; ++i) {
      tp(i + 1) = truth(perm[i]);
      pp(i + 1) = pred(perm[i]);
    }
    REQUIRE(f1_zero_pattern(pp, tp) == f1_zero_pattern(pred, truth));
  }
}

TEST_CASE("predictive test error") {
  RngStream data_rng(2, 0);
  RegressionSpec spec;
  spec.sigma2 = 1e-12;
  const RegressionDataset data = make_regression_dataset(spec, data_rng);
  CHECK(test_mse(data, data.beta_bar) <= 1e-8);

  const auto fam = ExponentialFamily::diag_gaussian(6);
  const NaturalParams point = fam.natural_from_gaussian(data.beta_bar, 1e-14 * Eigen::MatrixXd::Identity(6, 6));
  RngStream rng(2, 1);
  const Eigen::VectorXd near = test_mse_distribution(fam, point, data, 100, rng);
  CHECK(near.size() == 100);
  CHECK(near.maxCoeff() <= 1e-6);

  const NaturalParams wide = fam.natural_from_gaussian(Eigen::VectorXd::Zero(6), 4.0 * Eigen::MatrixXd::Identity(6, 6));
  RngStream a(3, 1);
  RngStream b(3, 1);
  const Eigen::VectorXd va = test_mse_distribution(fam, wide, data, 100, a);
  CHECK(va == test_mse_distribution(fam, wide, data, 100, b));
  CHECK(va.allFinite());
  CHECK(va.minCoeff() >= 0.0);
  CHECK_THROWS_AS(test_mse_distribution(ExponentialFamily::diag_gaussian(3), NaturalParams(), data, 10, a),
                  InvalidInput);
}
