#include "bvi/targets.hpp"

#include <cmath>
#include <memory>
#include <numbers>

#include "bvi/error.hpp"

namespace bvi {

Target gaussian_target(const Eigen::VectorXd& mean, const Eigen::MatrixXd& covariance) {
  const int d = static_cast<int>(mean.size());
  if (covariance.rows() != d || covariance.cols() != d) {
    throw InvalidInput("gaussian_target: covariance has the wrong shape");
  }
  const SymMatrix cov(covariance);
  const CholeskyFactor chol = cholesky(cov);
  const Eigen::MatrixXd prec = SymMatrix(chol.inverse()).matrix();

  GaussianTruth truth;
  truth.mean = mean;
  truth.covariance = cov.matrix();
  truth.theta_pi = NaturalParams({prec * mean, -0.5 * prec});
  truth.log_normalizer = 0.5 * d * std::log(2.0 * std::numbers::pi) + 0.5 * chol.logdet();

  auto lower = std::make_shared<const Eigen::MatrixXd>(chol.lower);
  Target t;
  t.dim = d;
  t.log_unnormalized = [lower, mean](const Eigen::VectorXd& x) {
    const Eigen::VectorXd z = lower->triangularView<Eigen::Lower>().solve(x - mean);
    return -0.5 * z.squaredNorm();
  };
  t.gaussian = std::move(truth);
  return t;
}

Target make_gaussian_target(const GaussianTargetSpec& spec, RngStream& rng) {
  if (spec.d < 1) throw InvalidInput("gaussian target: d must be >= 1");
  if (!(spec.kappa >= 1.0)) throw InvalidInput("gaussian target: kappa must be >= 1");
  const int d = spec.d;
  Eigen::VectorXd mean(d);
  for (int i = 0; i < d; ++i) mean(i) = rng.uniform(-spec.mean_box, spec.mean_box);
  const Eigen::MatrixXd g = rng.normal_matrix(d, d);
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
  const Eigen::MatrixXd u = qr.householderQ() * Eigen::MatrixXd::Identity(d, d);
  Eigen::VectorXd lambda(d);
  const double lo = -0.5 * std::log(spec.kappa);
  for (int i = 0; i < d; ++i) {
    const double frac = d == 1 ? 0.5 : static_cast<double>(i) / (d - 1);
    lambda(i) = std::exp(lo + frac * std::log(spec.kappa));
  }
  const Eigen::MatrixXd cov = u * lambda.asDiagonal() * u.transpose();
  return gaussian_target(mean, cov);
}

Target in_family_target(const ExponentialFamily& fam, const NaturalParams& theta_pi) {
  fam.require_domain(theta_pi);
  Target t;
  t.dim = fam.dim();
  t.log_unnormalized = [fam, theta_pi](const Eigen::VectorXd& x) {
    return theta_pi.dot(fam.sufficient_statistics(x));
  };
  if (fam.kind() != FamilyKind::CenteredGaussian1D) {
    const GaussianMoments g = fam.gaussian(theta_pi);
    Target full = gaussian_target(g.mean, g.covariance);
    t.gaussian = std::move(full.gaussian);
    t.gaussian->log_normalizer = fam.log_partition(theta_pi);
  }
  return t;
}

double sigmoid(double s) {
  if (s >= 0.0) return 1.0 / (1.0 + std::exp(-s));
  const double e = std::exp(s);
  return e / (1.0 + e);
}

Eigen::VectorXd regression_predict(const Eigen::MatrixXd& X, const Eigen::VectorXd& beta) {
  if (beta.size() != X.cols() + 1) throw InvalidInput("beta must have length d + 1");
  Eigen::VectorXd lin = X * beta.tail(X.cols());
  lin.array() += beta(0);
  return lin.unaryExpr([](double s) { return sigmoid(s); });
}

RegressionDataset make_regression_dataset(const RegressionSpec& spec, RngStream& rng) {
  if (spec.d < 1 || spec.J < 1 || spec.J_test < 1) {
    throw InvalidInput("regression dataset: sizes must be >= 1");
  }
  if (!(spec.sigma2 > 0.0)) throw InvalidInput("regression dataset: sigma2 must be positive");
  if (!(spec.s > 0.0)) throw InvalidInput("regression dataset: s must be positive");
  if (!(spec.rho > 0.0 && spec.rho < 1.0)) {
    throw InvalidInput("regression dataset: rho must lie strictly between 0 and 1");
  }
  const int d = spec.d;
  RegressionDataset data;
  data.sigma2 = spec.sigma2;
  data.s = spec.s;
  data.rho = spec.rho;
  data.beta_bar.resize(d + 1);
  for (;;) {
    data.beta_bar(0) = rng.normal();
    int zeros = 0;
    for (int i = 1; i <= d; ++i) {
      if (rng.uniform() < spec.rho) {
        data.beta_bar(i) = 0.0;
        ++zeros;
      } else {
        data.beta_bar(i) = rng.normal();
      }
    }
    if (zeros >= 1 && zeros <= d - 1) break;
  }
  const double sd = std::sqrt(spec.sigma2);
  auto fill = [&](int rows, Eigen::MatrixXd& X, Eigen::VectorXd& y) {
    X.resize(rows, d);
    for (int j = 0; j < rows; ++j) {
      for (int i = 0; i < d; ++i) X(j, i) = rng.uniform(-spec.s, spec.s);
    }
    y = regression_predict(X, data.beta_bar);
    for (int j = 0; j < rows; ++j) y(j) += sd * rng.normal();
  };
  fill(spec.J, data.X, data.y);
  fill(spec.J_test, data.X_test, data.y_test);
  return data;
}

double regression_log_posterior(const RegressionDataset& data, const Eigen::VectorXd& beta) {
  if (beta.size() != data.X.cols() + 1) {
    throw InvalidInput("regression_log_posterior: beta must have length d + 1");
  }
  const Eigen::VectorXd resid = data.y - regression_predict(data.X, beta);
  return -resid.squaredNorm() / (2.0 * data.sigma2) - 0.5 * beta.squaredNorm();
}

Target regression_target(const RegressionDataset& data) {
  auto shared = std::make_shared<const RegressionDataset>(data);
  Target t;
  t.dim = data.d() + 1;
  t.log_unnormalized = [shared](const Eigen::VectorXd& beta) {
    return regression_log_posterior(*shared, beta);
  };
  t.beta_bar = data.beta_bar;
  return t;
}

}  // namespace bvi
