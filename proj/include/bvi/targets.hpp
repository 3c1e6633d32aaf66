#pragma once

#include <cstdint>
#include <functional>
#include <optional>

#include <Eigen/Dense>

#include "bvi/expfam.hpp"
#include "bvi/numerics.hpp"

namespace bvi {

using LogDensity = std::function<double(const Eigen::VectorXd&)>;

/// Ground truth of a Gaussian target, with theta_pi in the full family.
struct GaussianTruth {
  Eigen::VectorXd mean;
  Eigen::MatrixXd covariance;
  NaturalParams theta_pi;
  /// log Z_pi of the unnormalized density carried by the target.
  double log_normalizer = 0.0;
};

/// A black-box unnormalized log-density.
struct Target {
  int dim = 0;
  LogDensity log_unnormalized;
  std::optional<GaussianTruth> gaussian;
  std::optional<Eigen::VectorXd> beta_bar;

  double operator()(const Eigen::VectorXd& x) const { return log_unnormalized(x); }
};

struct GaussianTargetSpec {
  int d = 2;
  double kappa = 1.0;
  double mean_box = 0.5;
};

/// mu uniform in [-mean_box, mean_box]^d, Sigma = U diag(lambda) U^T with U
/// from the QR factorization of a standard Gaussian matrix and lambda
/// log-spaced from kappa^-1/2 to kappa^1/2. log pi~(x) = -1/2 (x-mu)^T Sigma^-1 (x-mu).
Target make_gaussian_target(const GaussianTargetSpec& spec, RngStream& rng);

/// Gaussian N(mean, covariance) as a target, unnormalized as above.
Target gaussian_target(const Eigen::VectorXd& mean, const Eigen::MatrixXd& covariance);

/// Target whose density is q_theta_pi of the given family, with
/// log pi~(x) = <theta_pi, Gamma(x)>.
Target in_family_target(const ExponentialFamily& fam, const NaturalParams& theta_pi);

struct RegressionSpec {
  int d = 5;
  int J = 100;
  int J_test = 50;
  double sigma2 = 0.5;
  double s = 5.0;
  double rho = 0.5;
};

struct RegressionDataset {
  Eigen::MatrixXd X;  // J x d
  Eigen::VectorXd y;
  Eigen::MatrixXd X_test;
  Eigen::VectorXd y_test;
  Eigen::VectorXd beta_bar;  // d + 1, bias first
  double sigma2 = 0.5;
  double s = 5.0;
  double rho = 0.5;

  int d() const { return static_cast<int>(X.cols()); }
};

/// phi(s) = 1 / (1 + e^-s), evaluated without overflow.
double sigmoid(double s);

/// Phi_beta(X_j) for every row of X.
Eigen::VectorXd regression_predict(const Eigen::MatrixXd& X, const Eigen::VectorXd& beta);

/// Spike-and-slab ground truth with at least one zero and one non-zero
/// among beta_1..beta_d, features uniform on [-s, s]^d, y ~ N(Phi(X), sigma2).
/// rho must lie strictly inside (0, 1).
RegressionDataset make_regression_dataset(const RegressionSpec& spec, RngStream& rng);

/// -sum_j (y_j - Phi_beta(X_j))^2 / (2 sigma2) - |beta|^2 / 2.
double regression_log_posterior(const RegressionDataset& data, const Eigen::VectorXd& beta);

/// Posterior target over beta in R^(d+1), carrying beta_bar.
Target regression_target(const RegressionDataset& data);

}  // namespace bvi
