#pragma once

#include <Eigen/Dense>

#include "bvi/expfam.hpp"
#include "bvi/numerics.hpp"
#include "bvi/targets.hpp"

namespace bvi {

struct ParamMse {
  double mse_mean = 0.0;
  double mse_cov = 0.0;
};

/// |mu_bar - mu_k|^2 and |Sigma_bar - Sigma_k|_F^2 in sample-space coordinates.
ParamMse param_mse(const ExponentialFamily& fam, const NaturalParams& theta,
                   const Eigen::VectorXd& mean, const Eigen::MatrixXd& covariance);

/// F1 score of the zero pattern |v_i| <= zero_tol over indices 1..d. When
/// neither vector has a zero the score is 1.
double f1_zero_pattern(const Eigen::VectorXd& mu, const Eigen::VectorXd& beta_bar,
                       double zero_tol = 0.0);

/// sum_j (y_test_j - Phi_beta(X_test_j))^2 for a single beta.
double test_mse(const RegressionDataset& data, const Eigen::VectorXd& beta);

/// test_mse of n_beta draws beta ~ q_theta, in draw order.
Eigen::VectorXd test_mse_distribution(const ExponentialFamily& fam, const NaturalParams& theta,
                                      const RegressionDataset& data, int n_beta, RngStream& rng);

}  // namespace bvi
