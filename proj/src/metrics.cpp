#include "bvi/metrics.hpp"

#include <cmath>

#include "bvi/error.hpp"

namespace bvi {

ParamMse param_mse(const ExponentialFamily& fam, const NaturalParams& theta,
                   const Eigen::VectorXd& mean, const Eigen::MatrixXd& covariance) {
  if (mean.size() != fam.dim() || covariance.rows() != fam.dim() ||
      covariance.cols() != fam.dim()) {
    throw InvalidInput("param_mse: ground truth has the wrong dimension");
  }
  const GaussianMoments g = fam.gaussian(theta);
  return {(mean - g.mean).squaredNorm(), (covariance - g.covariance).squaredNorm()};
}

double f1_zero_pattern(const Eigen::VectorXd& mu, const Eigen::VectorXd& beta_bar,
                       double zero_tol) {
  if (mu.size() != beta_bar.size()) throw InvalidInput("f1_zero_pattern: length mismatch");
  int tp = 0;
  int fp = 0;
  int fn = 0;
  for (Eigen::Index i = 1; i < mu.size(); ++i) {
    const bool pred = std::abs(mu(i)) <= zero_tol;
    const bool truth = std::abs(beta_bar(i)) <= zero_tol;
    if (pred && truth) ++tp;
    if (pred && !truth) ++fp;
    if (!pred && truth) ++fn;
  }
  if (tp + fp + fn == 0) return 1.0;
  if (tp == 0) return 0.0;
  const double precision = static_cast<double>(tp) / (tp + fp);
  const double recall = static_cast<double>(tp) / (tp + fn);
  return 2.0 * precision * recall / (precision + recall);
}

double test_mse(const RegressionDataset& data, const Eigen::VectorXd& beta) {
  return (data.y_test - regression_predict(data.X_test, beta)).squaredNorm();
}

Eigen::VectorXd test_mse_distribution(const ExponentialFamily& fam, const NaturalParams& theta,
                                      const RegressionDataset& data, int n_beta, RngStream& rng) {
  if (fam.dim() != data.d() + 1) throw InvalidInput("test_mse_distribution: dimension mismatch");
  const Eigen::MatrixXd betas = fam.sample(theta, n_beta, rng);
  Eigen::VectorXd out(n_beta);
  for (int l = 0; l < n_beta; ++l) out(l) = test_mse(data, betas.col(l));
  return out;
}

}  // namespace bvi
