#include "bvi/expfam.hpp"

#include <cmath>
#include <numbers>

#include "bvi/error.hpp"

namespace bvi {

namespace {

constexpr double kLog2Pi = 1.8378770664093454836;  // log(2 pi)

Eigen::MatrixXd outer(const Eigen::VectorXd& a) { return a * a.transpose(); }

}  // namespace

std::string to_string(FamilyKind kind) {
  switch (kind) {
    case FamilyKind::FullGaussian:
      return "full_gaussian";
    case FamilyKind::DiagGaussian:
      return "diag_gaussian";
    case FamilyKind::CenteredGaussian1D:
      return "centered_gaussian_1d";
  }
  return "unknown";
}

FamilyKind family_kind_from_string(const std::string& name) {
  if (name == "full_gaussian") return FamilyKind::FullGaussian;
  if (name == "diag_gaussian") return FamilyKind::DiagGaussian;
  if (name == "centered_gaussian_1d") return FamilyKind::CenteredGaussian1D;
  throw InvalidInput("unknown family '" + name + "'");
}

ExponentialFamily::ExponentialFamily(FamilyKind kind, int dim, Eigen::MatrixXd frame)
    : kind_(kind), dim_(dim), frame_(std::move(frame)) {
  frame_is_identity_ = frame_.isIdentity(0.0);
}

ExponentialFamily ExponentialFamily::full_gaussian(int d) {
  if (d < 1) throw InvalidInput("full_gaussian: d must be >= 1");
  return ExponentialFamily(FamilyKind::FullGaussian, d, Eigen::MatrixXd::Identity(d, d));
}

ExponentialFamily ExponentialFamily::diag_gaussian(int d) {
  if (d < 1) throw InvalidInput("diag_gaussian: d must be >= 1");
  return ExponentialFamily(FamilyKind::DiagGaussian, d, Eigen::MatrixXd::Identity(d, d));
}

ExponentialFamily ExponentialFamily::diag_gaussian(const Eigen::MatrixXd& frame) {
  const auto d = frame.rows();
  if (d < 1 || frame.cols() != d) throw InvalidInput("diag_gaussian: frame must be square");
  const double err =
      (frame.transpose() * frame - Eigen::MatrixXd::Identity(d, d)).norm();
  if (!(err <= 1e-10 * std::sqrt(static_cast<double>(d)))) {
    throw InvalidInput("diag_gaussian: frame is not orthonormal");
  }
  return ExponentialFamily(FamilyKind::DiagGaussian, static_cast<int>(d), frame);
}

ExponentialFamily ExponentialFamily::centered_gaussian_1d() {
  return ExponentialFamily(FamilyKind::CenteredGaussian1D, 1, Eigen::MatrixXd::Identity(1, 1));
}

ParamVector ExponentialFamily::zero() const {
  switch (kind_) {
    case FamilyKind::FullGaussian:
      return {Eigen::VectorXd::Zero(dim_), Eigen::MatrixXd::Zero(dim_, dim_)};
    case FamilyKind::DiagGaussian:
      return {Eigen::VectorXd::Zero(dim_), Eigen::MatrixXd::Zero(dim_, 1)};
    case FamilyKind::CenteredGaussian1D:
      return {Eigen::VectorXd(0), Eigen::MatrixXd::Zero(1, 1)};
  }
  return {};
}

bool ExponentialFamily::has_shape(const ParamVector& p) const { return zero().same_shape(p); }

bool ExponentialFamily::is_in_domain(const NaturalParams& theta) const {
  if (!has_shape(theta) || !theta.all_finite()) return false;
  switch (kind_) {
    case FamilyKind::FullGaussian:
      return is_positive_definite(SymMatrix(-2.0 * theta.mat));
    case FamilyKind::DiagGaussian:
    case FamilyKind::CenteredGaussian1D:
      return (theta.mat.array() < 0.0).all();
  }
  return false;
}

bool ExponentialFamily::is_in_dual_domain(const MeanParams& eta) const {
  if (!has_shape(eta) || !eta.all_finite()) return false;
  switch (kind_) {
    case FamilyKind::FullGaussian:
      return is_positive_definite(SymMatrix(eta.mat - outer(eta.vec)));
    case FamilyKind::DiagGaussian:
      return (eta.mat.col(0).array() - eta.vec.array().square() > 0.0).all();
    case FamilyKind::CenteredGaussian1D:
      return eta.mat(0, 0) > 0.0;
  }
  return false;
}

void ExponentialFamily::require_domain(const NaturalParams& theta) const {
  if (!has_shape(theta)) throw InvalidInput("natural parameters have the wrong shape");
  if (!is_in_domain(theta)) {
    throw DomainViolation("natural parameters outside the interior of the domain (" +
                          to_string(kind_) + ")");
  }
}

Eigen::VectorXd ExponentialFamily::to_frame(const Eigen::VectorXd& x) const {
  return frame_is_identity_ ? x : Eigen::VectorXd(frame_.transpose() * x);
}

MeanParams ExponentialFamily::sufficient_statistics(const Eigen::VectorXd& x) const {
  if (x.size() != dim_) throw InvalidInput("sufficient_statistics: dimension mismatch");
  switch (kind_) {
    case FamilyKind::FullGaussian:
      return MeanParams({x, outer(x)});
    case FamilyKind::DiagGaussian: {
      Eigen::VectorXd z = to_frame(x);
      Eigen::MatrixXd sq = z.array().square().matrix();
      return MeanParams({z, sq});
    }
    case FamilyKind::CenteredGaussian1D:
      return MeanParams({Eigen::VectorXd(0), Eigen::MatrixXd::Constant(1, 1, x(0) * x(0))});
  }
  return {};
}

double ExponentialFamily::log_partition(const NaturalParams& theta) const {
  require_domain(theta);
  switch (kind_) {
    case FamilyKind::FullGaussian: {
      const CholeskyFactor chol = cholesky(SymMatrix(-2.0 * theta.mat));
      const Eigen::VectorXd mu = chol.solve(theta.vec);
      return 0.5 * dim_ * kLog2Pi + 0.5 * theta.vec.dot(mu) - 0.5 * chol.logdet();
    }
    case FamilyKind::DiagGaussian: {
      const Eigen::ArrayXd p = -2.0 * theta.mat.col(0).array();
      return 0.5 * dim_ * kLog2Pi + 0.5 * (theta.vec.array().square() / p).sum() -
             0.5 * p.log().sum();
    }
    case FamilyKind::CenteredGaussian1D:
      return 0.5 * kLog2Pi - 0.5 * std::log(-2.0 * theta.mat(0, 0));
  }
  return 0.0;
}

PrecisionForm ExponentialFamily::precision_form(const NaturalParams& theta) const {
  require_domain(theta);
  switch (kind_) {
    case FamilyKind::FullGaussian: {
      Eigen::MatrixXd prec = SymMatrix(-2.0 * theta.mat).matrix();
      const CholeskyFactor chol = cholesky(SymMatrix(prec));
      return {chol.solve(theta.vec), std::move(prec)};
    }
    case FamilyKind::DiagGaussian: {
      const Eigen::VectorXd p = -2.0 * theta.mat.col(0);
      return {(theta.vec.array() / p.array()).matrix(), p.asDiagonal().toDenseMatrix()};
    }
    case FamilyKind::CenteredGaussian1D:
      return {Eigen::VectorXd::Zero(1), Eigen::MatrixXd::Constant(1, 1, -2.0 * theta.mat(0, 0))};
  }
  return {};
}

MeanParams ExponentialFamily::moments(const NaturalParams& theta) const {
  require_domain(theta);
  switch (kind_) {
    case FamilyKind::FullGaussian: {
      const CholeskyFactor chol = cholesky(SymMatrix(-2.0 * theta.mat));
      Eigen::VectorXd mu = chol.solve(theta.vec);
      Eigen::MatrixXd second = chol.inverse() + outer(mu);
      return MeanParams({std::move(mu), SymMatrix(second).matrix()});
    }
    case FamilyKind::DiagGaussian: {
      const Eigen::ArrayXd p = -2.0 * theta.mat.col(0).array();
      Eigen::VectorXd m = (theta.vec.array() / p).matrix();
      Eigen::MatrixXd second = (m.array().square() + 1.0 / p).matrix();
      return MeanParams({std::move(m), std::move(second)});
    }
    case FamilyKind::CenteredGaussian1D:
      return MeanParams(
          {Eigen::VectorXd(0), Eigen::MatrixXd::Constant(1, 1, -0.5 / theta.mat(0, 0))});
  }
  return {};
}

NaturalParams ExponentialFamily::natural_from_moments(const MeanParams& eta) const {
  if (!has_shape(eta)) throw InvalidInput("mean parameters have the wrong shape");
  if (!eta.all_finite()) throw DualDomainViolation("mean parameters are not finite");
  switch (kind_) {
    case FamilyKind::FullGaussian: {
      CholeskyFactor chol;
      try {
        chol = cholesky(SymMatrix(eta.mat - outer(eta.vec)));
      } catch (const NotPositiveDefinite&) {
        throw DualDomainViolation("moment covariance block is not positive definite");
      }
      const Eigen::MatrixXd prec = chol.inverse();
      return NaturalParams({prec * eta.vec, -0.5 * prec});
    }
    case FamilyKind::DiagGaussian: {
      const Eigen::ArrayXd var = eta.mat.col(0).array() - eta.vec.array().square();
      if (!(var > 0.0).all()) {
        throw DualDomainViolation("moment variance block is not positive");
      }
      return NaturalParams({(eta.vec.array() / var).matrix(), (-0.5 / var).matrix()});
    }
    case FamilyKind::CenteredGaussian1D: {
      const double second = eta.mat(0, 0);
      if (!(second > 0.0)) throw DualDomainViolation("second moment must be positive");
      return NaturalParams({Eigen::VectorXd(0), Eigen::MatrixXd::Constant(1, 1, -0.5 / second)});
    }
  }
  return {};
}

double ExponentialFamily::log_density(const NaturalParams& theta, const Eigen::VectorXd& x) const {
  const double a = log_partition(theta);
  return theta.dot(sufficient_statistics(x)) - a;
}

Eigen::VectorXd ExponentialFamily::log_density_columns(const NaturalParams& theta,
                                                      const Eigen::MatrixXd& x) const {
  if (x.rows() != dim_) throw InvalidInput("log_density_columns: dimension mismatch");
  const double a = log_partition(theta);
  Eigen::VectorXd out(x.cols());
  switch (kind_) {
    case FamilyKind::FullGaussian: {
      const Eigen::MatrixXd t2x = theta.mat * x;
      out = (x.transpose() * theta.vec).array() + (x.array() * t2x.array()).colwise().sum().transpose();
      break;
    }
    case FamilyKind::DiagGaussian: {
      const Eigen::MatrixXd z = frame_is_identity_ ? x : Eigen::MatrixXd(frame_.transpose() * x);
      out = (z.transpose() * theta.vec) + z.array().square().matrix().transpose() * theta.mat.col(0);
      break;
    }
    case FamilyKind::CenteredGaussian1D:
      out = theta.mat(0, 0) * x.row(0).array().square().transpose();
      break;
  }
  out.array() -= a;
  return out;
}

MeanParams ExponentialFamily::weighted_statistics(const Eigen::MatrixXd& x,
                                                  const Eigen::VectorXd& w) const {
  if (x.rows() != dim_ || x.cols() != w.size()) {
    throw InvalidInput("weighted_statistics: dimension mismatch");
  }
  switch (kind_) {
    case FamilyKind::FullGaussian: {
      Eigen::MatrixXd second = x * w.asDiagonal() * x.transpose();
      return MeanParams({x * w, SymMatrix(second).matrix()});
    }
    case FamilyKind::DiagGaussian: {
      const Eigen::MatrixXd z = frame_is_identity_ ? x : Eigen::MatrixXd(frame_.transpose() * x);
      Eigen::MatrixXd second = z.array().square().matrix() * w;
      return MeanParams({z * w, std::move(second)});
    }
    case FamilyKind::CenteredGaussian1D:
      return MeanParams({Eigen::VectorXd(0),
                         Eigen::MatrixXd::Constant(1, 1, x.row(0).array().square().matrix().dot(w))});
  }
  return {};
}

Eigen::MatrixXd ExponentialFamily::sample(const NaturalParams& theta, int n,
                                          RngStream& rng) const {
  require_domain(theta);
  if (n < 1) throw InvalidInput("sample: n must be >= 1");
  const GaussianMoments g = gaussian(theta);
  Eigen::MatrixXd factor;
  if (kind_ == FamilyKind::DiagGaussian) {
    // Q diag(sigma), a square root of the covariance.
    const Eigen::VectorXd sd = (-0.5 / theta.mat.col(0).array()).sqrt().matrix();
    factor = frame_ * sd.asDiagonal();
  } else {
    factor = cholesky(SymMatrix(g.covariance)).lower;
  }
  Eigen::MatrixXd x = factor * rng.normal_matrix(dim_, n);
  x.colwise() += g.mean;
  return x;
}

NaturalParams ExponentialFamily::natural_from_gaussian(const Eigen::VectorXd& mean,
                                                       const Eigen::MatrixXd& covariance) const {
  if (covariance.rows() != dim_ || covariance.cols() != dim_) {
    throw InvalidInput("natural_from_gaussian: covariance has the wrong shape");
  }
  switch (kind_) {
    case FamilyKind::FullGaussian: {
      if (mean.size() != dim_) throw InvalidInput("natural_from_gaussian: mean has the wrong size");
      CholeskyFactor chol;
      try {
        chol = cholesky(SymMatrix(covariance));
      } catch (const NotPositiveDefinite&) {
        throw DomainViolation("covariance is not positive definite");
      }
      const Eigen::MatrixXd prec = chol.inverse();
      return NaturalParams({prec * mean, -0.5 * prec});
    }
    case FamilyKind::DiagGaussian: {
      if (mean.size() != dim_) throw InvalidInput("natural_from_gaussian: mean has the wrong size");
      const Eigen::VectorXd z = to_frame(mean);
      const Eigen::VectorXd var = (frame_.transpose() * covariance * frame_).diagonal();
      if (!(var.array() > 0.0).all()) throw DomainViolation("variances must be positive");
      return NaturalParams({(z.array() / var.array()).matrix(), (-0.5 / var.array()).matrix()});
    }
    case FamilyKind::CenteredGaussian1D: {
      const double var = covariance(0, 0);
      if (!(var > 0.0)) throw DomainViolation("variance must be positive");
      return NaturalParams({Eigen::VectorXd(0), Eigen::MatrixXd::Constant(1, 1, -0.5 / var)});
    }
  }
  return {};
}

GaussianMoments ExponentialFamily::gaussian(const NaturalParams& theta) const {
  require_domain(theta);
  switch (kind_) {
    case FamilyKind::FullGaussian: {
      const CholeskyFactor chol = cholesky(SymMatrix(-2.0 * theta.mat));
      return {chol.solve(theta.vec), chol.inverse()};
    }
    case FamilyKind::DiagGaussian: {
      const Eigen::ArrayXd p = -2.0 * theta.mat.col(0).array();
      const Eigen::VectorXd m = (theta.vec.array() / p).matrix();
      const Eigen::VectorXd var = (1.0 / p).matrix();
      if (frame_is_identity_) return {m, var.asDiagonal().toDenseMatrix()};
      Eigen::MatrixXd cov = frame_ * var.asDiagonal() * frame_.transpose();
      return {frame_ * m, SymMatrix(cov).matrix()};
    }
    case FamilyKind::CenteredGaussian1D:
      return {Eigen::VectorXd::Zero(1), Eigen::MatrixXd::Constant(1, 1, -0.5 / theta.mat(0, 0))};
  }
  return {};
}

}  // namespace bvi
