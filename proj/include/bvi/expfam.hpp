#pragma once

#include <string>

#include <Eigen/Dense>

#include "bvi/numerics.hpp"

namespace bvi {

/// Element of the parameter space R^d x S^d. The matrix block is d x d
/// (symmetric) for the full Gaussian family and d x 1 (one entry per
/// coordinate) for the diagonal and centered variants. The inner product is
/// the vector dot product plus the Frobenius product of the matrix blocks.
struct ParamVector {
  Eigen::VectorXd vec;
  Eigen::MatrixXd mat;

  ParamVector() = default;
  ParamVector(Eigen::VectorXd v, Eigen::MatrixXd m) : vec(std::move(v)), mat(std::move(m)) {}

  bool same_shape(const ParamVector& o) const {
    return vec.size() == o.vec.size() && mat.rows() == o.mat.rows() && mat.cols() == o.mat.cols();
  }
  double dot(const ParamVector& o) const {
    return vec.dot(o.vec) + (mat.array() * o.mat.array()).sum();
  }
  double squared_norm() const { return dot(*this); }
  double norm() const { return std::sqrt(squared_norm()); }
  bool all_finite() const { return vec.allFinite() && mat.allFinite(); }
  /// Number of scalar coordinates (matrix block counted entrywise).
  Eigen::Index size() const { return vec.size() + mat.size(); }
  double& coeff(Eigen::Index i) {
    return i < vec.size() ? vec(i) : mat.data()[i - vec.size()];
  }
  double coeff(Eigen::Index i) const {
    return i < vec.size() ? vec(i) : mat.data()[i - vec.size()];
  }

  ParamVector& operator+=(const ParamVector& o) {
    vec += o.vec;
    mat += o.mat;
    return *this;
  }
  ParamVector& operator-=(const ParamVector& o) {
    vec -= o.vec;
    mat -= o.mat;
    return *this;
  }
  ParamVector& operator*=(double s) {
    vec *= s;
    mat *= s;
    return *this;
  }
  friend ParamVector operator+(ParamVector a, const ParamVector& b) { return a += b; }
  friend ParamVector operator-(ParamVector a, const ParamVector& b) { return a -= b; }
  friend ParamVector operator*(double s, ParamVector a) { return a *= s; }
  friend ParamVector operator*(ParamVector a, double s) { return a *= s; }
};

/// A point theta of the natural parameter space.
struct NaturalParams : ParamVector {
  NaturalParams() = default;
  explicit NaturalParams(ParamVector p) : ParamVector(std::move(p)) {}
};

/// A point eta = grad A(theta) = E_theta[Gamma] of the mean parameter space.
struct MeanParams : ParamVector {
  MeanParams() = default;
  explicit MeanParams(ParamVector p) : ParamVector(std::move(p)) {}
};

enum class FamilyKind { FullGaussian, DiagGaussian, CenteredGaussian1D };

std::string to_string(FamilyKind kind);
FamilyKind family_kind_from_string(const std::string& name);

/// Mean and covariance in the sample space.
struct GaussianMoments {
  Eigen::VectorXd mean;
  Eigen::MatrixXd covariance;
};

/// Mean and precision expressed in the family's own coordinates: the
/// sample space for the full family, the rotated frame z = Q^T x for the
/// diagonal family. The centered family has a zero mean.
struct PrecisionForm {
  Eigen::VectorXd mean;
  Eigen::MatrixXd precision;
};

/// Gaussian exponential families: full covariance, diagonal covariance in a
/// fixed orthonormal frame Q, and the 1-D centered Gaussian with statistic x^2.
class ExponentialFamily {
 public:
  static ExponentialFamily full_gaussian(int d);
  static ExponentialFamily diag_gaussian(int d);
  /// Throws InvalidInput unless ||Q^T Q - I||_F <= 1e-10 sqrt(d).
  static ExponentialFamily diag_gaussian(const Eigen::MatrixXd& frame);
  static ExponentialFamily centered_gaussian_1d();

  FamilyKind kind() const { return kind_; }
  int dim() const { return dim_; }
  const Eigen::MatrixXd& frame() const { return frame_; }
  bool frame_is_identity() const { return frame_is_identity_; }

  /// Zero element shaped like this family's parameters.
  ParamVector zero() const;
  bool has_shape(const ParamVector& p) const;

  bool is_in_domain(const NaturalParams& theta) const;
  bool is_in_dual_domain(const MeanParams& eta) const;
  /// Throws DomainViolation (or InvalidInput on a shape mismatch).
  void require_domain(const NaturalParams& theta) const;

  MeanParams sufficient_statistics(const Eigen::VectorXd& x) const;
  double log_partition(const NaturalParams& theta) const;
  MeanParams moments(const NaturalParams& theta) const;
  /// Inverse of moments(). Throws DualDomainViolation when the covariance
  /// block m2 - m1 m1^T is not positive definite.
  NaturalParams natural_from_moments(const MeanParams& eta) const;
  double log_density(const NaturalParams& theta, const Eigen::VectorXd& x) const;
  /// log_density for every column of x.
  Eigen::VectorXd log_density_columns(const NaturalParams& theta, const Eigen::MatrixXd& x) const;
  /// sum_l w_l Gamma(x_l) over the columns of x.
  MeanParams weighted_statistics(const Eigen::MatrixXd& x, const Eigen::VectorXd& w) const;
  /// n draws as the columns of a d x n matrix: x = mu + L z with L the
  /// Cholesky factor of the covariance.
  Eigen::MatrixXd sample(const NaturalParams& theta, int n, RngStream& rng) const;

  /// Natural parameters of N(mean, covariance). The diagonal family keeps
  /// the diagonal of Q^T covariance Q; the centered family ignores `mean`.
  NaturalParams natural_from_gaussian(const Eigen::VectorXd& mean,
                                      const Eigen::MatrixXd& covariance) const;
  GaussianMoments gaussian(const NaturalParams& theta) const;
  PrecisionForm precision_form(const NaturalParams& theta) const;

 private:
  ExponentialFamily(FamilyKind kind, int dim, Eigen::MatrixXd frame);

  Eigen::VectorXd to_frame(const Eigen::VectorXd& x) const;

  FamilyKind kind_;
  int dim_;
  Eigen::MatrixXd frame_;
  bool frame_is_identity_ = true;
};

}  // namespace bvi
