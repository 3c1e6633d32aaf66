#pragma once

#include <cstdint>
#include <random>
#include <span>

#include <Eigen/Dense>

namespace bvi {

/// Dense symmetric matrix. Symmetry is enforced on construction by averaging
/// the input with its transpose, so entries (i,j) and (j,i) are bitwise equal.
class SymMatrix {
 public:
  explicit SymMatrix(const Eigen::MatrixXd& m);

  static SymMatrix identity(int d) { return SymMatrix(Eigen::MatrixXd::Identity(d, d)); }

  int dim() const { return static_cast<int>(m_.rows()); }
  const Eigen::MatrixXd& matrix() const { return m_; }
  double operator()(int i, int j) const { return m_(i, j); }

 private:
  Eigen::MatrixXd m_;
};

/// Eigenvalues sorted ascending; columns of `basis` are the matching
/// orthonormal eigenvectors.
struct SpectralDecomp {
  Eigen::VectorXd eigenvalues;
  Eigen::MatrixXd basis;

  /// U diag(f(lambda)) U^T.
  template <class F>
  Eigen::MatrixXd reconstruct(F&& f) const {
    Eigen::VectorXd mapped = eigenvalues.unaryExpr(f);
    return basis * mapped.asDiagonal() * basis.transpose();
  }
  Eigen::MatrixXd reconstruct() const {
    return basis * eigenvalues.asDiagonal() * basis.transpose();
  }
};

/// Cyclic Jacobi eigendecomposition. Stops once the off-diagonal Frobenius
/// norm falls below 1e-12 ||m||_F, or after 100 sweeps.
SpectralDecomp sym_eigen(const SymMatrix& m);

struct CholeskyFactor {
  Eigen::MatrixXd lower;

  double logdet() const { return 2.0 * lower.diagonal().array().log().sum(); }
  /// Solves (L L^T) x = b.
  Eigen::VectorXd solve(const Eigen::VectorXd& b) const;
  Eigen::MatrixXd solve(const Eigen::MatrixXd& b) const;
  Eigen::MatrixXd inverse() const;
};

/// Throws NotPositiveDefinite when a pivot is not strictly positive
/// (> 1e-300). This is the domain-membership probe for Gaussian families.
CholeskyFactor cholesky(const SymMatrix& m);

/// Returns false instead of throwing.
bool is_positive_definite(const SymMatrix& m);

/// log sum_i exp(v_i), shifted by max(v). All -inf gives -inf.
double log_sum_exp(std::span<const double> v);
double log_sum_exp(const Eigen::VectorXd& v);

/// x - log(1 + x), accurate for small |x|.
double x_minus_log1p(double x);

/// Reproducible random stream: a 64-bit Mersenne twister keyed by
/// (seed, stream_id) through std::seed_seq, with Box-Muller normals.
/// Both the engine and the seeding are fully specified by the standard, so a
/// given key yields the same sequence on every conforming build.
class RngStream {
 public:
  RngStream(std::uint64_t seed, std::uint64_t stream_id);

  RngStream(const RngStream&) = delete;
  RngStream& operator=(const RngStream&) = delete;
  RngStream(RngStream&&) = default;
  RngStream& operator=(RngStream&&) = default;

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream_id() const { return stream_id_; }

  std::uint64_t next_u64() { return engine_(); }
  /// Uniform on [0, 1) with 53 random bits.
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  double normal();
  Eigen::VectorXd normal_vector(int n);
  Eigen::MatrixXd normal_matrix(int rows, int cols);

 private:
  std::uint64_t seed_;
  std::uint64_t stream_id_;
  std::mt19937_64 engine_;
  double cached_normal_ = 0.0;
  bool has_cached_ = false;
};

}  // namespace bvi
