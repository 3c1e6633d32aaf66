#include "bvi/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <vector>

#include "bvi/error.hpp"

namespace bvi {

SymMatrix::SymMatrix(const Eigen::MatrixXd& m) {
  if (m.rows() != m.cols() || m.rows() < 1) {
    throw InvalidInput("SymMatrix: expected a non-empty square matrix");
  }
  m_ = 0.5 * (m + m.transpose());
}

namespace {

double off_diagonal_norm(const Eigen::MatrixXd& a) {
  double s = 0.0;
  for (Eigen::Index j = 0; j < a.cols(); ++j) {
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
      if (i != j) s += a(i, j) * a(i, j);
    }
  }
  return std::sqrt(s);
}

}  // namespace

SpectralDecomp sym_eigen(const SymMatrix& m) {
  const Eigen::MatrixXd& input = m.matrix();
  if (!input.allFinite()) throw InvalidInput("sym_eigen: non-finite entries");

  const int d = m.dim();
  Eigen::MatrixXd a = input;
  Eigen::MatrixXd v = Eigen::MatrixXd::Identity(d, d);
  const double threshold = 1e-12 * input.norm();

  constexpr int kMaxSweeps = 100;
  for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
    if (off_diagonal_norm(a) <= threshold) break;
    for (int p = 0; p < d - 1; ++p) {
      for (int q = p + 1; q < d; ++q) {
        const double apq = a(p, q);
        if (apq == 0.0) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
        const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(1.0 + theta * theta));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = t * c;
        for (int k = 0; k < d; ++k) {
          const double akp = a(k, p);
          const double akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (int k = 0; k < d; ++k) {
          const double apk = a(p, k);
          const double aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        a(p, q) = 0.0;
        a(q, p) = 0.0;
        for (int k = 0; k < d; ++k) {
          const double vkp = v(k, p);
          const double vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }

  std::vector<int> order(d);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int i, int j) { return a(i, i) < a(j, j); });

  SpectralDecomp out;
  out.eigenvalues.resize(d);
  out.basis.resize(d, d);
  for (int i = 0; i < d; ++i) {
    out.eigenvalues(i) = a(order[i], order[i]);
    out.basis.col(i) = v.col(order[i]);
  }
  return out;
}

namespace {

constexpr double kMinPivot = 1e-300;

bool try_cholesky(const Eigen::MatrixXd& a, Eigen::MatrixXd& l) {
  const auto d = a.rows();
  l = Eigen::MatrixXd::Zero(d, d);
  for (Eigen::Index j = 0; j < d; ++j) {
    double pivot = a(j, j);
    for (Eigen::Index k = 0; k < j; ++k) pivot -= l(j, k) * l(j, k);
    if (!(pivot > kMinPivot)) return false;
    const double ljj = std::sqrt(pivot);
    l(j, j) = ljj;
    for (Eigen::Index i = j + 1; i < d; ++i) {
      double s = a(i, j);
      for (Eigen::Index k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
      l(i, j) = s / ljj;
    }
  }
  return true;
}

}  // namespace

CholeskyFactor cholesky(const SymMatrix& m) {
  CholeskyFactor f;
  if (!try_cholesky(m.matrix(), f.lower)) {
    throw NotPositiveDefinite("cholesky: matrix is not positive definite");
  }
  return f;
}

bool is_positive_definite(const SymMatrix& m) {
  Eigen::MatrixXd l;
  return try_cholesky(m.matrix(), l);
}

Eigen::VectorXd CholeskyFactor::solve(const Eigen::VectorXd& b) const {
  Eigen::VectorXd y = lower.triangularView<Eigen::Lower>().solve(b);
  return lower.transpose().triangularView<Eigen::Upper>().solve(y);
}

Eigen::MatrixXd CholeskyFactor::solve(const Eigen::MatrixXd& b) const {
  Eigen::MatrixXd y = lower.triangularView<Eigen::Lower>().solve(b);
  return lower.transpose().triangularView<Eigen::Upper>().solve(y);
}

Eigen::MatrixXd CholeskyFactor::inverse() const {
  Eigen::MatrixXd inv = solve(Eigen::MatrixXd::Identity(lower.rows(), lower.cols()).eval());
  return 0.5 * (inv + inv.transpose());
}

double log_sum_exp(std::span<const double> v) {
  if (v.empty()) throw InvalidInput("log_sum_exp: empty input");
  const double mx = *std::max_element(v.begin(), v.end());
  if (mx == -std::numeric_limits<double>::infinity()) return mx;
  double s = 0.0;
  for (double x : v) s += std::exp(x - mx);
  return mx + std::log(s);
}

double log_sum_exp(const Eigen::VectorXd& v) {
  return log_sum_exp(std::span<const double>(v.data(), static_cast<std::size_t>(v.size())));
}

double x_minus_log1p(double x) {
  if (std::abs(x) > 0.25) return x - std::log1p(x);
  // x^2/2 - x^3/3 + x^4/4 - ...
  double term = x;
  double sum = 0.0;
  for (int k = 2; k < 80; ++k) {
    term *= -x;
    const double contrib = -term / k;
    sum += contrib;
    if (std::abs(contrib) <= 1e-17 * std::abs(sum)) break;
  }
  return sum;
}

RngStream::RngStream(std::uint64_t seed, std::uint64_t stream_id)
    : seed_(seed), stream_id_(stream_id) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream_id),
                    static_cast<std::uint32_t>(stream_id >> 32), 0x62766931u};
  engine_.seed(seq);
}

double RngStream::uniform() {
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

double RngStream::normal() {
  if (has_cached_) {
    has_cached_ = false;
    return cached_normal_;
  }
  // Box-Muller on (0, 1] x [0, 1).
  const double u1 = 1.0 - uniform();
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double phi = 2.0 * std::numbers::pi * u2;
  cached_normal_ = r * std::sin(phi);
  has_cached_ = true;
  return r * std::cos(phi);
}

Eigen::VectorXd RngStream::normal_vector(int n) {
  Eigen::VectorXd z(n);
  for (int i = 0; i < n; ++i) z(i) = normal();
  return z;
}

Eigen::MatrixXd RngStream::normal_matrix(int rows, int cols) {
  Eigen::MatrixXd z(rows, cols);
  for (int j = 0; j < cols; ++j) {
    for (int i = 0; i < rows; ++i) z(i, j) = normal();
  }
  return z;
}

}  // namespace bvi
