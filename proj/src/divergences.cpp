#include "bvi/divergences.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "bvi/error.hpp"

namespace bvi {

namespace {

// KL(N(mu_a, P_a^-1), N(mu_b, P_b^-1)) with m_i the eigenvalues of
// P_a^{-1/2} (P_b - P_a) P_a^{-1/2}.
double gaussian_kl(const ExponentialFamily& fam, const NaturalParams& a, const NaturalParams& b) {
  fam.require_domain(a);
  fam.require_domain(b);
  if (fam.kind() != FamilyKind::FullGaussian) {
    const Eigen::ArrayXd pa = -2.0 * a.mat.col(0).array();
    const Eigen::ArrayXd pb = -2.0 * b.mat.col(0).array();
    double quad = 0.0;
    if (fam.kind() == FamilyKind::DiagGaussian) {
      const Eigen::ArrayXd delta = a.vec.array() / pa - b.vec.array() / pb;
      quad = (pb * delta.square()).sum();
    }
    double spectral = 0.0;
    for (Eigen::Index i = 0; i < pa.size(); ++i) {
      spectral += x_minus_log1p((pb(i) - pa(i)) / pa(i));
    }
    return 0.5 * quad + 0.5 * spectral;
  }
  const PrecisionForm fa = fam.precision_form(a);
  const PrecisionForm fb = fam.precision_form(b);
  const CholeskyFactor la = cholesky(SymMatrix(fa.precision));
  const auto lower = la.lower.triangularView<Eigen::Lower>();
  Eigen::MatrixXd m = lower.solve(fb.precision - fa.precision);
  m = lower.solve(Eigen::MatrixXd(m.transpose()));
  const SpectralDecomp spec = sym_eigen(SymMatrix(m));
  double spectral = 0.0;
  for (Eigen::Index i = 0; i < spec.eigenvalues.size(); ++i) {
    spectral += x_minus_log1p(spec.eigenvalues(i));
  }
  const Eigen::VectorXd delta = fa.mean - fb.mean;
  return 0.5 * delta.dot(fb.precision * delta) + 0.5 * spectral;
}

std::vector<double> simpson_weights(const QuadratureGrid& grid) {
  std::vector<double> w(grid.n_points);
  const double h = grid.step() / 3.0;
  for (int i = 0; i < grid.n_points; ++i) {
    if (i == 0 || i == grid.n_points - 1) {
      w[i] = h;
    } else {
      w[i] = (i % 2 == 1 ? 4.0 : 2.0) * h;
    }
  }
  return w;
}

void check_value(double v) {
  if (std::isnan(v) || v == std::numeric_limits<double>::infinity()) {
    throw OracleFailure("quadrature integrand is not finite on the grid");
  }
}

}  // namespace

double bregman_divergence(const ExponentialFamily& fam, const NaturalParams& theta,
                          const NaturalParams& theta_prime) {
  return gaussian_kl(fam, theta_prime, theta);
}

double kl_in_family(const ExponentialFamily& fam, const NaturalParams& theta_a,
                    const NaturalParams& theta_b) {
  return gaussian_kl(fam, theta_a, theta_b);
}

NaturalParams geometric_average_in_family(const ExponentialFamily& fam, double alpha,
                                          const NaturalParams& theta_pi,
                                          const NaturalParams& theta) {
  if (!(alpha >= 0.0)) throw InvalidInput("alpha must be nonnegative");
  NaturalParams blend(alpha * static_cast<const ParamVector&>(theta_pi) +
                      (1.0 - alpha) * static_cast<const ParamVector&>(theta));
  if (!fam.is_in_domain(blend)) {
    throw DomainViolation("geometric average alpha theta_pi + (1 - alpha) theta leaves the domain");
  }
  return blend;
}

double renyi_in_family(const ExponentialFamily& fam, double alpha, const NaturalParams& theta_pi,
                       const NaturalParams& theta) {
  if (!(alpha > 0.0)) throw InvalidInput("alpha must be positive");
  if (alpha == 1.0) return kl_in_family(fam, theta_pi, theta);
  const NaturalParams blend = geometric_average_in_family(fam, alpha, theta_pi, theta);
  // alpha A(theta_pi) + (1 - alpha) A(theta) - A(blend) as a sum of Bregman gaps at the blend.
  const double num = alpha * bregman_divergence(fam, theta_pi, blend) +
                     (1.0 - alpha) * bregman_divergence(fam, theta, blend);
  return std::max(0.0, num / (1.0 - alpha));
}

MomentsProvider in_family_provider(const ExponentialFamily& fam, double alpha,
                                   const NaturalParams& theta_pi) {
  fam.require_domain(theta_pi);
  return [fam, alpha, theta_pi](const NaturalParams& theta) {
    return fam.moments(geometric_average_in_family(fam, alpha, theta_pi, theta));
  };
}

ParamVector grad_f(const ExponentialFamily& fam, const MomentsProvider& provider,
                   const NaturalParams& theta) {
  return fam.moments(theta) - provider(theta);
}

double hessian_f_1d(double alpha, double theta_pi, double theta) {
  if (!(alpha > 0.0)) throw InvalidInput("alpha must be positive");
  if (!(theta < 0.0) || !(theta_pi < 0.0)) throw DomainViolation("theta must be negative");
  const double base = 1.0 / (2.0 * theta * theta);
  if (alpha == 1.0) return base;
  const double blend = alpha * theta_pi + (1.0 - alpha) * theta;
  if (!(blend < 0.0)) throw DomainViolation("blend leaves the domain");
  return base + (alpha - 1.0) / (2.0 * blend * blend);
}

QuadratureGrid::QuadratureGrid(double lo, double hi, int n) : lower(lo), upper(hi), n_points(n) {
  if (!(std::isfinite(lo) && std::isfinite(hi) && lo < hi)) {
    throw InvalidInput("quadrature grid needs finite lower < upper");
  }
  if (n < 3 || n % 2 == 0) throw InvalidInput("quadrature grid needs an odd n_points >= 3");
}

QuadratureGrid QuadratureGrid::covering(const std::vector<std::pair<double, double>>& mean_sd,
                                        int n) {
  if (mean_sd.empty()) throw InvalidInput("covering: no densities given");
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (const auto& [m, sd] : mean_sd) {
    lo = std::min(lo, m - 12.0 * sd);
    hi = std::max(hi, m + 12.0 * sd);
  }
  return QuadratureGrid(lo, hi, n);
}

double quadrature_log_integral(const LogDensity1D& log_f, const QuadratureGrid& grid) {
  const std::vector<double> w = simpson_weights(grid);
  std::vector<double> terms(grid.n_points);
  for (int i = 0; i < grid.n_points; ++i) {
    const double v = log_f(grid.node(i));
    check_value(v);
    terms[i] = v + std::log(w[i]);
  }
  return log_sum_exp(terms);
}

double quadrature_integral(const std::function<double(double)>& f, const QuadratureGrid& grid) {
  const std::vector<double> w = simpson_weights(grid);
  double sum = 0.0;
  for (int i = 0; i < grid.n_points; ++i) {
    const double v = f(grid.node(i));
    if (!std::isfinite(v)) throw OracleFailure("quadrature integrand is not finite on the grid");
    sum += w[i] * v;
  }
  return sum;
}

double quadrature_renyi(const LogDensity1D& p_logpdf, const LogDensity1D& q_logpdf, double alpha,
                        const QuadratureGrid& grid) {
  if (!(alpha > 0.0)) throw InvalidInput("alpha must be positive");
  if (alpha == 1.0) {
    return quadrature_integral(
        [&](double x) {
          const double lp = p_logpdf(x);
          check_value(lp);
          if (lp == -std::numeric_limits<double>::infinity()) return 0.0;
          const double lq = q_logpdf(x);
          check_value(lq);
          return (lp - lq) * std::exp(lp);
        },
        grid);
  }
  const double log_int = quadrature_log_integral(
      [&](double x) {
        const double lp = p_logpdf(x);
        const double lq = q_logpdf(x);
        check_value(lp);
        check_value(lq);
        return alpha * lp + (1.0 - alpha) * lq;
      },
      grid);
  return log_int / (alpha - 1.0);
}

MomentsProvider quadrature_moments_provider(const ExponentialFamily& fam, double alpha,
                                            LogDensity1D log_target, QuadratureGrid grid) {
  if (fam.dim() != 1) throw InvalidInput("quadrature provider needs a 1-D family");
  if (!(alpha > 0.0)) throw InvalidInput("alpha must be positive");
  return [fam, alpha, log_target = std::move(log_target), grid](const NaturalParams& theta) {
    fam.require_domain(theta);
    const std::vector<double> w = simpson_weights(grid);
    std::vector<double> logs(grid.n_points);
    Eigen::VectorXd x1(1);
    for (int i = 0; i < grid.n_points; ++i) {
      x1(0) = grid.node(i);
      double lt = log_target(x1(0));
      if (std::isnan(lt)) lt = -std::numeric_limits<double>::infinity();
      check_value(lt);
      logs[i] = alpha * lt + (1.0 - alpha) * fam.log_density(theta, x1) + std::log(w[i]);
    }
    const double lz = log_sum_exp(logs);
    if (!std::isfinite(lz)) throw OracleFailure("geometric average has no mass on the grid");
    double m1 = 0.0;
    double m2 = 0.0;
    for (int i = 0; i < grid.n_points; ++i) {
      const double p = std::exp(logs[i] - lz);
      const double x = grid.node(i);
      m1 += p * x;
      m2 += p * x * x;
    }
    ParamVector out = fam.zero();
    if (fam.kind() != FamilyKind::CenteredGaussian1D) out.vec(0) = m1;
    out.mat(0, 0) = m2;
    return MeanParams(std::move(out));
  };
}

}  // namespace bvi
