#pragma once

#include <functional>
#include <vector>

#include "bvi/expfam.hpp"

namespace bvi {

/// Supplies the moments pi_theta^(alpha)(Gamma) of the geometric average
/// proportional to pi^alpha q_theta^(1 - alpha).
using MomentsProvider = std::function<MeanParams(const NaturalParams&)>;

/// d_A(theta, theta') = A(theta) - A(theta') - <grad A(theta'), theta - theta'>,
/// evaluated as KL(q_theta', q_theta) in spectral form so that it keeps full
/// relative accuracy when the two points are close.
double bregman_divergence(const ExponentialFamily& fam, const NaturalParams& theta,
                          const NaturalParams& theta_prime);

/// KL(q_a, q_b) = d_A(theta_b, theta_a).
double kl_in_family(const ExponentialFamily& fam, const NaturalParams& theta_a,
                    const NaturalParams& theta_b);

/// alpha theta_pi + (1 - alpha) theta. Throws DomainViolation when the blend
/// leaves the domain (possible for alpha > 1).
NaturalParams geometric_average_in_family(const ExponentialFamily& fam, double alpha,
                                          const NaturalParams& theta_pi,
                                          const NaturalParams& theta);

/// f_pi^(alpha)(theta) = RD_alpha(q_theta_pi, q_theta). alpha == 1 is the
/// KL(q_theta_pi, q_theta) branch.
double renyi_in_family(const ExponentialFamily& fam, double alpha, const NaturalParams& theta_pi,
                       const NaturalParams& theta);

/// Closed-form geometric-average moments for a target inside the family.
MomentsProvider in_family_provider(const ExponentialFamily& fam, double alpha,
                                   const NaturalParams& theta_pi);

/// moments(theta) - provider(theta).
ParamVector grad_f(const ExponentialFamily& fam, const MomentsProvider& provider,
                   const NaturalParams& theta);

/// Second derivative of f_pi^(alpha) for the 1-D centered family.
double hessian_f_1d(double alpha, double theta_pi, double theta);

struct QuadratureGrid {
  double lower = -1.0;
  double upper = 1.0;
  int n_points = 20001;

  QuadratureGrid() = default;
  QuadratureGrid(double lo, double hi, int n = 20001);

  /// Union of [mean - 12 sd, mean + 12 sd] over the given pairs.
  static QuadratureGrid covering(const std::vector<std::pair<double, double>>& mean_sd,
                                 int n = 20001);

  double step() const { return (upper - lower) / (n_points - 1); }
  double node(int i) const { return lower + i * step(); }
};

using LogDensity1D = std::function<double(double)>;

/// log of the Simpson approximation of the integral of exp(log_f).
/// NaN or +inf anywhere on the grid throws OracleFailure.
double quadrature_log_integral(const LogDensity1D& log_f, const QuadratureGrid& grid);

/// Simpson approximation of the integral of f.
double quadrature_integral(const std::function<double(double)>& f, const QuadratureGrid& grid);

/// RD_alpha(p, q) by quadrature on a 1-D grid.
double quadrature_renyi(const LogDensity1D& p_logpdf, const LogDensity1D& q_logpdf, double alpha,
                        const QuadratureGrid& grid);

/// Geometric-average moments by quadrature, for 1-D families (centered or
/// full with d = 1) and an arbitrary unnormalized 1-D target.
MomentsProvider quadrature_moments_provider(const ExponentialFamily& fam, double alpha,
                                            LogDensity1D log_target, QuadratureGrid grid);

}  // namespace bvi
