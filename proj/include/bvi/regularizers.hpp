#pragma once

#include <string>
#include <variant>

#include <Eigen/Dense>

#include "bvi/expfam.hpp"

namespace bvi {

struct NullRegularizer {};

/// Indicator of b1 I <= -2 theta2 <= b2 I (full Gaussian family).
struct EigenBox {
  double b1 = 0.5;
  double b2 = 2.0;
};

/// sum_i eta_i |(theta1)_i| (diagonal Gaussian family); index 0 is exempt
/// when skip_index_0 is set.
struct SparseMeanL1 {
  Eigen::VectorXd eta;
  bool skip_index_0 = false;
};

using Regularizer = std::variant<NullRegularizer, EigenBox, SparseMeanL1>;

/// Throws InvalidInput unless 0 < b1 <= b2, or every eta_i >= 0.
void validate(const Regularizer& reg);
std::string describe(const Regularizer& reg);

/// prox^A_{tau r} taking the mean parameters of theta_half. Sets *active when
/// the prox changed anything (a clamped eigenvalue, a shrunk coordinate).
/// Throws UnsupportedRegularizer for pairings without a closed form.
NaturalParams bregman_prox(const Regularizer& reg, const ExponentialFamily& fam,
                           const MeanParams& eta_half, double tau, bool* active = nullptr);
NaturalParams bregman_prox(const Regularizer& reg, const ExponentialFamily& fam,
                           const NaturalParams& theta_half, double tau, bool* active = nullptr);

/// r(theta): 0 or +inf for the box (tolerance 1e-10 on the eigenvalues),
/// the weighted l1 norm of theta1 for the sparse regularizer.
double evaluate(const Regularizer& reg, const ExponentialFamily& fam, const NaturalParams& theta);

}  // namespace bvi
