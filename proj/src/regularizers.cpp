#include "bvi/regularizers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "bvi/error.hpp"

namespace bvi {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

double soft_threshold(double z, double level) {
  if (z > level) return z - level;
  if (z < -level) return z + level;
  return 0.0;
}

double effective_eta(const SparseMeanL1& r, Eigen::Index i) {
  return (r.skip_index_0 && i == 0) ? 0.0 : r.eta(i);
}

}  // namespace

void validate(const Regularizer& reg) {
  std::visit(overloaded{
                 [](const NullRegularizer&) {},
                 [](const EigenBox& b) {
                   if (!(b.b1 > 0.0 && b.b1 <= b.b2 && std::isfinite(b.b2))) {
                     throw InvalidInput("eigen_box needs 0 < b1 <= b2");
                   }
                 },
                 [](const SparseMeanL1& s) {
                   if (s.eta.size() == 0 || !s.eta.allFinite() || (s.eta.array() < 0.0).any()) {
                     throw InvalidInput("sparse_mean_l1 needs finite eta_i >= 0");
                   }
                 },
             },
             reg);
}

std::string describe(const Regularizer& reg) {
  std::ostringstream os;
  std::visit(overloaded{
                 [&](const NullRegularizer&) { os << "null"; },
                 [&](const EigenBox& b) { os << "eigen_box(" << b.b1 << "," << b.b2 << ")"; },
                 [&](const SparseMeanL1& s) {
                   os << "sparse_mean_l1(" << (s.eta.size() ? s.eta.maxCoeff() : 0.0)
                      << (s.skip_index_0 ? ",skip0" : "") << ")";
                 },
             },
             reg);
  return os.str();
}

NaturalParams bregman_prox(const Regularizer& reg, const ExponentialFamily& fam,
                           const MeanParams& eta_half, double tau, bool* active) {
  if (!(tau > 0.0)) throw InvalidInput("prox step tau must be positive");
  if (active) *active = false;
  return std::visit(
      overloaded{
          [&](const NullRegularizer&) { return fam.natural_from_moments(eta_half); },
          [&](const EigenBox& box) {
            if (fam.kind() != FamilyKind::FullGaussian) {
              throw UnsupportedRegularizer("eigen_box needs the full Gaussian family");
            }
            validate(reg);
            const NaturalParams theta = fam.natural_from_moments(eta_half);
            const SpectralDecomp spec = sym_eigen(SymMatrix(-2.0 * theta.mat));
            bool clamped = false;
            const Eigen::MatrixXd prec = spec.reconstruct([&](double l) {
              const double c = std::max(box.b1, std::min(box.b2, l));
              if (c != l) clamped = true;
              return c;
            });
            if (active) *active = clamped;
            if (!clamped) return theta;
            const Eigen::MatrixXd p = SymMatrix(prec).matrix();
            return NaturalParams({p * eta_half.vec, -0.5 * p});
          },
          [&](const SparseMeanL1& l1) {
            if (fam.kind() != FamilyKind::DiagGaussian) {
              throw UnsupportedRegularizer("sparse_mean_l1 needs the diagonal Gaussian family");
            }
            validate(reg);
            if (l1.eta.size() != fam.dim()) {
              throw InvalidInput("sparse_mean_l1: eta must have one entry per coordinate");
            }
            if (!fam.is_in_dual_domain(eta_half)) {
              throw DualDomainViolation("moment variance block is not positive");
            }
            const Eigen::Index d = fam.dim();
            Eigen::VectorXd theta1(d);
            Eigen::MatrixXd theta2(d, 1);
            bool shrunk = false;
            for (Eigen::Index i = 0; i < d; ++i) {
              const double z = eta_half.vec(i);
              const double var = eta_half.mat(i, 0) - z * z;
              const double zt = soft_threshold(z, tau * effective_eta(l1, i));
              if (zt != z) shrunk = true;
              const double vt = var + (z * z - zt * zt);
              theta1(i) = zt / vt;
              theta2(i, 0) = -0.5 / vt;
            }
            if (active) *active = shrunk;
            return NaturalParams({std::move(theta1), std::move(theta2)});
          },
      },
      reg);
}

NaturalParams bregman_prox(const Regularizer& reg, const ExponentialFamily& fam,
                           const NaturalParams& theta_half, double tau, bool* active) {
  if (std::holds_alternative<NullRegularizer>(reg)) {
    fam.require_domain(theta_half);
    if (active) *active = false;
    return theta_half;
  }
  return bregman_prox(reg, fam, fam.moments(theta_half), tau, active);
}

double evaluate(const Regularizer& reg, const ExponentialFamily& fam, const NaturalParams& theta) {
  return std::visit(
      overloaded{
          [](const NullRegularizer&) { return 0.0; },
          [&](const EigenBox& box) {
            if (fam.kind() != FamilyKind::FullGaussian) {
              throw UnsupportedRegularizer("eigen_box needs the full Gaussian family");
            }
            const SpectralDecomp spec = sym_eigen(SymMatrix(-2.0 * theta.mat));
            const double lo = spec.eigenvalues.minCoeff();
            const double hi = spec.eigenvalues.maxCoeff();
            if (lo >= box.b1 - 1e-10 && hi <= box.b2 + 1e-10) return 0.0;
            return std::numeric_limits<double>::infinity();
          },
          [&](const SparseMeanL1& l1) {
            if (l1.eta.size() != theta.vec.size()) {
              throw InvalidInput("sparse_mean_l1: eta must have one entry per coordinate");
            }
            double sum = 0.0;
            for (Eigen::Index i = 0; i < theta.vec.size(); ++i) {
              sum += effective_eta(l1, i) * std::abs(theta.vec(i));
            }
            return sum;
          },
      },
      reg);
}

}  // namespace bvi
