#include "bvi/algorithms.hpp"

#include <algorithm>
#include <cmath>

#include "bvi/error.hpp"

namespace bvi {

double Schedule::tau(int k) const {
  if (taus.empty()) throw InvalidInput("schedule has no step sizes");
  return taus.size() == 1 ? taus[0] : taus.at(static_cast<std::size_t>(k - 1));
}

int Schedule::sample_size(int k) const {
  if (sample_sizes.empty()) throw InvalidInput("schedule has no sample sizes");
  const std::size_t i = std::min<std::size_t>(static_cast<std::size_t>(std::max(k, 1) - 1),
                                              sample_sizes.size() - 1);
  return sample_sizes.size() == 1 ? sample_sizes[0] : sample_sizes[i];
}

void Schedule::validate(bool prmm) const {
  if (max_iters < 0) throw InvalidInput("schedule: max_iters must be >= 0");
  if (!(stop_tol >= 0.0)) throw InvalidInput("schedule: stop_tol must be >= 0");
  if (taus.empty()) throw InvalidInput("schedule: no step sizes");
  if (taus.size() > 1 && static_cast<int>(taus.size()) < max_iters) {
    throw InvalidInput("schedule: fewer step sizes than iterations");
  }
  for (double t : taus) {
    if (!(t > 0.0) || !std::isfinite(t)) throw InvalidInput("schedule: step sizes must be > 0");
    if (prmm && t > 1.0) throw InvalidInput("schedule: PRMM step sizes must lie in (0, 1]");
  }
  for (int n : sample_sizes) {
    if (n < 1) throw InvalidInput("schedule: sample sizes must be >= 1");
  }
}

std::string to_string(RunStatus status) {
  switch (status) {
    case RunStatus::Converged:
      return "converged";
    case RunStatus::MaxIters:
      return "max_iters";
    case RunStatus::Diverged:
      return "diverged";
  }
  return "unknown";
}

int RunTrace::total_repairs() const {
  int n = 0;
  for (const auto& r : records) n += r.repairs;
  return n;
}

WeightedBatch weighted_batch(Eigen::MatrixXd samples, Eigen::VectorXd log_weights) {
  if (log_weights.size() < 1 || samples.cols() != log_weights.size()) {
    throw InvalidInput("weighted batch: sample and weight counts differ");
  }
  WeightedBatch b;
  b.samples = std::move(samples);
  for (Eigen::Index i = 0; i < log_weights.size(); ++i) {
    if (std::isnan(log_weights(i))) log_weights(i) = -std::numeric_limits<double>::infinity();
  }
  b.log_weights = std::move(log_weights);
  const double lse = log_sum_exp(b.log_weights);
  if (!std::isfinite(lse)) {
    b.degenerate = true;
    b.normalized_weights = Eigen::VectorXd::Zero(b.log_weights.size());
    b.ess = 0.0;
    return b;
  }
  b.normalized_weights = b.log_weights.unaryExpr([lse](double v) { return std::exp(v - lse); });
  b.ess = 1.0 / b.normalized_weights.squaredNorm();
  return b;
}

WeightedBatch draw_weighted_batch(const ExponentialFamily& fam, const Target& target,
                                  double alpha, const NaturalParams& theta, int n,
                                  RngStream& rng) {
  if (target.dim != fam.dim()) throw InvalidInput("target and family dimensions differ");
  Eigen::MatrixXd x = fam.sample(theta, n, rng);
  const Eigen::VectorXd log_q = fam.log_density_columns(theta, x);
  Eigen::VectorXd log_w(n);
  for (int l = 0; l < n; ++l) {
    const double lp = target.log_unnormalized(x.col(l));
    log_w(l) = std::isnan(lp) ? -std::numeric_limits<double>::infinity() : alpha * (lp - log_q(l));
  }
  return weighted_batch(std::move(x), std::move(log_w));
}

double renyi_bound_estimate(const WeightedBatch& batch, double alpha) {
  if (!(alpha > 0.0)) throw InvalidInput("alpha must be positive");
  return (log_sum_exp(batch.log_weights) - std::log(static_cast<double>(batch.size()))) / alpha;
}

MeanParams estimate_moments(const ExponentialFamily& fam, const WeightedBatch& batch) {
  return fam.weighted_statistics(batch.samples, batch.normalized_weights);
}

MeanParams relaxed_blend(const ExponentialFamily& fam, const MeanParams& target_moments,
                         const NaturalParams& theta, double tau) {
  return MeanParams(tau * static_cast<const ParamVector&>(target_moments) +
                    (1.0 - tau) * static_cast<const ParamVector&>(fam.moments(theta)));
}

NaturalParams mirror_step(const ExponentialFamily& fam, const NaturalParams& theta,
                          const ParamVector& grad, double tau) {
  return fam.natural_from_moments(MeanParams(fam.moments(theta) - tau * grad));
}

NaturalParams vrb_step(const ExponentialFamily& fam, const NaturalParams& theta,
                       const MeanParams& target_moments, double tau) {
  return NaturalParams(theta + tau * (target_moments - fam.moments(theta)));
}

bool repair_moments(const ExponentialFamily& fam, MeanParams& eta) {
  if (!eta.all_finite()) return false;
  switch (fam.kind()) {
    case FamilyKind::FullGaussian: {
      const Eigen::MatrixXd outer = eta.vec * eta.vec.transpose();
      const SpectralDecomp spec = sym_eigen(SymMatrix(eta.mat - outer));
      const double top = spec.eigenvalues.maxCoeff();
      if (!(top > 0.0)) return false;
      const double floor = 1e-8 * top;
      eta.mat = SymMatrix(spec.reconstruct([&](double l) { return std::max(l, floor); }) + outer)
                    .matrix();
      return true;
    }
    case FamilyKind::DiagGaussian: {
      Eigen::ArrayXd var = eta.mat.col(0).array() - eta.vec.array().square();
      const double top = var.maxCoeff();
      if (!(top > 0.0)) return false;
      var = var.max(1e-8 * top);
      eta.mat.col(0) = (var + eta.vec.array().square()).matrix();
      return true;
    }
    case FamilyKind::CenteredGaussian1D:
      return eta.mat(0, 0) > 0.0;
  }
  return false;
}

ExactTarget exact_in_family(const ExponentialFamily& fam, double alpha,
                            const NaturalParams& theta_pi) {
  ExactTarget t;
  t.provider = in_family_provider(fam, alpha, theta_pi);
  t.objective = [fam, alpha, theta_pi](const NaturalParams& theta) {
    return renyi_in_family(fam, alpha, theta_pi, theta);
  };
  return t;
}

namespace {

IterationRecord start_record(int k, const NaturalParams& theta) {
  IterationRecord r;
  r.k = k;
  r.theta = theta;
  r.theta_norm = theta.norm();
  return r;
}

}  // namespace

RunTrace prmm_exact(const ExponentialFamily& fam, const ExactTarget& target,
                    const Regularizer& reg, double alpha, const Schedule& schedule,
                    const NaturalParams& theta0) {
  if (!(alpha > 0.0 && alpha <= 1.0)) throw InvalidInput("prmm_exact needs alpha in (0, 1]");
  if (!target.provider) throw InvalidInput("prmm_exact needs a moments provider");
  schedule.validate(true);
  fam.require_domain(theta0);

  RunTrace trace;
  NaturalParams theta = theta0;
  for (int k = 0;; ++k) {
    IterationRecord rec = start_record(k, theta);
    if (target.objective) rec.objective = target.objective(theta) + evaluate(reg, fam, theta);
    if (k == schedule.max_iters) {
      trace.records.push_back(std::move(rec));
      trace.status = RunStatus::MaxIters;
      break;
    }
    const double tau = schedule.tau(k + 1);
    const MeanParams half = relaxed_blend(fam, target.provider(theta), theta, tau);
    NaturalParams next = bregman_prox(reg, fam, half, tau, &rec.prox_active);
    rec.bregman_step = bregman_divergence(fam, theta, next);
    const bool stop = schedule.stop_tol > 0.0 && rec.bregman_step <= schedule.stop_tol;
    trace.records.push_back(std::move(rec));
    if (stop) {
      trace.status = RunStatus::Converged;
      break;
    }
    theta = std::move(next);
  }
  return trace;
}

namespace {

enum class McKind { Prmm, Vrb };

RunTrace run_mc(McKind kind, const ExponentialFamily& fam, const Target& target,
                const Regularizer& reg, double alpha, const Schedule& schedule,
                const NaturalParams& theta0, RngStream& rng, const McOptions& options) {
  if (!(alpha > 0.0)) throw InvalidInput("alpha must be positive");
  schedule.validate(kind == McKind::Prmm);
  fam.require_domain(theta0);
  if (target.dim != fam.dim()) throw InvalidInput("target and family dimensions differ");

  RunTrace trace;
  NaturalParams theta = theta0;
  for (int k = 0;; ++k) {
    IterationRecord rec = start_record(k, theta);
    if (options.objective) rec.objective = options.objective(theta) + evaluate(reg, fam, theta);
    const int n = schedule.sample_size(std::min(k + 1, std::max(schedule.max_iters, 1)));
    const WeightedBatch batch = draw_weighted_batch(fam, target, alpha, theta, n, rng);
    rec.renyi_bound = renyi_bound_estimate(batch, alpha);
    rec.ess = batch.ess;
    if (!options.objective) rec.objective = rec.renyi_bound;
    if (batch.degenerate) {
      trace.records.push_back(std::move(rec));
      trace.status = RunStatus::Diverged;
      break;
    }
    if (k == schedule.max_iters) {
      trace.records.push_back(std::move(rec));
      trace.status = RunStatus::MaxIters;
      break;
    }
    const double tau = schedule.tau(k + 1);
    const MeanParams m_hat = estimate_moments(fam, batch);
    NaturalParams next;
    bool failed = !m_hat.all_finite();
    if (!failed && kind == McKind::Vrb) {
      next = vrb_step(fam, theta, m_hat, tau);
      failed = !fam.is_in_domain(next);
    } else if (!failed) {
      MeanParams half = relaxed_blend(fam, m_hat, theta, tau);
      try {
        next = bregman_prox(reg, fam, half, tau, &rec.prox_active);
      } catch (const DualDomainViolation&) {
        if (options.strict || !repair_moments(fam, half)) {
          failed = true;
        } else {
          ++rec.repairs;
          try {
            next = bregman_prox(reg, fam, half, tau, &rec.prox_active);
          } catch (const DualDomainViolation&) {
            failed = true;
          }
        }
      }
      if (!failed) failed = !fam.is_in_domain(next);
    }
    if (failed) {
      trace.records.push_back(std::move(rec));
      trace.status = RunStatus::Diverged;
      break;
    }
    rec.bregman_step = bregman_divergence(fam, theta, next);
    const bool stop = schedule.stop_tol > 0.0 && rec.bregman_step <= schedule.stop_tol;
    trace.records.push_back(std::move(rec));
    if (stop) {
      trace.status = RunStatus::Converged;
      break;
    }
    theta = std::move(next);
  }
  return trace;
}

}  // namespace

RunTrace mc_prmm(const ExponentialFamily& fam, const Target& target, const Regularizer& reg,
                 double alpha, const Schedule& schedule, const NaturalParams& theta0,
                 RngStream& rng, const McOptions& options) {
  return run_mc(McKind::Prmm, fam, target, reg, alpha, schedule, theta0, rng, options);
}

RunTrace vrb(const ExponentialFamily& fam, const Target& target, double alpha,
             const Schedule& schedule, const NaturalParams& theta0, RngStream& rng,
             const McOptions& options) {
  return run_mc(McKind::Vrb, fam, target, NullRegularizer{}, alpha, schedule, theta0, rng,
                options);
}

}  // namespace bvi
