#pragma once

#include <functional>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "bvi/divergences.hpp"
#include "bvi/expfam.hpp"
#include "bvi/regularizers.hpp"
#include "bvi/targets.hpp"

namespace bvi {

/// Step sizes and sample sizes indexed by k = 1..K. A single entry is used
/// for every iteration; otherwise the list needs at least K entries.
struct Schedule {
  std::vector<double> taus{0.5};
  std::vector<int> sample_sizes{500};
  int max_iters = 100;
  /// Stop once d_A(theta_k, theta_k+1) <= stop_tol; 0 runs all K iterations.
  double stop_tol = 0.0;

  static Schedule constant(double tau, int K, int N = 500, double stop_tol = 0.0) {
    return Schedule{{tau}, {N}, K, stop_tol};
  }

  double tau(int k) const;
  int sample_size(int k) const;
  /// Throws InvalidInput. PRMM needs every tau in (0, 1]; VRB any tau > 0.
  void validate(bool prmm) const;
};

struct WeightedBatch {
  Eigen::MatrixXd samples;  // d x N
  Eigen::VectorXd log_weights;
  Eigen::VectorXd normalized_weights;
  double ess = 0.0;
  /// Every weight is zero (or the target returned NaN everywhere).
  bool degenerate = false;

  int size() const { return static_cast<int>(log_weights.size()); }
};

/// N draws from q_theta with log-weights alpha (log pi~(x) - log q_theta(x)).
/// NaN target values count as -inf.
WeightedBatch draw_weighted_batch(const ExponentialFamily& fam, const Target& target,
                                  double alpha, const NaturalParams& theta, int n,
                                  RngStream& rng);

/// Builds a batch from given samples and log-weights.
WeightedBatch weighted_batch(Eigen::MatrixXd samples, Eigen::VectorXd log_weights);

/// (1/alpha) (log_sum_exp(log_weights) - log N).
double renyi_bound_estimate(const WeightedBatch& batch, double alpha);

/// sum_l wbar_l Gamma(x_l).
MeanParams estimate_moments(const ExponentialFamily& fam, const WeightedBatch& batch);

/// tau target + (1 - tau) moments(theta).
MeanParams relaxed_blend(const ExponentialFamily& fam, const MeanParams& target_moments,
                         const NaturalParams& theta, double tau);

/// grad A*(grad A(theta) - tau grad).
NaturalParams mirror_step(const ExponentialFamily& fam, const NaturalParams& theta,
                          const ParamVector& grad, double tau);

/// theta + tau (target_moments - moments(theta)); no domain check.
NaturalParams vrb_step(const ExponentialFamily& fam, const NaturalParams& theta,
                       const MeanParams& target_moments, double tau);

enum class RunStatus { Converged, MaxIters, Diverged };
std::string to_string(RunStatus status);

/// Record k describes theta_k and the step from theta_k to theta_{k+1}.
struct IterationRecord {
  int k = 0;
  NaturalParams theta;
  double objective = std::numeric_limits<double>::quiet_NaN();
  double renyi_bound = std::numeric_limits<double>::quiet_NaN();
  /// d_A(theta_k, theta_{k+1}); NaN on the last record when no step was taken.
  double bregman_step = std::numeric_limits<double>::quiet_NaN();
  double ess = std::numeric_limits<double>::quiet_NaN();
  bool prox_active = false;
  int repairs = 0;
  double theta_norm = 0.0;
};

struct RunTrace {
  std::vector<IterationRecord> records;
  RunStatus status = RunStatus::MaxIters;

  const NaturalParams& final_theta() const { return records.back().theta; }
  int total_repairs() const;
};

/// Target usable by the deterministic scheme: the geometric-average moments
/// and, when known, the objective f_pi^(alpha).
struct ExactTarget {
  MomentsProvider provider;
  std::function<double(const NaturalParams&)> objective;
};

ExactTarget exact_in_family(const ExponentialFamily& fam, double alpha,
                            const NaturalParams& theta_pi);

/// Deterministic proximal relaxed moment matching, alpha in (0, 1].
RunTrace prmm_exact(const ExponentialFamily& fam, const ExactTarget& target,
                    const Regularizer& reg, double alpha, const Schedule& schedule,
                    const NaturalParams& theta0);

struct McOptions {
  /// Fail with Diverged instead of repairing a non-interior moment estimate.
  bool strict = false;
  /// Exact objective to record, when the target is known in closed form.
  std::function<double(const NaturalParams&)> objective;
};

/// Monte Carlo proximal relaxed moment matching. A batch is also drawn at
/// theta_K, for its Renyi bound and ESS.
RunTrace mc_prmm(const ExponentialFamily& fam, const Target& target, const Regularizer& reg,
                 double alpha, const Schedule& schedule, const NaturalParams& theta0,
                 RngStream& rng, const McOptions& options = {});

/// Euclidean gradient ascent on the Renyi bound in natural parameters.
RunTrace vrb(const ExponentialFamily& fam, const Target& target, double alpha,
             const Schedule& schedule, const NaturalParams& theta0, RngStream& rng,
             const McOptions& options = {});

/// Eigen-floors the covariance block of eta at 1e-8 of its largest
/// eigenvalue. Returns false when nothing positive is left to keep.
bool repair_moments(const ExponentialFamily& fam, MeanParams& eta);

}  // namespace bvi
