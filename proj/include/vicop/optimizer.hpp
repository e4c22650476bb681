#ifndef VICOP_OPTIMIZER_HPP
#define VICOP_OPTIMIZER_HPP

#include <Eigen/Dense>
#include <cstdint>
#include <random>
#include <utility>
#include <vector>

#include "vicop/family.hpp"
#include "vicop/targets.hpp"

namespace vicop {

enum class GradEstimator { Reparam, ScoreWithBaseline };

struct OptimizerConfig {
  int n_steps = 10000;
  int samples_per_step = 1;  // S
  std::uint64_t seed = 1;
  double adadelta_rho = 0.95;
  double adadelta_eps = 1e-6;
  GradEstimator estimator = GradEstimator::Reparam;
  int elbo_window = 1000;
  int checkpoint_every = 0;  // 0 disables checkpoints
  int n_threads = 1;         // per-step sample evaluation fan-out
};

struct OptState {
  Eigen::VectorXd lambda;
  Eigen::VectorXd Eg2;   // E[g^2] accumulator
  Eigen::VectorXd Edx2;  // E[dx^2] accumulator
  long step = 0;
  std::mt19937_64 rng;
  double baseline = 0.0;  // running mean of (log g - log q), score estimator
  long baseline_count = 0;
  long n_flagged = 0;
};

struct RunTrace {
  std::vector<double> elbo;     // per-step estimates, length n_steps
  std::vector<double> wall_ms;  // per-step wallclock
  std::vector<std::pair<long, Eigen::VectorXd>> checkpoints;
  Eigen::VectorXd final_lambda;
  double window_avg = 0.0;  // mean over the final elbo_window steps
  long n_flagged = 0;
  bool healthy = true;  // false if more than 1% of steps were flagged
};

// (1/S) sum_s [log g(theta_s) - log q(theta_s)] with theta_s = draw(eps_s).
// eps_draws has one column per sample.  Non-finite values propagate so the
// caller can flag the step.
double estimate_elbo(const Family& family, const Target& target,
                     const Eigen::Ref<const Eigen::MatrixXd>& eps_draws);

// Unbiased gradient estimate at the family's current lambda.  For Reparam
// this averages family.reparam_vjp(eps_s, w_s) with
// w_s = grad log g - grad log q; for ScoreWithBaseline it averages
// (log g - log q - baseline) * score_grad.  Also returns the matching ELBO
// estimate from the same draws.
struct GradEstimate {
  Eigen::VectorXd grad;
  double elbo = 0.0;
  bool finite = true;
};
GradEstimate estimate_grad(const Family& family, const Target& target,
                           const Eigen::Ref<const Eigen::MatrixXd>& eps_draws,
                           GradEstimator estimator, double baseline = 0.0,
                           int n_threads = 1);

// One ADADELTA ascent update (Zeiler's rule):
//   Eg2  <- rho Eg2 + (1-rho) g^2
//   dx    = sqrt(Edx2 + eps)/sqrt(Eg2 + eps) o g
//   Edx2 <- rho Edx2 + (1-rho) dx^2
//   lam  <- lam + dx
void adadelta_step(OptState& state, const Eigen::Ref<const Eigen::VectorXd>& grad,
                   const OptimizerConfig& cfg);

// Full SGA loop from the documented initialization (or from `init` when
// provided).  The same eps draws feed both the gradient and the recorded
// per-step ELBO estimate.
RunTrace run(Family& family, const Target& target, const OptimizerConfig& cfg);
RunTrace run(Family& family, const Target& target, const OptimizerConfig& cfg,
             const Eigen::Ref<const Eigen::VectorXd>& init);

}  // namespace vicop

#endif
