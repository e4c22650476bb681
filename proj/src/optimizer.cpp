#include "vicop/optimizer.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <stdexcept>
#include <thread>

namespace vicop {

namespace {

struct SampleEval {
  Eigen::VectorXd grad;
  double elbo = 0.0;
  bool finite = true;
};

SampleEval eval_one(const Family& family, const Target& target,
                    const Eigen::Ref<const Eigen::VectorXd>& eps,
                    GradEstimator estimator, double baseline) {
  SampleEval out;
  const DrawEval de = family.draw_eval(eps);
  const double lg = target.log_g(de.theta);
  out.elbo = lg - de.log_q;
  if (!std::isfinite(out.elbo)) {
    out.finite = false;
    return out;
  }
  if (estimator == GradEstimator::Reparam) {
    const Eigen::VectorXd w = target.grad_log_g(de.theta) - de.grad_theta_log_q;
    out.grad = family.reparam_vjp(eps, w);
  } else {
    out.grad = (out.elbo - baseline) * family.score_grad(de.theta);
  }
  out.finite = out.grad.allFinite();
  return out;
}

RunTrace run_impl(Family& family, const Target& target,
                  const OptimizerConfig& cfg, std::mt19937_64 rng,
                  Eigen::VectorXd init) {
  if (family.dim() != target.dim()) {
    throw std::invalid_argument("run: family and target dimension mismatch");
  }
  if (cfg.samples_per_step < 1) {
    throw std::invalid_argument("run: samples_per_step must be >= 1");
  }
  if (!(cfg.adadelta_rho > 0.0 && cfg.adadelta_rho < 1.0)) {
    throw std::invalid_argument("run: adadelta_rho must lie in (0, 1)");
  }

  OptState st;
  st.lambda = std::move(init);
  st.rng = rng;
  st.Eg2 = Eigen::VectorXd::Zero(st.lambda.size());
  st.Edx2 = Eigen::VectorXd::Zero(st.lambda.size());

  RunTrace tr;
  tr.elbo.reserve(cfg.n_steps);
  tr.wall_ms.reserve(cfg.n_steps);
  std::normal_distribution<double> nd(0.0, 1.0);
  const int ed = family.eps_dim();
  Eigen::MatrixXd eps(ed, cfg.samples_per_step);

  for (int step = 0; step < cfg.n_steps; ++step) {
    const auto t0 = std::chrono::steady_clock::now();
    for (int s = 0; s < cfg.samples_per_step; ++s) {
      for (int i = 0; i < ed; ++i) {
        eps(i, s) = nd(st.rng);
      }
    }
    family.set_lambda(st.lambda);
    const GradEstimate ge = estimate_grad(family, target, eps, cfg.estimator,
                                          st.baseline, cfg.n_threads);
    double elbo_step;
    if (ge.finite) {
      adadelta_step(st, ge.grad, cfg);
      elbo_step = ge.elbo;
      st.baseline += (ge.elbo - st.baseline) / double(++st.baseline_count);
    } else {
      // flagged step: skip the update, keep accumulators
      ++st.n_flagged;
      ++st.step;
      elbo_step = tr.elbo.empty() ? 0.0 : tr.elbo.back();
    }
    tr.elbo.push_back(elbo_step);
    const auto t1 = std::chrono::steady_clock::now();
    tr.wall_ms.push_back(
        std::chrono::duration<double, std::milli>(t1 - t0).count());
    if (cfg.checkpoint_every > 0 && (step + 1) % cfg.checkpoint_every == 0) {
      tr.checkpoints.emplace_back(step + 1, st.lambda);
    }
  }

  family.set_lambda(st.lambda);
  tr.final_lambda = st.lambda;
  tr.n_flagged = st.n_flagged;
  tr.healthy = st.n_flagged <= 0.01 * cfg.n_steps;
  const int win = std::min<int>(cfg.elbo_window, static_cast<int>(tr.elbo.size()));
  double acc = 0.0;
  for (size_t i = tr.elbo.size() - win; i < tr.elbo.size(); ++i) {
    acc += tr.elbo[i];
  }
  tr.window_avg = win > 0 ? acc / win : 0.0;
  return tr;
}

}  // namespace

double estimate_elbo(const Family& family, const Target& target,
                     const Eigen::Ref<const Eigen::MatrixXd>& eps_draws) {
  const int S = static_cast<int>(eps_draws.cols());
  if (S < 1) {
    throw std::invalid_argument("estimate_elbo: need at least one draw");
  }
  double acc = 0.0;
  for (int s = 0; s < S; ++s) {
    const DrawEval de = family.draw_eval(eps_draws.col(s));
    acc += target.log_g(de.theta) - de.log_q;
  }
  return acc / S;
}

GradEstimate estimate_grad(const Family& family, const Target& target,
                           const Eigen::Ref<const Eigen::MatrixXd>& eps_draws,
                           GradEstimator estimator, double baseline,
                           int n_threads) {
  const int S = static_cast<int>(eps_draws.cols());
  if (S < 1) {
    throw std::invalid_argument("estimate_grad: need at least one draw");
  }
  if (estimator == GradEstimator::ScoreWithBaseline && !family.has_score_grad()) {
    throw std::invalid_argument(
        "estimate_grad: score estimator requires a family with score gradients");
  }

  std::vector<SampleEval> evals(S);
  if (n_threads > 1 && S > 1) {
    const int workers = std::min(n_threads, S);
    std::vector<std::thread> pool;
    pool.reserve(workers);
    std::atomic<int> next{0};
    for (int t = 0; t < workers; ++t) {
      pool.emplace_back([&] {
        for (int s = next.fetch_add(1); s < S; s = next.fetch_add(1)) {
          evals[s] = eval_one(family, target, eps_draws.col(s), estimator, baseline);
        }
      });
    }
    for (auto& th : pool) {
      th.join();
    }
  } else {
    for (int s = 0; s < S; ++s) {
      evals[s] = eval_one(family, target, eps_draws.col(s), estimator, baseline);
    }
  }

  // reduce in sample order for bitwise reproducibility
  GradEstimate out;
  out.grad = Eigen::VectorXd::Zero(family.lambda_size());
  for (int s = 0; s < S; ++s) {
    if (!evals[s].finite) {
      out.finite = false;
      return out;
    }
    out.grad += evals[s].grad;
    out.elbo += evals[s].elbo;
  }
  out.grad /= S;
  out.elbo /= S;
  return out;
}

void adadelta_step(OptState& state, const Eigen::Ref<const Eigen::VectorXd>& grad,
                   const OptimizerConfig& cfg) {
  if (grad.size() != state.lambda.size()) {
    throw std::invalid_argument("adadelta_step: gradient size mismatch");
  }
  const double rho = cfg.adadelta_rho;
  const double eps = cfg.adadelta_eps;
  state.Eg2 = rho * state.Eg2 + (1.0 - rho) * grad.cwiseAbs2();
  const Eigen::VectorXd dx =
      ((state.Edx2.array() + eps).sqrt() / (state.Eg2.array() + eps).sqrt() *
       grad.array())
          .matrix();
  state.Edx2 = rho * state.Edx2 + (1.0 - rho) * dx.cwiseAbs2();
  state.lambda += dx;
  ++state.step;
}

RunTrace run(Family& family, const Target& target, const OptimizerConfig& cfg) {
  std::mt19937_64 rng(cfg.seed);
  Eigen::VectorXd init = initial_lambda(family.spec(), rng);
  return run_impl(family, target, cfg, rng, std::move(init));
}

RunTrace run(Family& family, const Target& target, const OptimizerConfig& cfg,
             const Eigen::Ref<const Eigen::VectorXd>& init) {
  std::mt19937_64 rng(cfg.seed);
  // keep the rng stream aligned with the default-initialization path
  (void)initial_lambda(family.spec(), rng);
  return run_impl(family, target, cfg, rng, init);
}

}  // namespace vicop
