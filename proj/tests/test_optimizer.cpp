#include <doctest.h>

#include <cmath>
#include <random>

#include "vicop/gaussian_copula.hpp"
#include "vicop/optimizer.hpp"
#include "vicop/skew_normal_copula.hpp"
#include "vicop/stats.hpp"
#include "vicop/verification.hpp"

using namespace vicop;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

std::mt19937_64 rng(2027);

VectorXd randn(int n) {
  std::normal_distribution<double> nd(0.0, 1.0);
  VectorXd v(n);
  for (int i = 0; i < n; ++i) {
    v[i] = nd(rng);
  }
  return v;
}

MatrixXd randn_mat(int r, int c) {
  MatrixXd M(r, c);
  for (int j = 0; j < c; ++j) {
    M.col(j) = randn(r);
  }
  return M;
}

// lambda that makes the Gaussian family equal to the toy posterior: with
// m = k, take d small and B = chol(Sigma0 - D^2), so B B^T + D^2 = Sigma0
// to machine precision
VectorXd exact_lambda(const GaussianToy& toy, const FamilySpec& spec) {
  const Layout L = make_layout(spec);
  REQUIRE(spec.m == spec.k);
  VectorXd lam = VectorXd::Zero(L.total);
  lam.segment(L.mu, spec.m) = toy.mean();
  const VectorXd d = VectorXd::Constant(spec.m, 1e-3);
  MatrixXd core = toy.covariance();
  core.diagonal() -= d.cwiseAbs2();
  const MatrixXd B = core.llt().matrixL();
  int idx = L.b;
  for (int j = 0; j < spec.k; ++j) {
    for (int i = j; i < spec.m; ++i) {
      lam[idx++] = B(i, j);
    }
  }
  lam.segment(L.d, spec.m) = d;
  return lam;
}

}  // namespace

TEST_CASE("adadelta update identities") {
  OptimizerConfig cfg;
  OptState st;
  st.lambda = VectorXd::Zero(3);
  st.Eg2 = VectorXd::Zero(3);
  st.Edx2 = VectorXd::Zero(3);

  SUBCASE("zero gradient leaves lambda unchanged, accumulators decay") {
    st.Eg2 = VectorXd::Constant(3, 0.5);
    st.Edx2 = VectorXd::Constant(3, 0.25);
    adadelta_step(st, VectorXd::Zero(3), cfg);
    CHECK(st.lambda.norm() == 0.0);
    CHECK(st.Eg2[0] == doctest::Approx(0.95 * 0.5));
    CHECK(st.Edx2[0] == doctest::Approx(0.95 * 0.25));
  }

  SUBCASE("first step from zero accumulators") {
    const VectorXd g = Eigen::Vector3d(0.4, -1.2, 2.0);
    adadelta_step(st, g, cfg);
    for (int j = 0; j < 3; ++j) {
      const double expect =
          std::sqrt(cfg.adadelta_eps / ((1.0 - cfg.adadelta_rho) * g[j] * g[j] + cfg.adadelta_eps)) *
          g[j];
      CHECK(st.lambda[j] == doctest::Approx(expect).epsilon(1e-12));
      CHECK(st.lambda[j] * g[j] >= 0.0);  // ascent direction
    }
  }

  SUBCASE("update sign always follows the gradient sign") {
    st.Eg2 = VectorXd::Constant(3, 0.3);
    st.Edx2 = VectorXd::Constant(3, 0.04);
    const VectorXd g = Eigen::Vector3d(-0.7, 0.0, 1.3);
    adadelta_step(st, g, cfg);
    CHECK(st.lambda[0] < 0.0);
    CHECK(st.lambda[1] == 0.0);
    CHECK(st.lambda[2] > 0.0);
  }
}

TEST_CASE("elbo estimator is exactly the ceiling when q equals the posterior") {
  MatrixXd S(2, 2);
  S << 1.0, 0.8, 0.8, 1.0;
  const GaussianToy toy(Eigen::Vector2d(0.5, -0.3), S, 2.31);
  FamilySpec spec{2, 2, TransformKind::Identity, false};
  GaussianCopula fam(spec, exact_lambda(toy, spec));
  for (int rep = 0; rep < 20; ++rep) {
    const MatrixXd eps = randn_mat(fam.eps_dim(), 1);
    CHECK(estimate_elbo(fam, toy, eps) == doctest::Approx(2.31).epsilon(1e-9));
  }
}

TEST_CASE("reparam gradient vanishes pointwise at the exact optimum") {
  MatrixXd S(2, 2);
  S << 1.3, -0.4, -0.4, 0.9;
  const GaussianToy toy(Eigen::Vector2d(0.2, 0.7), S, -1.0);
  FamilySpec spec{2, 2, TransformKind::Identity, false};
  GaussianCopula fam(spec, exact_lambda(toy, spec));
  for (int rep = 0; rep < 20; ++rep) {
    const MatrixXd eps = randn_mat(fam.eps_dim(), 1);
    const GradEstimate ge = estimate_grad(fam, toy, eps, GradEstimator::Reparam);
    // w is zero up to the roundoff gap between the dense and Woodbury solves
    CHECK(ge.grad.cwiseAbs().maxCoeff() < 1e-8);
  }
}

TEST_CASE("elbo estimator agrees with 2-D quadrature of the integrand") {
  MatrixXd S(2, 2);
  S << 1.0, 0.5, 0.5, 1.5;
  const GaussianToy toy(Eigen::Vector2d(0.4, -0.6), S, 0.9);
  FamilySpec spec{2, 1, TransformKind::Identity, false};
  const Layout L = make_layout(spec);
  VectorXd lam = VectorXd::Zero(L.total);
  lam.segment(L.mu, 2) = Eigen::Vector2d(0.1, 0.1);
  lam[L.b] = 0.6;
  lam[L.b + 1] = 0.3;
  lam.segment(L.d, 2) = Eigen::Vector2d(0.8, 0.9);
  GaussianCopula fam(spec, lam);

  // quadrature of [log g - log q] q over a wide box
  const int n = 401;
  double L_quad = 0.0;
  const double lo = -6.0, hi = 6.0, h = (hi - lo) / (n - 1);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      Eigen::Vector2d x(lo + i * h, lo + j * h);
      const double wq = ((i == 0 || i == n - 1) ? 0.5 : 1.0) *
                        ((j == 0 || j == n - 1) ? 0.5 : 1.0) * h * h;
      const double lq = fam.log_density(x);
      L_quad += wq * std::exp(lq) * (toy.log_g(x) - lq);
    }
  }

  const int S_draws = 100000;
  double acc = 0.0, acc2 = 0.0;
  for (int t = 0; t < S_draws; ++t) {
    const double e = estimate_elbo(fam, toy, randn_mat(fam.eps_dim(), 1));
    acc += e;
    acc2 += e * e;
  }
  const double mean = acc / S_draws;
  const double se = std::sqrt((acc2 / S_draws - mean * mean) / S_draws);
  CHECK(std::abs(mean - L_quad) < 3.0 * se);
}

TEST_CASE("gradient estimators are unbiased and agree with each other") {
  MatrixXd S(3, 3);
  S << 1.0, 0.3, 0.1, 0.3, 1.2, -0.2, 0.1, -0.2, 0.8;
  const GaussianToy toy(Eigen::Vector3d(0.4, -0.2, 0.1), S, 0.0);
  FamilySpec spec{3, 1, TransformKind::Identity, false};
  const Layout L = make_layout(spec);
  VectorXd lam = VectorXd::Zero(L.total);
  lam.segment(L.mu, 3) = Eigen::Vector3d(0.1, 0.0, -0.1);
  lam[L.b] = 0.5;
  lam[L.b + 1] = 0.2;
  lam[L.b + 2] = -0.1;
  lam.segment(L.d, 3) = Eigen::Vector3d(0.7, 0.8, 0.75);
  GaussianCopula fam(spec, lam);

  const int N = 100000;
  VectorXd mean_r = VectorXd::Zero(L.total), var_r = VectorXd::Zero(L.total);
  VectorXd mean_s = VectorXd::Zero(L.total), var_s = VectorXd::Zero(L.total);
  for (int t = 0; t < N; ++t) {
    const GradEstimate gr =
        estimate_grad(fam, toy, randn_mat(fam.eps_dim(), 1), GradEstimator::Reparam);
    const GradEstimate gs = estimate_grad(fam, toy, randn_mat(fam.eps_dim(), 1),
                                          GradEstimator::ScoreWithBaseline, 0.0);
    mean_r += gr.grad;
    var_r += gr.grad.cwiseAbs2();
    mean_s += gs.grad;
    var_s += gs.grad.cwiseAbs2();
  }
  mean_r /= N;
  mean_s /= N;
  var_r = var_r / N - mean_r.cwiseAbs2();
  var_s = var_s / N - mean_s.cwiseAbs2();

  // the two estimators agree within 4 joint standard errors
  for (int j = 0; j < L.total; ++j) {
    const double se = std::sqrt(var_r[j] / N + var_s[j] / N);
    CHECK(std::abs(mean_r[j] - mean_s[j]) < 4.0 * se);
  }

  // and the reparam mean matches a common-random-number FD of the ELBO.
  // For a frozen eps bank, d/dlambda of the bank average is the pathwise
  // derivative vjp(w) - score per draw, so that difference's variance sets
  // the FD oracle's standard error.
  const int NFD = 20000;
  const MatrixXd eps_bank = randn_mat(fam.eps_dim(), NFD);
  auto elbo_at = [&](const VectorXd& l) {
    GaussianCopula f2(spec, l);
    double acc = 0.0;
    for (int t = 0; t < NFD; ++t) {
      const DrawEval de = f2.draw_eval(eps_bank.col(t));
      acc += toy.log_g(de.theta) - de.log_q;
    }
    return acc / NFD;
  };
  const VectorXd fd = fd_gradient(elbo_at, lam, FDConfig{1e-4, 1e-5});
  VectorXd var_path = VectorXd::Zero(L.total);
  {
    VectorXd mean_p = VectorXd::Zero(L.total);
    for (int t = 0; t < NFD; ++t) {
      const DrawEval de = fam.draw_eval(eps_bank.col(t));
      const VectorXd w = toy.grad_log_g(de.theta) - de.grad_theta_log_q;
      const VectorXd p = fam.reparam_vjp(eps_bank.col(t), w) - fam.score_grad(de.theta);
      mean_p += p;
      var_path += p.cwiseAbs2();
    }
    mean_p /= NFD;
    var_path = var_path / NFD - mean_p.cwiseAbs2();
  }
  for (int j = 0; j < L.total; ++j) {
    const double se = std::sqrt(var_r[j] / N + var_path[j] / NFD) + 1e-4;
    CHECK(std::abs(mean_r[j] - fd[j]) < 4.0 * se);
  }
}

TEST_CASE("toy run reaches the known ceiling (A3-style family)") {
  const GaussianToy toy = [] {
    MatrixXd S(2, 2);
    S << 1.0, 0.8, 0.8, 1.0;
    return GaussianToy(Eigen::Vector2d(0.5, -0.3), S, 1.234);
  }();
  FamilySpec spec{2, 1, TransformKind::Identity, false};
  GaussianCopula fam(spec);
  OptimizerConfig cfg;
  cfg.n_steps = 20000;
  cfg.seed = 11;
  const RunTrace tr = run(fam, toy, cfg);
  CHECK(tr.elbo.size() == 20000);
  CHECK(tr.healthy);
  CHECK(std::abs(tr.window_avg - 1.234) < 0.05);
}

TEST_CASE("identical seeds give bitwise-identical traces") {
  const GaussianToy toy = [] {
    MatrixXd S(2, 2);
    S << 1.0, 0.5, 0.5, 1.0;
    return GaussianToy(Eigen::Vector2d(0.2, 0.2), S, 0.0);
  }();
  FamilySpec spec{2, 1, TransformKind::YeoJohnson, false};
  OptimizerConfig cfg;
  cfg.n_steps = 500;
  cfg.seed = 99;
  cfg.samples_per_step = 3;

  GaussianCopula fam1(spec);
  const RunTrace t1 = run(fam1, toy, cfg);
  GaussianCopula fam2(spec);
  const RunTrace t2 = run(fam2, toy, cfg);
  REQUIRE(t1.elbo.size() == t2.elbo.size());
  for (size_t i = 0; i < t1.elbo.size(); ++i) {
    CHECK(t1.elbo[i] == t2.elbo[i]);
  }
  CHECK((t1.final_lambda - t2.final_lambda).norm() == 0.0);

  // concurrent sample evaluation preserves bitwise determinism
  OptimizerConfig cfg_mt = cfg;
  cfg_mt.n_threads = 4;
  GaussianCopula fam3(spec);
  const RunTrace t3 = run(fam3, toy, cfg_mt);
  for (size_t i = 0; i < t1.elbo.size(); ++i) {
    CHECK(t1.elbo[i] == t3.elbo[i]);
  }
  CHECK((t1.final_lambda - t3.final_lambda).norm() == 0.0);
}

TEST_CASE("richer nested family does at least as well (soft)") {
  const GaussianToy toy = [] {
    MatrixXd S(2, 2);
    S << 1.0, 0.6, 0.6, 1.0;
    return GaussianToy(Eigen::Vector2d(0.4, -0.5), S, 0.0);
  }();
  OptimizerConfig cfg;
  cfg.n_steps = 12000;
  cfg.seed = 5;

  FamilySpec a3{2, 1, TransformKind::Identity, false};
  GaussianCopula f3(a3);
  const double e3 = run(f3, toy, cfg).window_avg;

  FamilySpec a5{2, 1, TransformKind::YeoJohnson, false};
  GaussianCopula f5(a5);
  const double e5 = run(f5, toy, cfg).window_avg;

  CHECK(e5 >= e3 - 0.5);
}

TEST_CASE("score estimator on an unsupported family throws") {
  FamilySpec spec{2, 1, TransformKind::Identity, true};
  SkewNormalCopula fam(spec);
  const GaussianToy toy(Eigen::Vector2d::Zero(), MatrixXd::Identity(2, 2));
  const MatrixXd eps = MatrixXd::Zero(fam.eps_dim(), 1);
  CHECK_THROWS_AS(estimate_grad(fam, toy, eps, GradEstimator::ScoreWithBaseline),
                  std::invalid_argument);
}
