#include <doctest.h>

#include <cmath>
#include <random>

#include "vicop/stats.hpp"
#include "vicop/targets.hpp"
#include "vicop/verification.hpp"

using namespace vicop;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

std::mt19937_64 rng(99);

VectorXd randn(int n) {
  std::normal_distribution<double> nd(0.0, 1.0);
  VectorXd v(n);
  for (int i = 0; i < n; ++i) {
    v[i] = nd(rng);
  }
  return v;
}

DesignMatrix random_design(int n, int p) {
  DesignMatrix dm;
  dm.X = MatrixXd::NullaryExpr(n, p, [&](Eigen::Index, Eigen::Index) {
    std::normal_distribution<double> nd(0.0, 1.0);
    return nd(rng);
  });
  dm.y = VectorXd::NullaryExpr(n, [&](Eigen::Index) { return rng() % 2 ? 1.0 : 0.0; });
  return dm;
}

}  // namespace

TEST_CASE("logistic: beta = 0 log-likelihood is -n log 2") {
  const int n = 17, p = 3;
  DesignMatrix dm = random_design(n, p);
  LogisticRegression t(dm, 10.0);
  const double prior_at_zero = -0.5 * p * std::log(2.0 * M_PI * 10.0);
  CHECK(t.log_g(VectorXd::Zero(p)) ==
        doctest::Approx(-n * std::log(2.0) + prior_at_zero).epsilon(1e-12));
}

TEST_CASE("logistic: single-observation gradient") {
  DesignMatrix dm;
  dm.X = MatrixXd::Ones(1, 1);
  dm.y = VectorXd::Ones(1);
  LogisticRegression t(dm, 10.0);
  // likelihood part at beta=0: y - sigmoid(0) = 0.5; prior part is zero
  CHECK(t.grad_log_g(VectorXd::Zero(1))[0] == doctest::Approx(0.5).epsilon(1e-14));
}

TEST_CASE("logistic: gradient matches finite differences") {
  DesignMatrix dm = random_design(20, 5);
  LogisticRegression t(dm, 10.0);
  for (int rep = 0; rep < 20; ++rep) {
    const VectorXd beta = randn(5);
    const VectorXd fd = fd_gradient([&](const VectorXd& b) { return t.log_g(b); }, beta,
                                    FDConfig{1e-6, 1e-7});
    CHECK(rel_err(t.grad_log_g(beta), fd) < 1e-7);
  }
}

TEST_CASE("logistic: overflow-safe for extreme linear predictors") {
  DesignMatrix dm;
  dm.X = MatrixXd::Ones(2, 1);
  dm.y = VectorXd::Zero(2);
  dm.y[0] = 1.0;
  LogisticRegression t(dm, 10.0);
  VectorXd beta(1);
  for (const double b : {-700.0, 700.0}) {
    beta << b;
    CHECK(std::isfinite(t.log_g(beta)));
    CHECK(std::isfinite(t.grad_log_g(beta)[0]));
  }
}

TEST_CASE("mixed logistic: random-effect block identities") {
  const int n = 8, p = 2, J = 3;
  DesignMatrix dm = random_design(n, p);
  std::vector<int> subj = {0, 1, 2, 0, 1, 2, 0, 1};
  MixedLogistic t(dm, subj, J);

  // all b_j = 0: random-effect term is -J zeta - (J/2) log 2pi
  VectorXd theta = VectorXd::Zero(t.dim());
  const double zeta = 0.7;
  theta[p] = zeta;
  double base = t.log_g(theta);
  theta[p] = 0.0;
  double at_zero = t.log_g(theta);
  const double prior_diff = -0.5 * zeta * zeta / 10.0;
  CHECK(base - at_zero == doctest::Approx(-J * zeta + prior_diff).epsilon(1e-10));

  // stationarity: b_j^2 = exp(2 zeta) makes the random-effect part of
  // d log g / d zeta vanish (only the zeta prior remains)
  VectorXd theta2 = VectorXd::Zero(t.dim());
  theta2[p] = 0.3;
  for (int j = 0; j < J; ++j) {
    theta2[p + 1 + j] = std::exp(theta2[p]);
  }
  const double g_zeta = t.grad_log_g(theta2)[p];
  CHECK(g_zeta == doctest::Approx(-theta2[p] / 10.0).epsilon(1e-10));
}

TEST_CASE("mixed logistic: gradient matches finite differences on a 3-subject toy") {
  const int n = 8, p = 2, J = 3;
  DesignMatrix dm = random_design(n, p);
  std::vector<int> subj = {0, 1, 2, 0, 1, 2, 0, 1};
  MixedLogistic t(dm, subj, J);
  for (int rep = 0; rep < 20; ++rep) {
    const VectorXd theta = randn(t.dim());
    const VectorXd fd = fd_gradient([&](const VectorXd& x) { return t.log_g(x); }, theta,
                                    FDConfig{1e-6, 1e-6});
    CHECK(rel_err(t.grad_log_g(theta), fd) < 1e-6);
  }
}

TEST_CASE("mixed logistic: unknown subject index throws") {
  DesignMatrix dm = random_design(4, 2);
  std::vector<int> subj = {0, 1, 2, 3};
  CHECK_THROWS_AS(MixedLogistic(dm, subj, 3), std::invalid_argument);
}

TEST_CASE("gaussian toy: evidence constant is the ELBO ceiling") {
  MatrixXd S(2, 2);
  S << 1.0, 0.0, 0.0, 2.0;
  GaussianToy t0(Eigen::Vector2d(0.0, 0.0), S, 0.0);
  CHECK(t0.log_evidence() == 0.0);
  GaussianToy t(Eigen::Vector2d(0.1, -0.2), S, 3.7);
  CHECK(t.log_evidence() == doctest::Approx(3.7));
  // log g integrates to exp(C): at the mean, log g = C + log N(mu; mu, S)
  const double expected =
      3.7 - 0.5 * 2 * kLog2Pi - 0.5 * std::log(S.determinant());
  CHECK(t.log_g(Eigen::Vector2d(0.1, -0.2)) == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("gaussian toy: non-SPD covariance rejected, gradient checks out") {
  MatrixXd bad(2, 2);
  bad << 1.0, 2.0, 2.0, 1.0;
  CHECK_THROWS_AS(GaussianToy(Eigen::Vector2d::Zero(), bad), std::invalid_argument);

  MatrixXd S(2, 2);
  S << 1.0, 0.8, 0.8, 1.0;
  GaussianToy t(Eigen::Vector2d(0.4, -0.1), S, 1.0);
  for (int rep = 0; rep < 10; ++rep) {
    const VectorXd theta = randn(2);
    const VectorXd fd = fd_gradient([&](const VectorXd& x) { return t.log_g(x); }, theta);
    CHECK(rel_err(t.grad_log_g(theta), fd) < 1e-6);
  }
}

TEST_CASE("design matrix validation") {
  DesignMatrix dm = random_design(5, 2);
  dm.y[2] = 2.0;
  CHECK_THROWS_AS(dm.validate(), std::invalid_argument);
  DesignMatrix dm2 = random_design(5, 2);
  dm2.X(1, 1) = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(dm2.validate(), std::invalid_argument);
}
