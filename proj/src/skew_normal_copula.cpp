#include "vicop/skew_normal_copula.hpp"

#include <cmath>
#include <stdexcept>

#include "vicop/stats.hpp"

namespace vicop {

SkewNormalCopula::SkewNormalCopula(FamilySpec spec)
    : spec_(spec), layout_(make_layout(spec)) {
  if (!spec_.skew) {
    throw std::invalid_argument("SkewNormalCopula: spec must be skew");
  }
  Eigen::VectorXd lam = Eigen::VectorXd::Zero(layout_.total);
  lam.segment(layout_.d, spec_.m).setConstant(1.0);
  set_lambda(lam);
}

SkewNormalCopula::SkewNormalCopula(FamilySpec spec,
                                   const Eigen::Ref<const Eigen::VectorXd>& lambda)
    : spec_(spec), layout_(make_layout(spec)) {
  if (!spec_.skew) {
    throw std::invalid_argument("SkewNormalCopula: spec must be skew");
  }
  set_lambda(lambda);
}

void SkewNormalCopula::set_lambda(const Eigen::Ref<const Eigen::VectorXd>& lambda) {
  if (lambda.size() != layout_.total) {
    throw std::invalid_argument("SkewNormalCopula: lambda size mismatch");
  }
  mu_ = lambda.segment(layout_.mu, spec_.m);
  scale_ = FactorScale(unvech(lambda.segment(layout_.b, layout_.d - layout_.b),
                              spec_.m, spec_.k),
                       lambda.segment(layout_.d, spec_.m));
  alpha_ = lambda.segment(layout_.alpha, spec_.m);
  gamma_u_ = lambda.segment(layout_.gamma, layout_.total - layout_.gamma);
  margins_ = margins_from_unconstrained(spec_, gamma_u_);
}

Eigen::VectorXd SkewNormalCopula::lambda() const {
  Eigen::VectorXd lam(layout_.total);
  lam.segment(layout_.mu, spec_.m) = mu_;
  lam.segment(layout_.b, layout_.d - layout_.b) = vech(scale_.B);
  lam.segment(layout_.d, spec_.m) = scale_.d;
  lam.segment(layout_.alpha, spec_.m) = alpha_;
  lam.segment(layout_.gamma, layout_.total - layout_.gamma) = gamma_u_;
  return lam;
}

SkewDerived SkewNormalCopula::derived() const {
  SkewDerived out;
  out.s_diag = scale_.variances();
  const Eigen::VectorXd s = out.s_diag.cwiseSqrt();
  const Eigen::VectorXd beta = alpha_.cwiseQuotient(s);  // S^{-1/2} alpha
  const Eigen::VectorXd n = scale_.apply(beta);          // Sigma beta
  const double q = beta.dot(n);                          // alpha^T Omega alpha
  const double u = 1.0 / std::sqrt(1.0 + q);
  out.delta_tilde = u * n;
  out.delta = out.delta_tilde.cwiseQuotient(s);
  out.kappa = out.delta_tilde.dot(scale_.solve(out.delta_tilde));
  if (!(out.kappa < 1.0)) {
    throw std::domain_error("SkewNormalCopula: degenerate skew, kappa >= 1");
  }
  out.kappa = std::max(out.kappa, 0.0);
  out.sqrt_term = std::sqrt(1.0 - out.kappa);
  return out;
}

Eigen::VectorXd SkewNormalCopula::psi_from_eps(
    const Eigen::Ref<const Eigen::VectorXd>& eps) const {
  if (eps.size() != eps_dim()) {
    throw std::invalid_argument("SkewNormalCopula: eps size mismatch");
  }
  const SkewDerived der = derived();
  const double r = eps[0];
  const double e0 = eps[1];
  const Eigen::VectorXd xi =
      scale_.sample(eps.segment(2, spec_.k), eps.tail(spec_.m));
  // (I - dt dt^T Sigma^{-1}) xi = xi - dt (dt^T Sigma^{-1} xi)
  const double proj = der.delta_tilde.dot(scale_.solve(xi));
  return mu_ + std::abs(r) * der.delta_tilde + xi - proj * der.delta_tilde +
         der.sqrt_term * e0 * der.delta_tilde;
}

Eigen::VectorXd SkewNormalCopula::draw(
    const Eigen::Ref<const Eigen::VectorXd>& eps) const {
  const Eigen::VectorXd psi = psi_from_eps(eps);
  Eigen::VectorXd theta(spec_.m);
  for (int i = 0; i < spec_.m; ++i) {
    theta[i] = tf_inverse(psi[i], margins_[i]);
  }
  return theta;
}

double SkewNormalCopula::log_density_psi(
    const Eigen::Ref<const Eigen::VectorXd>& psi, double* log_jac_out) const {
  const Eigen::VectorXd r = psi - mu_;
  const Eigen::VectorXd s = scale_.variances().cwiseSqrt();
  const double m4 = alpha_.cwiseQuotient(s).dot(r);
  double log_jac = 0.0;
  if (log_jac_out != nullptr) {
    *log_jac_out = 0.0;
  }
  for (int i = 0; i < spec_.m; ++i) {
    log_jac -= std::log(tf_derivatives(psi[i], margins_[i]).dtheta_dpsi);
  }
  if (log_jac_out != nullptr) {
    *log_jac_out = log_jac;
  }
  return std::log(2.0) - 0.5 * spec_.m * kLog2Pi - 0.5 * scale_.log_det() -
         0.5 * r.dot(scale_.solve(r)) + log_norm_cdf(m4) + log_jac;
}

DrawEval SkewNormalCopula::draw_eval(
    const Eigen::Ref<const Eigen::VectorXd>& eps) const {
  DrawEval ev;
  ev.psi = psi_from_eps(eps);
  ev.theta.resize(spec_.m);
  ev.grad_theta_log_q.resize(spec_.m);

  const Eigen::VectorXd r = ev.psi - mu_;
  const Eigen::VectorXd sir = scale_.solve(r);
  const Eigen::VectorXd s = scale_.variances().cwiseSqrt();
  const Eigen::VectorXd beta = alpha_.cwiseQuotient(s);
  const double m4 = beta.dot(r);
  const double mills = norm_mills_ratio(m4);

  double log_jac = 0.0;
  for (int i = 0; i < spec_.m; ++i) {
    const DerivativeBundle b = tf_derivatives(ev.psi[i], margins_[i]);
    ev.theta[i] = b.theta;
    log_jac -= std::log(b.dtheta_dpsi);
    ev.grad_theta_log_q[i] =
        b.dlog_tprime_dtheta + b.tprime * (-sir[i] + beta[i] * mills);
  }
  ev.log_q = std::log(2.0) - 0.5 * spec_.m * kLog2Pi -
             0.5 * scale_.log_det() - 0.5 * r.dot(sir) + log_norm_cdf(m4) +
             log_jac;
  return ev;
}

Eigen::VectorXd SkewNormalCopula::forward_all(
    const Eigen::Ref<const Eigen::VectorXd>& theta) const {
  Eigen::VectorXd psi(spec_.m);
  for (int i = 0; i < spec_.m; ++i) {
    psi[i] = tf_forward(theta[i], margins_[i]);
  }
  return psi;
}

double SkewNormalCopula::log_density(
    const Eigen::Ref<const Eigen::VectorXd>& theta) const {
  return log_density_psi(forward_all(theta), nullptr);
}

Eigen::VectorXd SkewNormalCopula::grad_theta(
    const Eigen::Ref<const Eigen::VectorXd>& theta) const {
  const Eigen::VectorXd psi = forward_all(theta);
  const Eigen::VectorXd r = psi - mu_;
  const Eigen::VectorXd sir = scale_.solve(r);
  const Eigen::VectorXd beta =
      alpha_.cwiseQuotient(scale_.variances().cwiseSqrt());
  const double mills = norm_mills_ratio(beta.dot(r));
  // Tq1 + Tq2 + Tq3
  Eigen::VectorXd g(spec_.m);
  for (int i = 0; i < spec_.m; ++i) {
    const DerivativeBundle b = tf_derivatives(psi[i], margins_[i]);
    g[i] = b.dlog_tprime_dtheta + b.tprime * (-sir[i] + beta[i] * mills);
  }
  return g;
}

// Vector-Jacobian product of the generative map, contracted block by block.
// With beta = S^{-1/2} alpha, n = Sigma beta, q = beta^T n,
// u = (1+q)^{-1/2} = sqrt(1-kappa) and delta_tilde = u n, the draw reduces to
//   psi = mu + xi + c dt,   c = |r| + u (e0 - beta^T xi),
// and the full derivative (including the dependence of delta and the
// normalizer on B and d) contracts against w in O(mk) without any solves.
Eigen::VectorXd SkewNormalCopula::reparam_vjp(
    const Eigen::Ref<const Eigen::VectorXd>& eps,
    const Eigen::Ref<const Eigen::VectorXd>& w) const {
  if (w.size() != spec_.m) {
    throw std::invalid_argument("SkewNormalCopula: w size mismatch");
  }
  const int m = spec_.m;
  const int k = spec_.k;
  const int nt = layout_.n_tparams;
  const double r = eps[0];
  const double e0 = eps[1];
  const auto z = eps.segment(2, k);
  const auto ep = eps.tail(m);

  const Eigen::VectorXd s2 = scale_.variances();
  const Eigen::VectorXd s = s2.cwiseSqrt();
  const Eigen::VectorXd beta = alpha_.cwiseQuotient(s);
  const Eigen::VectorXd n = scale_.apply(beta);
  const double q = beta.dot(n);
  const double u = 1.0 / std::sqrt(1.0 + q);
  if (!std::isfinite(u)) {
    throw std::domain_error("SkewNormalCopula: degenerate skew");
  }
  const Eigen::VectorXd xi = scale_.sample(z, ep);
  const double e = e0 - beta.dot(xi);
  const double c = std::abs(r) + u * e;
  const Eigen::VectorXd psi = mu_ + xi + (c * u) * n;

  Eigen::VectorXd a(m);
  Eigen::VectorXd grad = Eigen::VectorXd::Zero(layout_.total);
  for (int i = 0; i < m; ++i) {
    const DerivativeBundle b = tf_derivatives(psi[i], margins_[i]);
    a[i] = b.dtheta_dpsi;
    if (nt > 0) {
      const auto chain = transform_unconstrained_chain(margins_[i]);
      for (int j = 0; j < nt; ++j) {
        grad[layout_.gamma + i * nt + j] = w[i] * b.dtheta_dparam[j] * chain[j];
      }
    }
  }
  const Eigen::VectorXd v = a.cwiseProduct(w);

  const Eigen::VectorXd Sv = scale_.apply(v);
  const double vn = v.dot(n);
  const double sigma_v = u * vn;             // v^T delta_tilde
  const double A = c * u;
  const double K = c * vn + sigma_v * e;
  const double Ku3 = K * u * u * u;

  const Eigen::VectorXd v1 = v - (sigma_v * u) * beta;
  const Eigen::VectorXd v2 = A * Sv - (sigma_v * u) * xi - Ku3 * n;
  // coefficient of ds_i, folded through beta_i = alpha_i / s_i
  const Eigen::VectorXd t1s =
      v2.cwiseProduct(beta).cwiseQuotient(s2);

  grad.segment(layout_.mu, m) = v;

  if (k > 0) {
    const Eigen::VectorXd Bt_beta = scale_.B.transpose() * beta;
    const Eigen::VectorXd Bt_v = scale_.B.transpose() * v;
    Eigen::MatrixXd GB = v1 * z.transpose();
    GB.noalias() -= t1s.asDiagonal() * scale_.B;
    GB.noalias() += (A * v - Ku3 * beta) * Bt_beta.transpose();
    GB.noalias() += (A * beta) * Bt_v.transpose();
    int idx = layout_.b;
    for (int j = 0; j < k; ++j) {
      for (int i = j; i < m; ++i) {
        grad[idx++] = GB(i, j);
      }
    }
  }

  grad.segment(layout_.d, m) =
      v1.cwiseProduct(ep) - t1s.cwiseProduct(scale_.d) +
      scale_.d.cwiseProduct(2.0 * A * v.cwiseProduct(beta) -
                            Ku3 * beta.cwiseAbs2());

  grad.segment(layout_.alpha, m) = v2.cwiseQuotient(s);
  return grad;
}

double SkewNormalCopula::marginal_density(int i, double theta) const {
  const double psi = tf_forward(theta, margins_[i]);
  const SkewDerived der = derived();
  const double sd = std::sqrt(der.s_diag[i]);
  const double zi = (psi - mu_[i]) / sd;
  const double di = der.delta[i];
  const double shape = di / std::sqrt(1.0 - di * di);
  const double tprime = tf_derivatives(psi, margins_[i]).tprime;
  return 2.0 * std::exp(log_norm_pdf(zi) + log_norm_cdf(shape * zi)) / sd *
         tprime;
}

}  // namespace vicop
