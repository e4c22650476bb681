#include "vicop/gaussian_copula.hpp"

#include <cmath>
#include <stdexcept>

#include "vicop/stats.hpp"

namespace vicop {

GaussianCopula::GaussianCopula(FamilySpec spec)
    : spec_(spec), layout_(make_layout(spec)) {
  if (spec_.skew) {
    throw std::invalid_argument("GaussianCopula: spec must not be skew");
  }
  Eigen::VectorXd lam = Eigen::VectorXd::Zero(layout_.total);
  lam.segment(layout_.d, spec_.m).setConstant(1.0);
  set_lambda(lam);
}

GaussianCopula::GaussianCopula(FamilySpec spec,
                               const Eigen::Ref<const Eigen::VectorXd>& lambda)
    : spec_(spec), layout_(make_layout(spec)) {
  if (spec_.skew) {
    throw std::invalid_argument("GaussianCopula: spec must not be skew");
  }
  set_lambda(lambda);
}

void GaussianCopula::set_lambda(const Eigen::Ref<const Eigen::VectorXd>& lambda) {
  if (lambda.size() != layout_.total) {
    throw std::invalid_argument("GaussianCopula: lambda size mismatch");
  }
  mu_ = lambda.segment(layout_.mu, spec_.m);
  scale_ = FactorScale(unvech(lambda.segment(layout_.b, layout_.d - layout_.b),
                              spec_.m, spec_.k),
                       lambda.segment(layout_.d, spec_.m));
  gamma_u_ = lambda.segment(layout_.gamma, layout_.total - layout_.gamma);
  margins_ = margins_from_unconstrained(spec_, gamma_u_);
}

Eigen::VectorXd GaussianCopula::lambda() const {
  Eigen::VectorXd lam(layout_.total);
  lam.segment(layout_.mu, spec_.m) = mu_;
  lam.segment(layout_.b, layout_.d - layout_.b) = vech(scale_.B);
  lam.segment(layout_.d, spec_.m) = scale_.d;
  lam.segment(layout_.gamma, layout_.total - layout_.gamma) = gamma_u_;
  return lam;
}

Eigen::VectorXd GaussianCopula::psi_from_eps(
    const Eigen::Ref<const Eigen::VectorXd>& eps) const {
  if (eps.size() != eps_dim()) {
    throw std::invalid_argument("GaussianCopula: eps size mismatch");
  }
  return mu_ + scale_.sample(eps.head(spec_.k), eps.tail(spec_.m));
}

Eigen::VectorXd GaussianCopula::draw(
    const Eigen::Ref<const Eigen::VectorXd>& eps) const {
  const Eigen::VectorXd psi = psi_from_eps(eps);
  Eigen::VectorXd theta(spec_.m);
  for (int i = 0; i < spec_.m; ++i) {
    theta[i] = tf_inverse(psi[i], margins_[i]);
  }
  return theta;
}

DrawEval GaussianCopula::draw_eval(
    const Eigen::Ref<const Eigen::VectorXd>& eps) const {
  DrawEval ev;
  ev.psi = psi_from_eps(eps);
  ev.theta.resize(spec_.m);
  ev.grad_theta_log_q.resize(spec_.m);

  const Eigen::VectorXd r = ev.psi - mu_;
  const Eigen::VectorXd sir = scale_.solve(r);
  double log_jac = 0.0;
  for (int i = 0; i < spec_.m; ++i) {
    const DerivativeBundle b = tf_derivatives(ev.psi[i], margins_[i]);
    ev.theta[i] = b.theta;
    log_jac -= std::log(b.dtheta_dpsi);
    ev.grad_theta_log_q[i] = b.dlog_tprime_dtheta - b.tprime * sir[i];
  }
  ev.log_q = -0.5 * spec_.m * kLog2Pi - 0.5 * scale_.log_det() -
             0.5 * r.dot(sir) + log_jac;
  return ev;
}

Eigen::VectorXd GaussianCopula::forward_all(
    const Eigen::Ref<const Eigen::VectorXd>& theta) const {
  Eigen::VectorXd psi(spec_.m);
  for (int i = 0; i < spec_.m; ++i) {
    psi[i] = tf_forward(theta[i], margins_[i]);
  }
  return psi;
}

double GaussianCopula::log_density(
    const Eigen::Ref<const Eigen::VectorXd>& theta) const {
  const Eigen::VectorXd psi = forward_all(theta);
  const Eigen::VectorXd r = psi - mu_;
  double log_jac = 0.0;
  for (int i = 0; i < spec_.m; ++i) {
    log_jac -= std::log(tf_derivatives(psi[i], margins_[i]).dtheta_dpsi);
  }
  return -0.5 * spec_.m * kLog2Pi - 0.5 * scale_.log_det() -
         0.5 * r.dot(scale_.solve(r)) + log_jac;
}

Eigen::VectorXd GaussianCopula::grad_theta(
    const Eigen::Ref<const Eigen::VectorXd>& theta) const {
  const Eigen::VectorXd psi = forward_all(theta);
  const Eigen::VectorXd sir = scale_.solve(psi - mu_);
  Eigen::VectorXd g(spec_.m);
  for (int i = 0; i < spec_.m; ++i) {
    const DerivativeBundle b = tf_derivatives(psi[i], margins_[i]);
    g[i] = b.dlog_tprime_dtheta - b.tprime * sir[i];
  }
  return g;
}

Eigen::VectorXd GaussianCopula::reparam_vjp(
    const Eigen::Ref<const Eigen::VectorXd>& eps,
    const Eigen::Ref<const Eigen::VectorXd>& w) const {
  if (w.size() != spec_.m) {
    throw std::invalid_argument("GaussianCopula: w size mismatch");
  }
  const Eigen::VectorXd psi = psi_from_eps(eps);
  const int nt = layout_.n_tparams;

  Eigen::VectorXd a(spec_.m);
  Eigen::VectorXd grad = Eigen::VectorXd::Zero(layout_.total);
  for (int i = 0; i < spec_.m; ++i) {
    const DerivativeBundle b = tf_derivatives(psi[i], margins_[i]);
    a[i] = b.dtheta_dpsi * w[i];
    if (nt > 0) {
      const auto chain = transform_unconstrained_chain(margins_[i]);
      for (int j = 0; j < nt; ++j) {
        grad[layout_.gamma + i * nt + j] = w[i] * b.dtheta_dparam[j] * chain[j];
      }
    }
  }

  grad.segment(layout_.mu, spec_.m) = a;
  // vech(B) block: lower trapezoid of a z^T.
  int idx = layout_.b;
  for (int j = 0; j < spec_.k; ++j) {
    const double zj = eps[j];
    for (int i = j; i < spec_.m; ++i) {
      grad[idx++] = a[i] * zj;
    }
  }
  grad.segment(layout_.d, spec_.m) = a.cwiseProduct(eps.tail(spec_.m));
  return grad;
}

Eigen::VectorXd GaussianCopula::score_grad(
    const Eigen::Ref<const Eigen::VectorXd>& theta) const {
  const Eigen::VectorXd psi = forward_all(theta);
  const Eigen::VectorXd rho = scale_.solve(psi - mu_);  // Sigma^{-1}(psi - mu)
  const int nt = layout_.n_tparams;

  Eigen::VectorXd grad = Eigen::VectorXd::Zero(layout_.total);
  grad.segment(layout_.mu, spec_.m) = rho;

  if (spec_.k > 0) {
    // vech(-Sigma^{-1} B + rho rho^T B)
    Eigen::MatrixXd GB = -scale_.solve_matrix(scale_.B);
    GB.noalias() += rho * (scale_.B.transpose() * rho).transpose();
    int idx = layout_.b;
    for (int j = 0; j < spec_.k; ++j) {
      for (int i = j; i < spec_.m; ++i) {
        grad[idx++] = GB(i, j);
      }
    }
  }

  grad.segment(layout_.d, spec_.m) =
      scale_.d.cwiseProduct(rho.cwiseAbs2() - scale_.inverse_diagonal());

  if (nt > 0) {
    for (int i = 0; i < spec_.m; ++i) {
      const DerivativeBundle b = tf_derivatives(psi[i], margins_[i]);
      const auto dpsi = dpsi_dparam_theta_fixed(b);
      const auto dltp = dlog_tprime_dparam_theta_fixed(b, margins_[i]);
      const auto chain = transform_unconstrained_chain(margins_[i]);
      for (int j = 0; j < nt; ++j) {
        grad[layout_.gamma + i * nt + j] =
            (-dpsi[j] * rho[i] + dltp[j]) * chain[j];
      }
    }
  }
  return grad;
}

double GaussianCopula::marginal_density(int i, double theta) const {
  const double psi = tf_forward(theta, margins_[i]);
  const double var_i = scale_.variances()[i];
  const double z = (psi - mu_[i]) / std::sqrt(var_i);
  const double tprime = tf_derivatives(psi, margins_[i]).tprime;
  return std::exp(log_norm_pdf(z)) / std::sqrt(var_i) * tprime;
}

}  // namespace vicop
