#ifndef VICOP_GAUSSIAN_COPULA_HPP
#define VICOP_GAUSSIAN_COPULA_HPP

#include "vicop/family.hpp"

namespace vicop {

// Gaussian copula variational family: psi = mu + B z + d o eps is Gaussian
// with factor scale, theta_i = t^-1(psi_i) margin-wise, and
//   log q(theta) = log phi_m(psi; mu, Sigma) + sum_i log t'(theta_i).
class GaussianCopula : public Family {
 public:
  GaussianCopula(FamilySpec spec);
  GaussianCopula(FamilySpec spec, const Eigen::Ref<const Eigen::VectorXd>& lambda);

  const FamilySpec& spec() const override { return spec_; }
  const Layout& layout() const override { return layout_; }
  int eps_dim() const override { return spec_.k + spec_.m; }

  void set_lambda(const Eigen::Ref<const Eigen::VectorXd>& lambda) override;
  Eigen::VectorXd lambda() const override;

  const Eigen::VectorXd& mu() const { return mu_; }
  const FactorScale& scale() const { return scale_; }
  const std::vector<TransformParams>& margins() const { return margins_; }

  Eigen::VectorXd draw(const Eigen::Ref<const Eigen::VectorXd>& eps) const override;
  DrawEval draw_eval(const Eigen::Ref<const Eigen::VectorXd>& eps) const override;

  double log_density(const Eigen::Ref<const Eigen::VectorXd>& theta) const override;
  Eigen::VectorXd grad_theta(const Eigen::Ref<const Eigen::VectorXd>& theta) const override;

  Eigen::VectorXd reparam_vjp(const Eigen::Ref<const Eigen::VectorXd>& eps,
                              const Eigen::Ref<const Eigen::VectorXd>& w) const override;

  bool has_score_grad() const override { return true; }
  Eigen::VectorXd score_grad(const Eigen::Ref<const Eigen::VectorXd>& theta) const override;

  // Marginal density q_i(theta) = phi_1(t(theta); mu_i, sigma^2_i) t'(theta).
  double marginal_density(int i, double theta) const;

 private:
  Eigen::VectorXd psi_from_eps(const Eigen::Ref<const Eigen::VectorXd>& eps) const;
  Eigen::VectorXd forward_all(const Eigen::Ref<const Eigen::VectorXd>& theta) const;

  FamilySpec spec_;
  Layout layout_;
  Eigen::VectorXd mu_;
  FactorScale scale_;
  Eigen::VectorXd gamma_u_;
  std::vector<TransformParams> margins_;
};

}  // namespace vicop

#endif
