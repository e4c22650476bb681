#ifndef VICOP_SKEW_NORMAL_COPULA_HPP
#define VICOP_SKEW_NORMAL_COPULA_HPP

#include "vicop/family.hpp"

namespace vicop {

// Quantities derived from (B, d, alpha):
//   Omega = S^{-1/2} Sigma S^{-1/2},  delta = (1 + a^T Omega a)^{-1/2} Omega a,
//   delta_tilde = S^{1/2} delta,      kappa = delta_tilde^T Sigma^{-1} delta_tilde.
struct SkewDerived {
  Eigen::VectorXd s_diag;       // sigma^2_i (diag of Sigma)
  Eigen::VectorXd delta;        // delta_psi
  Eigen::VectorXd delta_tilde;  // S^{1/2} delta_psi
  double kappa = 0.0;           // in [0, 1)
  double sqrt_term = 1.0;       // sqrt(1 - kappa)
};

// Skew-normal copula family: psi has density
//   2 phi_m(psi; mu, Sigma) Phi_1(alpha^T S^{-1/2}(psi - mu)),
// theta_i = t^-1(psi_i), and the latent-Gaussian generative representation
//   psi = mu + dt |r| + (I - dt dt^T Sigma^{-1}) (B z + d o ep)
//            + sqrt(1 - kappa) dt e0,       dt = delta_tilde.
// The driver is eps = (r, e0, z, ep) of length 2 + k + m.
class SkewNormalCopula : public Family {
 public:
  SkewNormalCopula(FamilySpec spec);
  SkewNormalCopula(FamilySpec spec, const Eigen::Ref<const Eigen::VectorXd>& lambda);

  const FamilySpec& spec() const override { return spec_; }
  const Layout& layout() const override { return layout_; }
  int eps_dim() const override { return 2 + spec_.k + spec_.m; }

  void set_lambda(const Eigen::Ref<const Eigen::VectorXd>& lambda) override;
  Eigen::VectorXd lambda() const override;

  const Eigen::VectorXd& mu() const { return mu_; }
  const FactorScale& scale() const { return scale_; }
  const Eigen::VectorXd& alpha() const { return alpha_; }
  const std::vector<TransformParams>& margins() const { return margins_; }

  // Throws std::domain_error if kappa >= 1 numerically (degenerate skew).
  SkewDerived derived() const;

  Eigen::VectorXd draw(const Eigen::Ref<const Eigen::VectorXd>& eps) const override;
  DrawEval draw_eval(const Eigen::Ref<const Eigen::VectorXd>& eps) const override;

  double log_density(const Eigen::Ref<const Eigen::VectorXd>& theta) const override;
  Eigen::VectorXd grad_theta(const Eigen::Ref<const Eigen::VectorXd>& theta) const override;

  Eigen::VectorXd reparam_vjp(const Eigen::Ref<const Eigen::VectorXd>& eps,
                              const Eigen::Ref<const Eigen::VectorXd>& w) const override;

  // Marginal density via the skew-normal margins: the i-th margin is
  // SN(mu_i, sigma^2_i, shape delta_i / sqrt(1 - delta_i^2)).
  double marginal_density(int i, double theta) const;

 private:
  Eigen::VectorXd psi_from_eps(const Eigen::Ref<const Eigen::VectorXd>& eps) const;
  Eigen::VectorXd forward_all(const Eigen::Ref<const Eigen::VectorXd>& theta) const;
  double log_density_psi(const Eigen::Ref<const Eigen::VectorXd>& psi,
                         double* log_jac_out) const;

  FamilySpec spec_;
  Layout layout_;
  Eigen::VectorXd mu_;
  FactorScale scale_;
  Eigen::VectorXd alpha_;
  Eigen::VectorXd gamma_u_;
  std::vector<TransformParams> margins_;
};

}  // namespace vicop

#endif
