#ifndef VICOP_FAMILY_HPP
#define VICOP_FAMILY_HPP

#include <Eigen/Dense>
#include <random>
#include <string>
#include <vector>

#include "vicop/factor_scale.hpp"
#include "vicop/transforms.hpp"

namespace vicop {

// Configuration of a variational family: dimension, factor count, margin
// transform kind, and whether the base distribution is skew-normal.
struct FamilySpec {
  int m = 0;
  int k = 0;
  TransformKind kind = TransformKind::Identity;
  bool skew = false;
};

// Offsets of the blocks inside the flat lambda vector, in the order
// (mu, vech(B), d, [alpha], gamma-unconstrained).
struct Layout {
  int m = 0;
  int k = 0;
  int n_tparams = 0;
  bool skew = false;
  int mu = 0;
  int b = 0;
  int d = 0;
  int alpha = 0;  // == d end when skew is false
  int gamma = 0;
  int total = 0;
};

Layout make_layout(const FamilySpec& spec);

// Closed-form |lambda| for a family configuration.
int family_param_count(int m, int k, TransformKind kind, bool skew);

// Evaluation record for one draw, computed along the psi path (the forward
// transform is never evaluated here).
struct DrawEval {
  Eigen::VectorXd psi;
  Eigen::VectorXd theta;
  double log_q = 0.0;
  Eigen::VectorXd grad_theta_log_q;
};

// Common interface the optimizer drives.
class Family {
 public:
  virtual ~Family() = default;

  virtual const FamilySpec& spec() const = 0;
  virtual const Layout& layout() const = 0;
  int dim() const { return spec().m; }
  int lambda_size() const { return layout().total; }

  // Length of the standard-normal driver vector eps.
  virtual int eps_dim() const = 0;

  virtual void set_lambda(const Eigen::Ref<const Eigen::VectorXd>& lambda) = 0;
  virtual Eigen::VectorXd lambda() const = 0;

  virtual Eigen::VectorXd draw(const Eigen::Ref<const Eigen::VectorXd>& eps) const = 0;
  virtual DrawEval draw_eval(const Eigen::Ref<const Eigen::VectorXd>& eps) const = 0;

  virtual double log_density(const Eigen::Ref<const Eigen::VectorXd>& theta) const = 0;
  virtual Eigen::VectorXd grad_theta(const Eigen::Ref<const Eigen::VectorXd>& theta) const = 0;

  // (d theta(eps, lambda)/d lambda)^T w, gamma block in unconstrained
  // coordinates.
  virtual Eigen::VectorXd reparam_vjp(const Eigen::Ref<const Eigen::VectorXd>& eps,
                                      const Eigen::Ref<const Eigen::VectorXd>& w) const = 0;

  // grad_lambda log q_lambda(theta) at fixed theta; only the Gaussian family
  // provides it.
  virtual bool has_score_grad() const { return false; }
  virtual Eigen::VectorXd score_grad(const Eigen::Ref<const Eigen::VectorXd>&) const;
};

// Margin transform parameters materialized from the unconstrained gamma
// block of lambda.
std::vector<TransformParams> margins_from_unconstrained(
    const FamilySpec& spec, const Eigen::Ref<const Eigen::VectorXd>& gamma_u);

// Initial lambda per the documented initialization: mu = 0 (or supplied),
// vech(B) ~ N(0, 0.01^2), d = 0.1, alpha = 0, YJ gamma = 1,
// G&H (g, h) = (0, 0.05).
Eigen::VectorXd initial_lambda(const FamilySpec& spec, std::mt19937_64& rng);
Eigen::VectorXd initial_lambda(const FamilySpec& spec, std::mt19937_64& rng,
                               const Eigen::Ref<const Eigen::VectorXd>& mu0);

}  // namespace vicop

#endif
