#ifndef VICOP_TRANSFORMS_HPP
#define VICOP_TRANSFORMS_HPP

#include <array>
#include <stdexcept>

namespace vicop {

// Element-wise one-to-one transformations t: R -> R used to build the
// implicit-copula families.  psi = t(theta) is the Gaussian/skew-normal
// coordinate, theta the model coordinate.
enum class TransformKind { Identity, YeoJohnson, InverseGH };

// Number of free parameters per margin (0, 1 or 2).
int transform_param_count(TransformKind kind);

struct TransformParams {
  TransformKind kind = TransformKind::Identity;
  double yj_gamma = 1.0;  // in (0, 2)
  double gh_g = 0.0;
  double gh_h = 0.05;     // in (0, 1)

  static TransformParams identity();
  static TransformParams yeo_johnson(double gamma);
  static TransformParams inverse_gh(double g, double h);

  void validate() const;  // throws std::invalid_argument on domain violation
};

// All per-margin derivative quantities needed by the gradient paths,
// evaluated at a (psi, theta = t^-1(psi)) pair.  Parameter derivatives are
// with respect to the constrained parameters (gamma, or g then h).
struct DerivativeBundle {
  double theta = 0.0;
  double psi = 0.0;
  double dtheta_dpsi = 1.0;        // d t^-1 / d psi
  double tprime = 1.0;             // t'(theta) = d psi / d theta
  double d2theta_dpsi2 = 0.0;      // d^2 t^-1 / d psi^2
  double d2psi_dtheta2 = 0.0;      // t''(theta)
  double dlog_tprime_dtheta = 0.0; // t''/t'
  int n_params = 0;
  std::array<double, 2> dtheta_dparam{0.0, 0.0};   // d t^-1 / d param, psi fixed
  std::array<double, 2> dtprime_dparam{0.0, 0.0};  // d t' / d param (theta fixed
                                                   // for YJ; psi fixed for G&H,
                                                   // as in the inverse-route
                                                   // assembly)
  // d (dtheta_dpsi) / d param at fixed psi; kept so consumers can re-chain
  // the G&H t'-derivative to fixed theta when they need it.
  std::array<double, 2> d_dtheta_dpsi_dparam{0.0, 0.0};
};

// theta = t^-1(psi).  Strictly increasing in psi.
double tf_inverse(double psi, const TransformParams& p);

// psi = t(theta).  Closed form for YJ; safeguarded Newton for inverse G&H.
// Throws std::runtime_error if the root finder fails to converge.
double tf_forward(double theta, const TransformParams& p);

// Full derivative bundle at psi.
DerivativeBundle tf_derivatives(double psi, const TransformParams& p);

// d/dparam of log t'(theta) holding theta fixed; this is the quantity that
// appears in score gradients of log q.  For YJ it equals
// dtprime_dparam / tprime directly; for G&H the fixed-psi entries are
// re-chained through the psi shift.
std::array<double, 2> dlog_tprime_dparam_theta_fixed(const DerivativeBundle& b,
                                                     const TransformParams& p);

// d t(theta)/dparam at fixed theta, assembled from the inverse-side bundle.
std::array<double, 2> dpsi_dparam_theta_fixed(const DerivativeBundle& b);

// Bijection between the optimizer's unconstrained coordinates and the
// constrained parameter domain:
//   YJ:  gamma = 2 sigmoid(u)
//   G&H: g = u1, h = sigmoid(u2)
TransformParams transform_from_unconstrained(TransformKind kind, const double* u);
void transform_to_unconstrained(const TransformParams& p, double* u);

// d constrained / d unconstrained, evaluated at p (chain factors for
// expressing gradients in unconstrained coordinates).
std::array<double, 2> transform_unconstrained_chain(const TransformParams& p);

}  // namespace vicop

#endif
