#include "vicop/transforms.hpp"

#include <cmath>
#include <limits>

#include "vicop/stats.hpp"

namespace vicop {

namespace {

// Below this the g = 0 column of the inverse G&H formulas is used; the
// generic expression is 0/0 at g = 0.
constexpr double kGhZeroTol = 1e-8;

constexpr int kForwardMaxIter = 200;

}  // namespace

int transform_param_count(TransformKind kind) {
  switch (kind) {
    case TransformKind::Identity:
      return 0;
    case TransformKind::YeoJohnson:
      return 1;
    case TransformKind::InverseGH:
      return 2;
  }
  return 0;
}

TransformParams TransformParams::identity() { return TransformParams{}; }

TransformParams TransformParams::yeo_johnson(double gamma) {
  TransformParams p;
  p.kind = TransformKind::YeoJohnson;
  p.yj_gamma = gamma;
  p.validate();
  return p;
}

TransformParams TransformParams::inverse_gh(double g, double h) {
  TransformParams p;
  p.kind = TransformKind::InverseGH;
  p.gh_g = g;
  p.gh_h = h;
  p.validate();
  return p;
}

void TransformParams::validate() const {
  switch (kind) {
    case TransformKind::Identity:
      return;
    case TransformKind::YeoJohnson:
      if (!(yj_gamma > 0.0 && yj_gamma < 2.0)) {
        throw std::invalid_argument("Yeo-Johnson gamma must lie in (0, 2)");
      }
      return;
    case TransformKind::InverseGH:
      if (!std::isfinite(gh_g)) {
        throw std::invalid_argument("inverse G&H g must be finite");
      }
      if (!(gh_h > 0.0 && gh_h < 1.0)) {
        throw std::invalid_argument("inverse G&H h must lie in (0, 1)");
      }
      return;
  }
}

double tf_inverse(double psi, const TransformParams& p) {
  p.validate();
  switch (p.kind) {
    case TransformKind::Identity:
      return psi;
    case TransformKind::YeoJohnson: {
      const double g = p.yj_gamma;
      if (psi >= 0.0) {
        return std::pow(1.0 + psi * g, 1.0 / g) - 1.0;
      }
      const double b = 2.0 - g;
      return 1.0 - std::pow(1.0 - psi * b, 1.0 / b);
    }
    case TransformKind::InverseGH: {
      const double tail = std::exp(0.5 * p.gh_h * psi * psi);
      if (std::abs(p.gh_g) < kGhZeroTol) {
        return psi * tail;
      }
      return std::expm1(p.gh_g * psi) / p.gh_g * tail;
    }
  }
  return psi;
}

namespace {

double yj_forward(double theta, double gamma) {
  if (theta >= 0.0) {
    return std::expm1(gamma * std::log1p(theta)) / gamma;
  }
  const double b = 2.0 - gamma;
  return -std::expm1(b * std::log1p(-theta)) / b;
}

// d t_gamma(theta) / d gamma at fixed theta.  Table 1's theta >= 0 numerator
// is re-derived from d/dgamma[((theta+1)^gamma - 1)/gamma]; both branches
// share the shape (b u^b ln u - u^b + 1)/b^2.
double yj_dpsi_dgamma(double theta, double gamma) {
  if (theta >= 0.0) {
    const double lu = std::log1p(theta);
    const double ub = std::exp(gamma * lu);  // (1+theta)^gamma
    return (gamma * ub * lu - ub + 1.0) / (gamma * gamma);
  }
  const double b = 2.0 - gamma;
  const double lu = std::log1p(-theta);
  const double ub = std::exp(b * lu);  // (1-theta)^(2-gamma)
  return (b * ub * lu - ub + 1.0) / (b * b);
}

DerivativeBundle yj_derivatives(double psi, double gamma) {
  DerivativeBundle b;
  b.psi = psi;
  b.n_params = 1;
  if (psi >= 0.0) {
    const double base = 1.0 + psi * gamma;
    const double lb = std::log(base);
    b.theta = std::expm1(lb / gamma);
    b.dtheta_dpsi = std::exp((1.0 - gamma) / gamma * lb);
    b.d2theta_dpsi2 = (1.0 - gamma) * std::exp((1.0 - 2.0 * gamma) / gamma * lb);
    const double lt = std::log1p(b.theta);
    b.tprime = std::exp((gamma - 1.0) * lt);
    b.d2psi_dtheta2 = (gamma - 1.0) * std::exp((gamma - 2.0) * lt);
    b.dlog_tprime_dtheta = (gamma - 1.0) / (1.0 + b.theta);
    b.dtprime_dparam[0] = b.tprime * lt;
    b.d_dtheta_dpsi_dparam[0] =
        b.dtheta_dpsi * (-lb / (gamma * gamma) +
                         (1.0 - gamma) * psi / (gamma * base));
  } else {
    const double bb = 2.0 - gamma;
    const double base = 1.0 - psi * bb;
    const double lb = std::log(base);
    b.theta = -std::expm1(lb / bb);
    b.dtheta_dpsi = std::exp((gamma - 1.0) / bb * lb);
    b.d2theta_dpsi2 = (1.0 - gamma) * std::exp((2.0 * gamma - 3.0) / bb * lb);
    const double lt = std::log1p(-b.theta);  // log(1 - theta)
    b.tprime = std::exp((1.0 - gamma) * lt);
    b.d2psi_dtheta2 = (gamma - 1.0) * std::exp(-gamma * lt);
    b.dlog_tprime_dtheta = (gamma - 1.0) / (1.0 - b.theta);
    b.dtprime_dparam[0] = -b.tprime * lt;
    b.d_dtheta_dpsi_dparam[0] =
        b.dtheta_dpsi * (lb / (bb * bb) + (gamma - 1.0) * psi / (bb * base));
  }
  b.dtheta_dparam[0] = -b.dtheta_dpsi * yj_dpsi_dgamma(b.theta, gamma);
  return b;
}

DerivativeBundle gh_derivatives(double psi, double g, double h) {
  DerivativeBundle b;
  b.psi = psi;
  b.n_params = 2;
  const double tail = std::exp(0.5 * h * psi * psi);
  const bool g_zero = std::abs(g) < kGhZeroTol;
  const double core = g_zero ? tail : std::exp(g * psi) * tail;  // e^{g psi + h psi^2/2}
  if (g_zero) {
    b.theta = psi * tail;
    // limit of (psi/g) e^{g psi} ... - theta/g as g -> 0
    b.dtheta_dparam[0] = (0.5 * psi * psi + g * psi * psi * psi / 3.0) * tail;
  } else {
    b.theta = std::expm1(g * psi) / g * tail;
    b.dtheta_dparam[0] = psi / g * core - b.theta / g;
  }
  b.dtheta_dparam[1] = 0.5 * psi * psi * b.theta;
  b.dtheta_dpsi = core + h * psi * b.theta;
  b.d2theta_dpsi2 = core * (g + h * psi) + h * psi * b.dtheta_dpsi + h * b.theta;
  b.tprime = 1.0 / b.dtheta_dpsi;
  const double inv2 = b.tprime * b.tprime;
  b.d2psi_dtheta2 = -inv2 * b.tprime * b.d2theta_dpsi2;
  b.dlog_tprime_dtheta = -inv2 * b.d2theta_dpsi2;
  b.d_dtheta_dpsi_dparam[0] = psi * core + h * psi * b.dtheta_dparam[0];
  b.d_dtheta_dpsi_dparam[1] =
      0.5 * psi * psi * core + psi * b.theta + h * psi * b.dtheta_dparam[1];
  b.dtprime_dparam[0] = -inv2 * b.d_dtheta_dpsi_dparam[0];
  b.dtprime_dparam[1] = -inv2 * b.d_dtheta_dpsi_dparam[1];
  return b;
}

double gh_forward(double theta, const TransformParams& p) {
  if (theta == 0.0) {
    return 0.0;
  }
  // Bracket by monotonicity, doubling away from the origin.
  double lo = 0.0, hi = 0.0;
  if (theta > 0.0) {
    hi = 1.0;
    while (tf_inverse(hi, p) < theta) {
      lo = hi;
      hi *= 2.0;
      if (hi > 1e306) {
        throw std::runtime_error("inverse G&H forward transform: bracket overflow");
      }
    }
  } else {
    lo = -1.0;
    while (tf_inverse(lo, p) > theta) {
      hi = lo;
      lo *= 2.0;
      if (lo < -1e306) {
        throw std::runtime_error("inverse G&H forward transform: bracket overflow");
      }
    }
  }
  const double eps = std::numeric_limits<double>::epsilon();
  const double rtol = std::max(1e-10, std::abs(theta) * 4.0 * eps);
  double psi = 0.5 * (lo + hi);
  for (int it = 0; it < kForwardMaxIter; ++it) {
    const double val = tf_inverse(psi, p);
    const double resid = val - theta;
    if (std::isfinite(resid) && std::abs(resid) <= rtol) {
      return psi;
    }
    if (std::isfinite(val)) {
      (resid > 0.0 ? hi : lo) = psi;
    } else {
      // overflowed evaluation: shrink toward the origin side
      (psi > 0.0 ? hi : lo) = psi;
    }
    double next = std::numeric_limits<double>::quiet_NaN();
    if (std::isfinite(resid)) {
      const double tail = std::exp(0.5 * p.gh_h * psi * psi);
      const double core = std::abs(p.gh_g) < kGhZeroTol
                              ? tail
                              : std::exp(p.gh_g * psi) * tail;
      const double slope = core + p.gh_h * psi * val;
      if (std::isfinite(slope) && slope > 0.0) {
        next = psi - resid / slope;
      }
    }
    if (!(next > lo && next < hi)) {
      next = 0.5 * (lo + hi);
    }
    if (hi - lo <= 4.0 * eps * std::max(1.0, std::abs(psi))) {
      return next;
    }
    psi = next;
  }
  throw std::runtime_error("inverse G&H forward transform failed to converge");
}

}  // namespace

double tf_forward(double theta, const TransformParams& p) {
  p.validate();
  switch (p.kind) {
    case TransformKind::Identity:
      return theta;
    case TransformKind::YeoJohnson:
      return yj_forward(theta, p.yj_gamma);
    case TransformKind::InverseGH:
      return gh_forward(theta, p);
  }
  return theta;
}

DerivativeBundle tf_derivatives(double psi, const TransformParams& p) {
  p.validate();
  switch (p.kind) {
    case TransformKind::Identity: {
      DerivativeBundle b;
      b.psi = psi;
      b.theta = psi;
      return b;
    }
    case TransformKind::YeoJohnson:
      return yj_derivatives(psi, p.yj_gamma);
    case TransformKind::InverseGH:
      return gh_derivatives(psi, p.gh_g, p.gh_h);
  }
  return DerivativeBundle{};
}

std::array<double, 2> dpsi_dparam_theta_fixed(const DerivativeBundle& b) {
  std::array<double, 2> out{0.0, 0.0};
  for (int j = 0; j < b.n_params; ++j) {
    out[j] = -b.dtheta_dparam[j] / b.dtheta_dpsi;
  }
  return out;
}

std::array<double, 2> dlog_tprime_dparam_theta_fixed(const DerivativeBundle& b,
                                                     const TransformParams& p) {
  std::array<double, 2> out{0.0, 0.0};
  if (p.kind == TransformKind::YeoJohnson) {
    out[0] = b.dtprime_dparam[0] / b.tprime;
    return out;
  }
  if (p.kind == TransformKind::InverseGH) {
    // t'(theta;param) = 1/f(psi(theta,param), param); re-chain the fixed-psi
    // pieces through the psi shift.
    const std::array<double, 2> dpsi = dpsi_dparam_theta_fixed(b);
    for (int j = 0; j < 2; ++j) {
      out[j] = -(b.d2theta_dpsi2 * dpsi[j] + b.d_dtheta_dpsi_dparam[j]) /
               b.dtheta_dpsi;
    }
  }
  return out;
}

TransformParams transform_from_unconstrained(TransformKind kind, const double* u) {
  TransformParams p;
  p.kind = kind;
  switch (kind) {
    case TransformKind::Identity:
      break;
    case TransformKind::YeoJohnson:
      p.yj_gamma = 2.0 * sigmoid(u[0]);
      break;
    case TransformKind::InverseGH:
      p.gh_g = u[0];
      p.gh_h = sigmoid(u[1]);
      break;
  }
  return p;
}

void transform_to_unconstrained(const TransformParams& p, double* u) {
  switch (p.kind) {
    case TransformKind::Identity:
      break;
    case TransformKind::YeoJohnson:
      u[0] = logit(0.5 * p.yj_gamma);
      break;
    case TransformKind::InverseGH:
      u[0] = p.gh_g;
      u[1] = logit(p.gh_h);
      break;
  }
}

std::array<double, 2> transform_unconstrained_chain(const TransformParams& p) {
  switch (p.kind) {
    case TransformKind::Identity:
      return {0.0, 0.0};
    case TransformKind::YeoJohnson:
      return {0.5 * p.yj_gamma * (2.0 - p.yj_gamma), 0.0};
    case TransformKind::InverseGH:
      return {1.0, p.gh_h * (1.0 - p.gh_h)};
  }
  return {0.0, 0.0};
}

}  // namespace vicop
