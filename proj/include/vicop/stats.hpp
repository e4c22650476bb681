#ifndef VICOP_STATS_HPP
#define VICOP_STATS_HPP

#include <cmath>

namespace vicop {

inline constexpr double kLog2Pi = 1.8378770664093454836;

inline double log_norm_pdf(double x) { return -0.5 * x * x - 0.5 * kLog2Pi; }

// log Phi(x), stable for x down to about -1e6.  For x <= -20 the
// erfc route starts losing accuracy (and underflows near -37), so the
// tail uses the Mills-ratio asymptotic expansion
//   Phi(x) = phi(x)/(-x) * (1 - 1/x^2 + 3/x^4 - 15/x^6 + 105/x^8 + ...)
inline double log_norm_cdf(double x) {
  if (x > -20.0) {
    return std::log(0.5 * std::erfc(-x * M_SQRT1_2));
  }
  const double inv = 1.0 / (x * x);
  const double series = inv * (-1.0 + inv * (3.0 + inv * (-15.0 + inv * 105.0)));
  return -0.5 * x * x - 0.5 * kLog2Pi - std::log(-x) + std::log1p(series);
}

// phi(x)/Phi(x); tends to -x as x -> -inf, to 0 as x -> +inf.
inline double norm_mills_ratio(double x) {
  return std::exp(log_norm_pdf(x) - log_norm_cdf(x));
}

inline double sigmoid(double x) {
  if (x >= 0.0) {
    return 1.0 / (1.0 + std::exp(-x));
  }
  const double e = std::exp(x);
  return e / (1.0 + e);
}

inline double logit(double p) { return std::log(p) - std::log1p(-p); }

// log(1 + exp(x)) without overflow.
inline double log1p_exp(double x) {
  return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x)));
}

}  // namespace vicop

#endif
