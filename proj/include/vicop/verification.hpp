#ifndef VICOP_VERIFICATION_HPP
#define VICOP_VERIFICATION_HPP

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "vicop/family.hpp"
#include "vicop/targets.hpp"

namespace vicop {

struct FDConfig {
  double h = 1e-5;
  double rel_tol = 1e-5;
};

// Central differences (f(x + h e_j) - f(x - h e_j)) / (2h).  Non-finite
// evaluations give a NaN coordinate.
Eigen::VectorXd fd_gradient(const std::function<double(const Eigen::VectorXd&)>& f,
                            const Eigen::Ref<const Eigen::VectorXd>& x,
                            const FDConfig& cfg = FDConfig{});

// max_i |a_i - b_i| / max(||b||_inf, floor)
double rel_err(const Eigen::Ref<const Eigen::VectorXd>& a,
               const Eigen::Ref<const Eigen::VectorXd>& b, double floor = 1.0);
double rel_err(double a, double b, double floor = 1.0);

// Trapezoid-rule posterior for targets of dimension <= 2 on an adaptively
// chosen grid; stands in for reference posteriors at desk scale.
struct QuadPosterior {
  Eigen::VectorXd lo, hi;      // grid bounds per axis
  int points_per_axis = 0;
  double log_norm = 0.0;       // log integral of exp(log g)
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;
  Eigen::VectorXd skew;        // per-axis third standardized moment
};
QuadPosterior quad_posterior(const Target& target, int resolution = 513);

// Compares sample mean/cov of psi draws from a family against the latent
// Gaussian representation moments mu + sqrt(2/pi) dt and
// Sigma - (2/pi) dt dt^T (dt = 0 for the Gaussian family).
struct MomentReport {
  Eigen::VectorXd mean_z;   // per-coordinate z-scores of the mean
  Eigen::MatrixXd cov_z;    // entrywise z-scores of the covariance
  double max_abs_z = 0.0;
  Eigen::VectorXd mean_dev;  // raw deviations, for scaling diagnostics
};
MomentReport moment_check(const Family& family, int n_draws, std::uint64_t seed);

// Importance-sampling moments with the fitted family as proposal; used only
// qualitatively for targets above quadrature dimension.
struct ISMoments {
  Eigen::VectorXd mean;
  Eigen::VectorXd sd;
  double ess = 0.0;  // effective sample size
};
ISMoments importance_moments(const Family& family, const Target& target,
                             int n_draws, std::uint64_t seed);

// Registered derivative/consistency checks, runnable from the CLI.
struct CheckResult {
  std::string name;
  double max_rel_err = 0.0;
  bool pass = false;
};
std::vector<CheckResult> run_registered_checks(std::uint64_t seed = 20240901);
std::string checks_report_json(const std::vector<CheckResult>& results);

}  // namespace vicop

#endif
