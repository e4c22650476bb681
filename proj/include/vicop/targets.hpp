#ifndef VICOP_TARGETS_HPP
#define VICOP_TARGETS_HPP

#include <Eigen/Dense>
#include <memory>
#include <string>
#include <vector>

namespace vicop {

// A posterior target: log g(theta) = log p(theta) + log p(y|theta) and its
// gradient are the only model-specific inputs the optimizer needs.
class Target {
 public:
  virtual ~Target() = default;
  virtual int dim() const = 0;
  virtual const std::string& name() const = 0;
  virtual double log_g(const Eigen::Ref<const Eigen::VectorXd>& theta) const = 0;
  virtual Eigen::VectorXd grad_log_g(const Eigen::Ref<const Eigen::VectorXd>& theta) const = 0;
};

// Design matrix with binary response.
struct DesignMatrix {
  Eigen::MatrixXd X;  // n x p, intercept column included when requested
  Eigen::VectorXd y;  // n, entries in {0, 1}
  std::vector<std::string> feature_names;

  void validate() const;  // throws on non-finite entries or non-binary y
};

// Bayesian logistic regression with N(0, prior_var I) prior:
//   log g(beta) = sum_i [y_i x_i^T beta - log(1 + exp(x_i^T beta))]
//                 - |beta|^2/(2 v) - (p/2) log(2 pi v).
class LogisticRegression : public Target {
 public:
  LogisticRegression(DesignMatrix data, double prior_var = 10.0);

  int dim() const override { return static_cast<int>(data_.X.cols()); }
  const std::string& name() const override { return name_; }
  double log_g(const Eigen::Ref<const Eigen::VectorXd>& beta) const override;
  Eigen::VectorXd grad_log_g(const Eigen::Ref<const Eigen::VectorXd>& beta) const override;

  const DesignMatrix& data() const { return data_; }
  double prior_var() const { return prior_var_; }

 private:
  DesignMatrix data_;
  double prior_var_;
  std::string name_ = "logistic";
};

// Mixed logistic regression: theta = (beta_1..beta_p, zeta, b_1..b_J) with a
// subject-based N(0, exp(2 zeta)) random effect on the linear predictor and
// N(0, prior_var) priors on each fixed effect and on zeta.
class MixedLogistic : public Target {
 public:
  MixedLogistic(DesignMatrix data, std::vector<int> subject, int n_subjects,
                double prior_var_beta = 10.0, double prior_var_zeta = 10.0);

  int dim() const override { return static_cast<int>(data_.X.cols()) + 1 + n_subjects_; }
  const std::string& name() const override { return name_; }
  double log_g(const Eigen::Ref<const Eigen::VectorXd>& theta) const override;
  Eigen::VectorXd grad_log_g(const Eigen::Ref<const Eigen::VectorXd>& theta) const override;

  int n_subjects() const { return n_subjects_; }
  double prior_var_beta() const { return prior_var_beta_; }
  double prior_var_zeta() const { return prior_var_zeta_; }

 private:
  DesignMatrix data_;
  std::vector<int> subject_;
  int n_subjects_;
  double prior_var_beta_;
  double prior_var_zeta_;
  std::string name_ = "mixed-logistic";
};

// Gaussian toy with known evidence: log g(theta) = log N(theta; mu0, Sigma0) + C,
// so the attainable ELBO ceiling is exactly C (KL = 0 at q = posterior).
class GaussianToy : public Target {
 public:
  GaussianToy(Eigen::VectorXd mu0, Eigen::MatrixXd Sigma0, double log_evidence = 0.0);

  int dim() const override { return static_cast<int>(mu0_.size()); }
  const std::string& name() const override { return name_; }
  double log_g(const Eigen::Ref<const Eigen::VectorXd>& theta) const override;
  Eigen::VectorXd grad_log_g(const Eigen::Ref<const Eigen::VectorXd>& theta) const override;

  double log_evidence() const { return log_evidence_; }
  const Eigen::VectorXd& mean() const { return mu0_; }
  const Eigen::MatrixXd& covariance() const { return Sigma0_; }

 private:
  Eigen::VectorXd mu0_;
  Eigen::MatrixXd Sigma0_;
  Eigen::LLT<Eigen::MatrixXd> llt_;
  double log_evidence_;
  double log_norm_const_;  // -m/2 log 2pi - 1/2 log|Sigma0|
  std::string name_ = "gaussian-toy";
};

}  // namespace vicop

#endif
