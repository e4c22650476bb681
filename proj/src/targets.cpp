#include "vicop/targets.hpp"

#include <cmath>
#include <stdexcept>

#include "vicop/stats.hpp"

namespace vicop {

void DesignMatrix::validate() const {
  if (X.rows() != y.size()) {
    throw std::invalid_argument("DesignMatrix: row count mismatch between X and y");
  }
  if (!X.allFinite()) {
    throw std::invalid_argument("DesignMatrix: non-finite feature entry");
  }
  for (int i = 0; i < y.size(); ++i) {
    if (y[i] != 0.0 && y[i] != 1.0) {
      throw std::invalid_argument("DesignMatrix: response must be binary 0/1");
    }
  }
}

LogisticRegression::LogisticRegression(DesignMatrix data, double prior_var)
    : data_(std::move(data)), prior_var_(prior_var) {
  data_.validate();
  if (!(prior_var_ > 0.0)) {
    throw std::invalid_argument("LogisticRegression: prior_var must be positive");
  }
}

double LogisticRegression::log_g(
    const Eigen::Ref<const Eigen::VectorXd>& beta) const {
  if (beta.size() != dim()) {
    throw std::invalid_argument("LogisticRegression: dimension mismatch");
  }
  const Eigen::VectorXd eta = data_.X * beta;
  double ll = data_.y.dot(eta);
  for (int i = 0; i < eta.size(); ++i) {
    ll -= log1p_exp(eta[i]);
  }
  const double p = static_cast<double>(dim());
  return ll - 0.5 * beta.squaredNorm() / prior_var_ -
         0.5 * p * std::log(2.0 * M_PI * prior_var_);
}

Eigen::VectorXd LogisticRegression::grad_log_g(
    const Eigen::Ref<const Eigen::VectorXd>& beta) const {
  if (beta.size() != dim()) {
    throw std::invalid_argument("LogisticRegression: dimension mismatch");
  }
  const Eigen::VectorXd eta = data_.X * beta;
  Eigen::VectorXd resid(eta.size());
  for (int i = 0; i < eta.size(); ++i) {
    resid[i] = data_.y[i] - sigmoid(eta[i]);
  }
  return data_.X.transpose() * resid - beta / prior_var_;
}

MixedLogistic::MixedLogistic(DesignMatrix data, std::vector<int> subject,
                             int n_subjects, double prior_var_beta,
                             double prior_var_zeta)
    : data_(std::move(data)),
      subject_(std::move(subject)),
      n_subjects_(n_subjects),
      prior_var_beta_(prior_var_beta),
      prior_var_zeta_(prior_var_zeta) {
  data_.validate();
  if (static_cast<Eigen::Index>(subject_.size()) != data_.X.rows()) {
    throw std::invalid_argument("MixedLogistic: one subject index per observation required");
  }
  for (int s : subject_) {
    if (s < 0 || s >= n_subjects_) {
      throw std::invalid_argument("MixedLogistic: unknown subject index");
    }
  }
}

double MixedLogistic::log_g(
    const Eigen::Ref<const Eigen::VectorXd>& theta) const {
  if (theta.size() != dim()) {
    throw std::invalid_argument("MixedLogistic: dimension mismatch");
  }
  const int p = static_cast<int>(data_.X.cols());
  const auto beta = theta.head(p);
  const double zeta = theta[p];
  const auto b = theta.tail(n_subjects_);

  const Eigen::VectorXd xb = data_.X * beta;
  double ll = 0.0;
  for (int i = 0; i < xb.size(); ++i) {
    const double eta = xb[i] + b[subject_[i]];
    ll += data_.y[i] * eta - log1p_exp(eta);
  }
  const double inv_var = std::exp(-2.0 * zeta);
  ll += -n_subjects_ * zeta - 0.5 * n_subjects_ * kLog2Pi -
        0.5 * inv_var * b.squaredNorm();
  ll += -0.5 * beta.squaredNorm() / prior_var_beta_ -
        0.5 * p * std::log(2.0 * M_PI * prior_var_beta_);
  ll += -0.5 * zeta * zeta / prior_var_zeta_ -
        0.5 * std::log(2.0 * M_PI * prior_var_zeta_);
  return ll;
}

Eigen::VectorXd MixedLogistic::grad_log_g(
    const Eigen::Ref<const Eigen::VectorXd>& theta) const {
  if (theta.size() != dim()) {
    throw std::invalid_argument("MixedLogistic: dimension mismatch");
  }
  const int p = static_cast<int>(data_.X.cols());
  const auto beta = theta.head(p);
  const double zeta = theta[p];
  const auto b = theta.tail(n_subjects_);

  const Eigen::VectorXd xb = data_.X * beta;
  Eigen::VectorXd resid(xb.size());
  Eigen::VectorXd grad = Eigen::VectorXd::Zero(dim());
  for (int i = 0; i < xb.size(); ++i) {
    resid[i] = data_.y[i] - sigmoid(xb[i] + b[subject_[i]]);
    grad[p + 1 + subject_[i]] += resid[i];
  }
  grad.head(p) = data_.X.transpose() * resid - beta / prior_var_beta_;
  const double inv_var = std::exp(-2.0 * zeta);
  grad.tail(n_subjects_) -= inv_var * b;
  grad[p] = inv_var * b.squaredNorm() - n_subjects_ - zeta / prior_var_zeta_;
  return grad;
}

GaussianToy::GaussianToy(Eigen::VectorXd mu0, Eigen::MatrixXd Sigma0,
                         double log_evidence)
    : mu0_(std::move(mu0)), Sigma0_(std::move(Sigma0)), log_evidence_(log_evidence) {
  if (Sigma0_.rows() != Sigma0_.cols() || Sigma0_.rows() != mu0_.size()) {
    throw std::invalid_argument("GaussianToy: dimension mismatch");
  }
  llt_ = Sigma0_.llt();
  if (llt_.info() != Eigen::Success) {
    throw std::invalid_argument("GaussianToy: Sigma0 must be SPD");
  }
  const Eigen::MatrixXd L = llt_.matrixL();
  log_norm_const_ = -0.5 * mu0_.size() * kLog2Pi -
                    L.diagonal().array().log().sum();
}

double GaussianToy::log_g(const Eigen::Ref<const Eigen::VectorXd>& theta) const {
  const Eigen::VectorXd r = theta - mu0_;
  return log_norm_const_ - 0.5 * r.dot(llt_.solve(r)) + log_evidence_;
}

Eigen::VectorXd GaussianToy::grad_log_g(
    const Eigen::Ref<const Eigen::VectorXd>& theta) const {
  return -llt_.solve(theta - mu0_);
}

}  // namespace vicop
