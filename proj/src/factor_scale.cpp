#include "vicop/factor_scale.hpp"

#include <cmath>
#include <stdexcept>

namespace vicop {

FactorScale::FactorScale(Eigen::MatrixXd B_in, Eigen::VectorXd d_in)
    : B(std::move(B_in)), d(std::move(d_in)) {
  if (B.rows() != d.size()) {
    throw std::invalid_argument("FactorScale: B rows must match d size");
  }
  for (int j = 1; j < B.cols(); ++j) {
    for (int i = 0; i < std::min<int>(j, B.rows()); ++i) {
      if (B(i, j) != 0.0) {
        throw std::invalid_argument("FactorScale: B must be zero above the diagonal");
      }
    }
  }
}

void FactorScale::require_nonsingular() const {
  for (int i = 0; i < d.size(); ++i) {
    if (d[i] == 0.0) {
      throw std::domain_error("FactorScale: singular scale, d has a zero entry");
    }
  }
}

Eigen::LLT<Eigen::MatrixXd> FactorScale::inner_llt() const {
  const int k = factors();
  Eigen::MatrixXd A = Eigen::MatrixXd::Identity(k, k);
  if (k > 0) {
    A.noalias() += B.transpose() * (B.array().colwise() / d.array().square()).matrix();
  }
  return A.llt();
}

Eigen::VectorXd FactorScale::solve(const Eigen::Ref<const Eigen::VectorXd>& v) const {
  require_nonsingular();
  const Eigen::ArrayXd d2 = d.array().square();
  Eigen::VectorXd vt = (v.array() / d2).matrix();
  if (factors() == 0) {
    return vt;
  }
  const Eigen::VectorXd w = inner_llt().solve(B.transpose() * vt);
  vt.array() -= (B * w).array() / d2;
  return vt;
}

Eigen::MatrixXd FactorScale::solve_matrix(const Eigen::Ref<const Eigen::MatrixXd>& V) const {
  require_nonsingular();
  const Eigen::ArrayXd d2 = d.array().square();
  Eigen::MatrixXd Vt = (V.array().colwise() / d2).matrix();
  if (factors() == 0) {
    return Vt;
  }
  const Eigen::MatrixXd W = inner_llt().solve(B.transpose() * Vt);
  Vt -= ((B * W).array().colwise() / d2).matrix();
  return Vt;
}

double FactorScale::log_det() const {
  require_nonsingular();
  double out = 2.0 * d.array().abs().log().sum();
  if (factors() > 0) {
    const Eigen::MatrixXd L = inner_llt().matrixL();
    out += 2.0 * L.diagonal().array().log().sum();
  }
  return out;
}

Eigen::VectorXd FactorScale::sample(const Eigen::Ref<const Eigen::VectorXd>& z,
                                    const Eigen::Ref<const Eigen::VectorXd>& eps) const {
  Eigen::VectorXd out = d.cwiseProduct(eps);
  if (factors() > 0) {
    out.noalias() += B * z;
  }
  return out;
}

Eigen::VectorXd FactorScale::apply(const Eigen::Ref<const Eigen::VectorXd>& v) const {
  Eigen::VectorXd out = d.array().square().matrix().cwiseProduct(v);
  if (factors() > 0) {
    out.noalias() += B * (B.transpose() * v);
  }
  return out;
}

Eigen::VectorXd FactorScale::variances() const {
  Eigen::VectorXd out = d.array().square().matrix();
  if (factors() > 0) {
    out += B.array().square().matrix().rowwise().sum();
  }
  return out;
}

Eigen::VectorXd FactorScale::inverse_diagonal() const {
  require_nonsingular();
  const Eigen::ArrayXd d2 = d.array().square();
  Eigen::ArrayXd out = d2.inverse();
  if (factors() > 0) {
    // [Sigma^{-1}]_ii = d_i^{-2} - d_i^{-4} b_i^T A^{-1} b_i with b_i the
    // i-th row of B; U = L^{-1} B^T gives b_i^T A^{-1} b_i = |U col i|^2.
    const Eigen::MatrixXd L = inner_llt().matrixL();
    const Eigen::MatrixXd U =
        L.triangularView<Eigen::Lower>().solve(Eigen::MatrixXd(B.transpose()));
    out -= U.array().square().colwise().sum().transpose() / d2.square();
  }
  return out.matrix();
}

Eigen::MatrixXd FactorScale::dense() const {
  Eigen::MatrixXd S = d.array().square().matrix().asDiagonal();
  if (factors() > 0) {
    S.noalias() += B * B.transpose();
  }
  return S;
}

int vech_size(int m, int k) { return m * k - k * (k - 1) / 2; }

Eigen::VectorXd vech(const Eigen::Ref<const Eigen::MatrixXd>& B) {
  const int m = static_cast<int>(B.rows());
  const int k = static_cast<int>(B.cols());
  Eigen::VectorXd v(vech_size(m, k));
  int idx = 0;
  for (int j = 0; j < k; ++j) {
    for (int i = j; i < m; ++i) {
      v[idx++] = B(i, j);
    }
  }
  return v;
}

Eigen::MatrixXd unvech(const Eigen::Ref<const Eigen::VectorXd>& v, int m, int k) {
  if (v.size() != vech_size(m, k)) {
    throw std::invalid_argument("unvech: size mismatch");
  }
  Eigen::MatrixXd B = Eigen::MatrixXd::Zero(m, k);
  int idx = 0;
  for (int j = 0; j < k; ++j) {
    for (int i = j; i < m; ++i) {
      B(i, j) = v[idx++];
    }
  }
  return B;
}

}  // namespace vicop
