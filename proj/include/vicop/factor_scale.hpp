#ifndef VICOP_FACTOR_SCALE_HPP
#define VICOP_FACTOR_SCALE_HPP

#include <Eigen/Dense>

namespace vicop {

// Low-rank-plus-diagonal scale matrix Sigma = B B^T + D^2 with an m x k
// lower-trapezoid B (zeros above the diagonal) and D = diag(d).  All solves
// go through the Woodbury identity; the dense m x m Sigma is never formed.
struct FactorScale {
  Eigen::MatrixXd B;  // m x k, B(i,j) = 0 for j > i
  Eigen::VectorXd d;  // m

  FactorScale() = default;
  FactorScale(Eigen::MatrixXd B_in, Eigen::VectorXd d_in);

  int rows() const { return static_cast<int>(d.size()); }
  int factors() const { return static_cast<int>(B.cols()); }

  // Sigma^{-1} v = D^{-2} v - D^{-2} B (I_k + B^T D^{-2} B)^{-1} B^T D^{-2} v.
  // Throws std::domain_error if any d_i == 0.
  Eigen::VectorXd solve(const Eigen::Ref<const Eigen::VectorXd>& v) const;
  Eigen::MatrixXd solve_matrix(const Eigen::Ref<const Eigen::MatrixXd>& V) const;

  // log|Sigma| = log det(I_k + B^T D^{-2} B) + 2 sum_i log|d_i|.
  double log_det() const;

  // xi = B z + d o eps; standard normal (z, eps) gives xi ~ N(0, Sigma).
  Eigen::VectorXd sample(const Eigen::Ref<const Eigen::VectorXd>& z,
                         const Eigen::Ref<const Eigen::VectorXd>& eps) const;

  // Sigma v, never forming Sigma.
  Eigen::VectorXd apply(const Eigen::Ref<const Eigen::VectorXd>& v) const;

  // diag(Sigma): sigma^2_i = sum_j B(i,j)^2 + d_i^2.
  Eigen::VectorXd variances() const;

  // diag(Sigma^{-1}) via Woodbury.
  Eigen::VectorXd inverse_diagonal() const;

  // Dense Sigma; test/oracle use only.
  Eigen::MatrixXd dense() const;

 private:
  void require_nonsingular() const;
  Eigen::LLT<Eigen::MatrixXd> inner_llt() const;  // I_k + B^T D^{-2} B
};

// vech length for an m x k lower trapezoid: m k - k(k-1)/2.
int vech_size(int m, int k);

// Column-major vech skipping the zero upper triangle (column j keeps rows
// j..m-1).
Eigen::VectorXd vech(const Eigen::Ref<const Eigen::MatrixXd>& B);
Eigen::MatrixXd unvech(const Eigen::Ref<const Eigen::VectorXd>& v, int m, int k);

}  // namespace vicop

#endif
