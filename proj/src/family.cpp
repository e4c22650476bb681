#include "vicop/family.hpp"

#include <stdexcept>

#include "vicop/stats.hpp"

namespace vicop {

Layout make_layout(const FamilySpec& spec) {
  if (spec.k > spec.m || spec.k < 0 || spec.m < 0) {
    throw std::invalid_argument("FamilySpec: need 0 <= k <= m");
  }
  Layout L;
  L.m = spec.m;
  L.k = spec.k;
  L.n_tparams = transform_param_count(spec.kind);
  L.skew = spec.skew;
  L.mu = 0;
  L.b = spec.m;
  L.d = L.b + vech_size(spec.m, spec.k);
  L.alpha = L.d + spec.m;
  L.gamma = L.alpha + (spec.skew ? spec.m : 0);
  L.total = L.gamma + spec.m * L.n_tparams;
  return L;
}

int family_param_count(int m, int k, TransformKind kind, bool skew) {
  FamilySpec s{m, k, kind, skew};
  return make_layout(s).total;
}

Eigen::VectorXd Family::score_grad(const Eigen::Ref<const Eigen::VectorXd>&) const {
  throw std::logic_error("score gradient is not available for this family");
}

std::vector<TransformParams> margins_from_unconstrained(
    const FamilySpec& spec, const Eigen::Ref<const Eigen::VectorXd>& gamma_u) {
  const int nt = transform_param_count(spec.kind);
  if (gamma_u.size() != static_cast<Eigen::Index>(spec.m) * nt) {
    throw std::invalid_argument("gamma block size mismatch");
  }
  std::vector<TransformParams> margins(spec.m);
  for (int i = 0; i < spec.m; ++i) {
    margins[i] = transform_from_unconstrained(spec.kind, gamma_u.data() + i * nt);
  }
  return margins;
}

Eigen::VectorXd initial_lambda(const FamilySpec& spec, std::mt19937_64& rng) {
  return initial_lambda(spec, rng, Eigen::VectorXd::Zero(spec.m));
}

Eigen::VectorXd initial_lambda(const FamilySpec& spec, std::mt19937_64& rng,
                               const Eigen::Ref<const Eigen::VectorXd>& mu0) {
  const Layout L = make_layout(spec);
  if (mu0.size() != spec.m) {
    throw std::invalid_argument("initial_lambda: mu0 size mismatch");
  }
  Eigen::VectorXd lam = Eigen::VectorXd::Zero(L.total);
  lam.segment(L.mu, spec.m) = mu0;
  std::normal_distribution<double> nd(0.0, 0.01);
  for (int i = L.b; i < L.d; ++i) {
    lam[i] = nd(rng);
  }
  lam.segment(L.d, spec.m).setConstant(0.1);
  // alpha block stays zero.
  if (L.n_tparams > 0) {
    TransformParams p;
    p.kind = spec.kind;
    if (spec.kind == TransformKind::YeoJohnson) {
      p.yj_gamma = 1.0;
    } else if (spec.kind == TransformKind::InverseGH) {
      p.gh_g = 0.0;
      p.gh_h = 0.05;
    }
    double u[2] = {0.0, 0.0};
    transform_to_unconstrained(p, u);
    for (int i = 0; i < spec.m; ++i) {
      for (int j = 0; j < L.n_tparams; ++j) {
        lam[L.gamma + i * L.n_tparams + j] = u[j];
      }
    }
  }
  return lam;
}

}  // namespace vicop
