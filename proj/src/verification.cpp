#include "vicop/verification.hpp"

#include <cmath>
#include <memory>
#include <random>
#include <sstream>
#include <stdexcept>

#include "vicop/gaussian_copula.hpp"
#include "vicop/skew_normal_copula.hpp"
#include "vicop/stats.hpp"

namespace vicop {

Eigen::VectorXd fd_gradient(const std::function<double(const Eigen::VectorXd&)>& f,
                            const Eigen::Ref<const Eigen::VectorXd>& x,
                            const FDConfig& cfg) {
  Eigen::VectorXd g(x.size());
  Eigen::VectorXd xp = x;
  for (int j = 0; j < x.size(); ++j) {
    xp[j] = x[j] + cfg.h;
    const double fp = f(xp);
    xp[j] = x[j] - cfg.h;
    const double fm = f(xp);
    xp[j] = x[j];
    g[j] = (std::isfinite(fp) && std::isfinite(fm))
               ? (fp - fm) / (2.0 * cfg.h)
               : std::numeric_limits<double>::quiet_NaN();
  }
  return g;
}

double rel_err(const Eigen::Ref<const Eigen::VectorXd>& a,
               const Eigen::Ref<const Eigen::VectorXd>& b, double floor) {
  const double scale = std::max(floor, b.cwiseAbs().maxCoeff());
  return (a - b).cwiseAbs().maxCoeff() / scale;
}

double rel_err(double a, double b, double floor) {
  return std::abs(a - b) / std::max(floor, std::abs(b));
}

namespace {

double fd_scalar(const std::function<double(double)>& f, double x, double h = 1e-6) {
  return (f(x + h) - f(x - h)) / (2.0 * h);
}

struct Grid1D {
  Eigen::VectorXd x;
  Eigen::VectorXd logf;
};

// mode search by gradient ascent with backtracking
Eigen::VectorXd find_mode(const Target& target) {
  Eigen::VectorXd x = Eigen::VectorXd::Zero(target.dim());
  double fx = target.log_g(x);
  double step = 1.0;
  for (int it = 0; it < 500; ++it) {
    const Eigen::VectorXd g = target.grad_log_g(x);
    if (g.norm() < 1e-10) {
      break;
    }
    bool moved = false;
    for (int bt = 0; bt < 60; ++bt) {
      const Eigen::VectorXd xn = x + step * g;
      const double fn = target.log_g(xn);
      if (std::isfinite(fn) && fn > fx) {
        x = xn;
        fx = fn;
        step *= 1.5;
        moved = true;
        break;
      }
      step *= 0.5;
    }
    if (!moved) {
      break;
    }
  }
  return x;
}

// expand along +/- e_axis until log g falls `drop` nats below the mode value
std::pair<double, double> axis_bounds(const Target& target,
                                      const Eigen::VectorXd& mode, int axis,
                                      double drop) {
  const double f0 = target.log_g(mode);
  auto probe = [&](double delta) {
    Eigen::VectorXd x = mode;
    x[axis] += delta;
    return target.log_g(x);
  };
  double step = 1.0;
  while (probe(step) > f0 - drop && step < 1e6) {
    step *= 2.0;
  }
  double hi = mode[axis] + step;
  step = 1.0;
  while (probe(-step) > f0 - drop && step < 1e6) {
    step *= 2.0;
  }
  return {mode[axis] - step, hi};
}

struct QuadRaw {
  double log_norm;
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;
  Eigen::VectorXd skew;
};

QuadRaw quad_on_box(const Target& target, const Eigen::VectorXd& lo,
                    const Eigen::VectorXd& hi, int n) {
  const int dim = target.dim();
  QuadRaw out;
  if (dim == 1) {
    Eigen::VectorXd x(n), lw(n);
    const double hstep = (hi[0] - lo[0]) / (n - 1);
    for (int i = 0; i < n; ++i) {
      x[i] = lo[0] + i * hstep;
      Eigen::VectorXd xi(1);
      xi << x[i];
      const double w = (i == 0 || i == n - 1) ? 0.5 : 1.0;
      lw[i] = target.log_g(xi) + std::log(w * hstep);
    }
    const double lmax = lw.maxCoeff();
    const Eigen::ArrayXd ew = (lw.array() - lmax).exp();
    const double Z = ew.sum();
    out.log_norm = lmax + std::log(Z);
    const Eigen::ArrayXd p = ew / Z;
    const double m1 = (p * x.array()).sum();
    const double m2 = (p * (x.array() - m1).square()).sum();
    const double m3 = (p * (x.array() - m1).cube()).sum();
    out.mean = Eigen::VectorXd::Constant(1, m1);
    out.cov = Eigen::MatrixXd::Constant(1, 1, m2);
    out.skew = Eigen::VectorXd::Constant(1, m3 / std::pow(m2, 1.5));
    return out;
  }
  // dim == 2
  Eigen::VectorXd x0(n), x1(n);
  const double h0 = (hi[0] - lo[0]) / (n - 1);
  const double h1 = (hi[1] - lo[1]) / (n - 1);
  for (int i = 0; i < n; ++i) {
    x0[i] = lo[0] + i * h0;
    x1[i] = lo[1] + i * h1;
  }
  Eigen::MatrixXd lw(n, n);
  for (int i = 0; i < n; ++i) {
    const double wi = (i == 0 || i == n - 1) ? 0.5 : 1.0;
    for (int j = 0; j < n; ++j) {
      const double wj = (j == 0 || j == n - 1) ? 0.5 : 1.0;
      Eigen::VectorXd xy(2);
      xy << x0[i], x1[j];
      lw(i, j) = target.log_g(xy) + std::log(wi * wj * h0 * h1);
    }
  }
  const double lmax = lw.maxCoeff();
  const Eigen::ArrayXXd ew = (lw.array() - lmax).exp();
  const double Z = ew.sum();
  out.log_norm = lmax + std::log(Z);
  const Eigen::ArrayXXd p = ew / Z;
  out.mean = Eigen::VectorXd::Zero(2);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      out.mean[0] += p(i, j) * x0[i];
      out.mean[1] += p(i, j) * x1[j];
    }
  }
  out.cov = Eigen::MatrixXd::Zero(2, 2);
  Eigen::VectorXd m3 = Eigen::VectorXd::Zero(2);
  for (int i = 0; i < n; ++i) {
    const double dx0 = x0[i] - out.mean[0];
    for (int j = 0; j < n; ++j) {
      const double dx1 = x1[j] - out.mean[1];
      out.cov(0, 0) += p(i, j) * dx0 * dx0;
      out.cov(0, 1) += p(i, j) * dx0 * dx1;
      out.cov(1, 1) += p(i, j) * dx1 * dx1;
      m3[0] += p(i, j) * dx0 * dx0 * dx0;
      m3[1] += p(i, j) * dx1 * dx1 * dx1;
    }
  }
  out.cov(1, 0) = out.cov(0, 1);
  out.skew = Eigen::VectorXd::Zero(2);
  out.skew[0] = m3[0] / std::pow(out.cov(0, 0), 1.5);
  out.skew[1] = m3[1] / std::pow(out.cov(1, 1), 1.5);
  return out;
}

}  // namespace

QuadPosterior quad_posterior(const Target& target, int resolution) {
  if (target.dim() > 2 || target.dim() < 1) {
    throw std::invalid_argument("quad_posterior: dimension must be 1 or 2");
  }
  const Eigen::VectorXd mode = find_mode(target);
  const int dim = target.dim();
  Eigen::VectorXd lo(dim), hi(dim);
  for (int a = 0; a < dim; ++a) {
    auto [l, h] = axis_bounds(target, mode, a, 45.0);
    const double pad = 0.25 * (h - l);
    lo[a] = l - pad;
    hi[a] = h + pad;
  }
  const QuadRaw base = quad_on_box(target, lo, hi, resolution);
  // mass-leak check against a 1.5x extended box
  Eigen::VectorXd lo_e(dim), hi_e(dim);
  for (int a = 0; a < dim; ++a) {
    const double c = 0.5 * (lo[a] + hi[a]);
    const double half = 0.75 * (hi[a] - lo[a]);
    lo_e[a] = c - half;
    hi_e[a] = c + half;
  }
  const QuadRaw ext = quad_on_box(target, lo_e, hi_e, resolution);
  if (base.log_norm < ext.log_norm + std::log1p(-1e-6)) {
    throw std::runtime_error("quad_posterior: grid bounds too small, mass leakage");
  }

  QuadPosterior out;
  out.lo = lo;
  out.hi = hi;
  out.points_per_axis = resolution;
  out.log_norm = base.log_norm;
  out.mean = base.mean;
  out.cov = base.cov;
  out.skew = base.skew;
  return out;
}

MomentReport moment_check(const Family& family, int n_draws, std::uint64_t seed) {
  if (n_draws < 10000) {
    throw std::invalid_argument("moment_check: need at least 1e4 draws");
  }
  const int m = family.dim();
  Eigen::VectorXd target_mean;
  Eigen::MatrixXd target_cov;
  if (const auto* sn = dynamic_cast<const SkewNormalCopula*>(&family)) {
    const SkewDerived der = sn->derived();
    target_mean = sn->mu() + std::sqrt(2.0 / M_PI) * der.delta_tilde;
    target_cov = sn->scale().dense() -
                 (2.0 / M_PI) * der.delta_tilde * der.delta_tilde.transpose();
  } else if (const auto* gc = dynamic_cast<const GaussianCopula*>(&family)) {
    target_mean = gc->mu();
    target_cov = gc->scale().dense();
  } else {
    throw std::invalid_argument("moment_check: unsupported family");
  }

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd(0.0, 1.0);
  Eigen::VectorXd eps(family.eps_dim());

  Eigen::VectorXd sum = Eigen::VectorXd::Zero(m);
  Eigen::VectorXd sum2 = Eigen::VectorXd::Zero(m);
  Eigen::MatrixXd psum = Eigen::MatrixXd::Zero(m, m);   // products about target mean
  Eigen::MatrixXd psum2 = Eigen::MatrixXd::Zero(m, m);
  for (int t = 0; t < n_draws; ++t) {
    for (int i = 0; i < eps.size(); ++i) {
      eps[i] = nd(rng);
    }
    const Eigen::VectorXd psi = family.draw_eval(eps).psi;
    sum += psi;
    sum2 += psi.cwiseAbs2();
    const Eigen::VectorXd c = psi - target_mean;
    for (int i = 0; i < m; ++i) {
      for (int j = 0; j <= i; ++j) {
        const double p = c[i] * c[j];
        psum(i, j) += p;
        psum2(i, j) += p * p;
      }
    }
  }

  MomentReport rep;
  const double n = static_cast<double>(n_draws);
  const Eigen::VectorXd mean = sum / n;
  const Eigen::VectorXd var = (sum2 / n - mean.cwiseAbs2()).cwiseMax(1e-300);
  rep.mean_z.resize(m);
  rep.mean_dev = mean - target_mean;
  for (int i = 0; i < m; ++i) {
    rep.mean_z[i] = rep.mean_dev[i] / std::sqrt(var[i] / n);
  }
  rep.cov_z = Eigen::MatrixXd::Zero(m, m);
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j <= i; ++j) {
      const double pbar = psum(i, j) / n;
      const double pvar = std::max(psum2(i, j) / n - pbar * pbar, 1e-300);
      const double z = (pbar - target_cov(i, j)) / std::sqrt(pvar / n);
      rep.cov_z(i, j) = z;
      rep.cov_z(j, i) = z;
    }
  }
  rep.max_abs_z = std::max(rep.mean_z.cwiseAbs().maxCoeff(),
                           rep.cov_z.cwiseAbs().maxCoeff());
  return rep;
}

ISMoments importance_moments(const Family& family, const Target& target,
                             int n_draws, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd(0.0, 1.0);
  Eigen::VectorXd eps(family.eps_dim());
  const int m = family.dim();
  Eigen::MatrixXd thetas(m, n_draws);
  Eigen::VectorXd logw(n_draws);
  for (int t = 0; t < n_draws; ++t) {
    for (int i = 0; i < eps.size(); ++i) {
      eps[i] = nd(rng);
    }
    const DrawEval de = family.draw_eval(eps);
    thetas.col(t) = de.theta;
    logw[t] = target.log_g(de.theta) - de.log_q;
  }
  const double lmax = logw.maxCoeff();
  Eigen::ArrayXd w = (logw.array() - lmax).exp();
  const double wsum = w.sum();
  w /= wsum;
  ISMoments out;
  out.mean = thetas * w.matrix();
  Eigen::VectorXd var = Eigen::VectorXd::Zero(m);
  for (int t = 0; t < n_draws; ++t) {
    var += w[t] * (thetas.col(t) - out.mean).cwiseAbs2();
  }
  out.sd = var.cwiseSqrt();
  out.ess = 1.0 / w.square().sum();
  return out;
}

// ---------------------------------------------------------------------------
// registered checks
// ---------------------------------------------------------------------------

namespace {

using CheckFn = std::function<double(std::mt19937_64&)>;  // returns max rel err

Eigen::VectorXd random_lambda(const FamilySpec& spec, std::mt19937_64& rng) {
  const Layout L = make_layout(spec);
  std::normal_distribution<double> nd(0.0, 1.0);
  std::uniform_real_distribution<double> ud(0.4, 1.2);
  Eigen::VectorXd lam(L.total);
  for (int i = 0; i < spec.m; ++i) {
    lam[L.mu + i] = nd(rng);
  }
  for (int i = L.b; i < L.d; ++i) {
    lam[i] = 0.4 * nd(rng);
  }
  for (int i = 0; i < spec.m; ++i) {
    lam[L.d + i] = ud(rng) * (nd(rng) > 0 ? 1.0 : -1.0);
  }
  if (spec.skew) {
    for (int i = 0; i < spec.m; ++i) {
      lam[L.alpha + i] = nd(rng);
    }
  }
  for (int i = 0; i < spec.m; ++i) {
    if (spec.kind == TransformKind::YeoJohnson) {
      lam[L.gamma + i] = 0.7 * nd(rng);
    } else if (spec.kind == TransformKind::InverseGH) {
      lam[L.gamma + 2 * i] = 0.3 * nd(rng);
      lam[L.gamma + 2 * i + 1] = -2.2 + 0.5 * nd(rng);
    }
  }
  return lam;
}

TransformParams random_transform(TransformKind kind, std::mt19937_64& rng) {
  std::normal_distribution<double> nd(0.0, 1.0);
  double u[2] = {0.0, 0.0};
  if (kind == TransformKind::YeoJohnson) {
    u[0] = 0.8 * nd(rng);
  } else {
    u[0] = 0.4 * nd(rng);
    u[1] = -1.8 + 0.7 * nd(rng);
  }
  return transform_from_unconstrained(kind, u);
}

double check_transform_bundle(TransformKind kind, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> upsi(-4.0, 4.0);
  double worst = 0.0;
  auto upd = [&worst](double e) { worst = std::max(worst, e); };
  for (int rep = 0; rep < 500; ++rep) {
    const TransformParams p = random_transform(kind, rng);
    double psi = upsi(rng);
    if (std::abs(psi) < 1e-3) {
      psi += 0.1;  // stay away from the YJ branch point
    }
    const DerivativeBundle b = tf_derivatives(psi, p);

    upd(rel_err(b.dtheta_dpsi,
                fd_scalar([&](double s) { return tf_inverse(s, p); }, psi)));
    upd(rel_err(b.d2theta_dpsi2,
                fd_scalar([&](double s) { return tf_derivatives(s, p).dtheta_dpsi; }, psi)));
    upd(rel_err(b.tprime,
                fd_scalar([&](double t) { return tf_forward(t, p); }, b.theta)));
    upd(rel_err(b.d2psi_dtheta2,
                fd_scalar([&](double t) {
                  return tf_derivatives(tf_forward(t, p), p).tprime;
                }, b.theta)));
    upd(rel_err(b.dlog_tprime_dtheta,
                fd_scalar([&](double t) {
                  return -std::log(tf_derivatives(tf_forward(t, p), p).dtheta_dpsi);
                }, b.theta)));

    const int np = transform_param_count(kind);
    for (int j = 0; j < np; ++j) {
      auto with_param = [&](double v) {
        TransformParams q = p;
        if (kind == TransformKind::YeoJohnson) {
          q.yj_gamma = v;
        } else if (j == 0) {
          q.gh_g = v;
        } else {
          q.gh_h = v;
        }
        return q;
      };
      const double pv = (kind == TransformKind::YeoJohnson)
                            ? p.yj_gamma
                            : (j == 0 ? p.gh_g : p.gh_h);
      upd(rel_err(b.dtheta_dparam[j],
                  fd_scalar([&](double v) { return tf_inverse(psi, with_param(v)); }, pv)));
      upd(rel_err(b.d_dtheta_dpsi_dparam[j],
                  fd_scalar([&](double v) {
                    return tf_derivatives(psi, with_param(v)).dtheta_dpsi;
                  }, pv)));
      // dtprime_dparam: theta fixed for YJ, psi fixed for G&H
      if (kind == TransformKind::YeoJohnson) {
        upd(rel_err(b.dtprime_dparam[j],
                    fd_scalar([&](double v) {
                      const TransformParams q = with_param(v);
                      return tf_derivatives(tf_forward(b.theta, q), q).tprime;
                    }, pv)));
      } else {
        upd(rel_err(b.dtprime_dparam[j],
                    fd_scalar([&](double v) {
                      return tf_derivatives(psi, with_param(v)).tprime;
                    }, pv)));
      }
      const auto dltp = dlog_tprime_dparam_theta_fixed(b, p);
      upd(rel_err(dltp[j],
                  fd_scalar([&](double v) {
                    const TransformParams q = with_param(v);
                    return -std::log(tf_derivatives(tf_forward(b.theta, q), q).dtheta_dpsi);
                  }, pv)));
      const auto dps = dpsi_dparam_theta_fixed(b);
      upd(rel_err(dps[j],
                  fd_scalar([&](double v) { return tf_forward(b.theta, with_param(v)); }, pv)));
    }
  }
  return worst;
}

double check_factor_scale_dense(std::mt19937_64& rng) {
  std::normal_distribution<double> nd(0.0, 1.0);
  double worst = 0.0;
  for (int rep = 0; rep < 60; ++rep) {
    const int m = 2 + static_cast<int>(rng() % 12);
    const int k = static_cast<int>(rng() % std::min(m, 4));
    Eigen::MatrixXd B = Eigen::MatrixXd::Zero(m, k);
    for (int j = 0; j < k; ++j) {
      for (int i = j; i < m; ++i) {
        B(i, j) = 0.5 * nd(rng);
      }
    }
    Eigen::VectorXd d(m);
    for (int i = 0; i < m; ++i) {
      d[i] = 0.3 + std::abs(nd(rng));
      if (nd(rng) < 0) {
        d[i] = -d[i];
      }
    }
    const FactorScale fs(B, d);
    const Eigen::MatrixXd S = fs.dense();
    Eigen::VectorXd v(m);
    for (int i = 0; i < m; ++i) {
      v[i] = nd(rng);
    }
    worst = std::max(worst, rel_err(fs.solve(v), S.llt().solve(v).eval()));
    const Eigen::MatrixXd L = S.llt().matrixL();
    worst = std::max(worst, rel_err(fs.log_det(),
                                    2.0 * L.diagonal().array().log().sum()));
    worst = std::max(worst, rel_err(fs.variances(), S.diagonal().eval()));
    worst = std::max(worst, rel_err(fs.inverse_diagonal(),
                                    S.inverse().diagonal().eval()));
    worst = std::max(worst, rel_err(fs.solve(fs.apply(v)), v));
  }
  return worst;
}

FamilySpec random_spec(bool skew, std::mt19937_64& rng) {
  FamilySpec s;
  s.m = 2 + static_cast<int>(rng() % 7);
  s.k = static_cast<int>(rng() % std::min(s.m, 4));
  const int kindpick = static_cast<int>(rng() % 2);
  s.kind = kindpick == 0 ? TransformKind::YeoJohnson : TransformKind::InverseGH;
  s.skew = skew;
  return s;
}

Eigen::VectorXd random_normal_vec(int n, std::mt19937_64& rng) {
  std::normal_distribution<double> nd(0.0, 1.0);
  Eigen::VectorXd v(n);
  for (int i = 0; i < n; ++i) {
    v[i] = nd(rng);
  }
  return v;
}

double check_gaussian_grad_theta(std::mt19937_64& rng) {
  double worst = 0.0;
  for (int rep = 0; rep < 100; ++rep) {
    const FamilySpec spec = random_spec(false, rng);
    GaussianCopula fam(spec, random_lambda(spec, rng));
    const Eigen::VectorXd theta = fam.draw(random_normal_vec(fam.eps_dim(), rng));
    const Eigen::VectorXd g = fam.grad_theta(theta);
    const Eigen::VectorXd fd = fd_gradient(
        [&](const Eigen::VectorXd& t) { return fam.log_density(t); }, theta);
    worst = std::max(worst, rel_err(g, fd));
  }
  return worst;
}

double check_gaussian_reparam_vjp(std::mt19937_64& rng) {
  double worst = 0.0;
  for (int rep = 0; rep < 100; ++rep) {
    const FamilySpec spec = random_spec(false, rng);
    const Eigen::VectorXd lam = random_lambda(spec, rng);
    GaussianCopula fam(spec, lam);
    const Eigen::VectorXd eps = random_normal_vec(fam.eps_dim(), rng);
    const Eigen::VectorXd w = random_normal_vec(spec.m, rng);
    const Eigen::VectorXd vjp = fam.reparam_vjp(eps, w);
    const Eigen::VectorXd fd = fd_gradient(
        [&](const Eigen::VectorXd& l) {
          GaussianCopula f2(spec, l);
          return f2.draw(eps).dot(w);
        },
        lam);
    worst = std::max(worst, rel_err(vjp, fd));
  }
  return worst;
}

double check_gaussian_score(std::mt19937_64& rng) {
  double worst = 0.0;
  for (int rep = 0; rep < 100; ++rep) {
    const FamilySpec spec = random_spec(false, rng);
    const Eigen::VectorXd lam = random_lambda(spec, rng);
    GaussianCopula fam(spec, lam);
    const Eigen::VectorXd theta = fam.draw(random_normal_vec(fam.eps_dim(), rng));
    const Eigen::VectorXd sg = fam.score_grad(theta);
    const Eigen::VectorXd fd = fd_gradient(
        [&](const Eigen::VectorXd& l) {
          GaussianCopula f2(spec, l);
          return f2.log_density(theta);
        },
        lam);
    worst = std::max(worst, rel_err(sg, fd));
  }
  return worst;
}

// FD of the full pathwise map equals vjp(w*) - score_grad, tying the two
// gradient routes together through the identity
//   d/dlam [log g(h(eps,lam)) - log q_lam(h(eps,lam))]
//     = (dh/dlam)^T w* - grad_lam log q |_theta.
double check_gaussian_pathwise_consistency(std::mt19937_64& rng) {
  double worst = 0.0;
  GaussianToy target2(Eigen::Vector2d(0.3, -0.2),
                      (Eigen::Matrix2d() << 1.0, 0.5, 0.5, 1.2).finished());
  for (int rep = 0; rep < 20; ++rep) {
    FamilySpec spec;
    spec.m = 2;
    spec.k = 1;
    spec.kind = TransformKind::YeoJohnson;
    const Eigen::VectorXd lam = random_lambda(spec, rng);
    GaussianCopula fam(spec, lam);
    const Eigen::VectorXd eps = random_normal_vec(fam.eps_dim(), rng);
    const DrawEval de = fam.draw_eval(eps);
    const Eigen::VectorXd w =
        target2.grad_log_g(de.theta) - de.grad_theta_log_q;
    const Eigen::VectorXd lhs = fam.reparam_vjp(eps, w) - fam.score_grad(de.theta);
    const Eigen::VectorXd fd = fd_gradient(
        [&](const Eigen::VectorXd& l) {
          GaussianCopula f2(spec, l);
          const DrawEval d2 = f2.draw_eval(eps);
          return target2.log_g(d2.theta) - d2.log_q;
        },
        lam);
    worst = std::max(worst, rel_err(lhs, fd));
  }
  return worst;
}

double check_skew_grad_theta(std::mt19937_64& rng) {
  double worst = 0.0;
  for (int rep = 0; rep < 100; ++rep) {
    const FamilySpec spec = random_spec(true, rng);
    SkewNormalCopula fam(spec, random_lambda(spec, rng));
    const Eigen::VectorXd theta = fam.draw(random_normal_vec(fam.eps_dim(), rng));
    const Eigen::VectorXd g = fam.grad_theta(theta);
    const Eigen::VectorXd fd = fd_gradient(
        [&](const Eigen::VectorXd& t) { return fam.log_density(t); }, theta);
    worst = std::max(worst, rel_err(g, fd));
  }
  return worst;
}

double check_skew_vjp_block(std::mt19937_64& rng, int block) {
  // block: 0 mu, 1 vech(B), 2 d, 3 alpha, 4 gamma
  double worst = 0.0;
  for (int rep = 0; rep < 100; ++rep) {
    FamilySpec spec = random_spec(true, rng);
    if (block == 1 && spec.k == 0) {
      spec.k = 1;
    }
    const Layout L = make_layout(spec);
    const Eigen::VectorXd lam = random_lambda(spec, rng);
    SkewNormalCopula fam(spec, lam);
    const Eigen::VectorXd eps = random_normal_vec(fam.eps_dim(), rng);
    const Eigen::VectorXd w = random_normal_vec(spec.m, rng);
    const Eigen::VectorXd vjp = fam.reparam_vjp(eps, w);
    const Eigen::VectorXd fd = fd_gradient(
        [&](const Eigen::VectorXd& l) {
          SkewNormalCopula f2(spec, l);
          return f2.draw(eps).dot(w);
        },
        lam);
    int off = 0, len = 0;
    switch (block) {
      case 0: off = L.mu; len = spec.m; break;
      case 1: off = L.b; len = L.d - L.b; break;
      case 2: off = L.d; len = spec.m; break;
      case 3: off = L.alpha; len = spec.m; break;
      case 4: off = L.gamma; len = L.total - L.gamma; break;
    }
    if (len == 0) {
      continue;
    }
    worst = std::max(worst,
                     rel_err(vjp.segment(off, len).eval(), fd.segment(off, len).eval()));
  }
  return worst;
}

double check_normalization_1d(bool skew, std::mt19937_64& rng) {
  double worst = 0.0;
  std::normal_distribution<double> nd(0.0, 1.0);
  for (int rep = 0; rep < 25; ++rep) {
    FamilySpec spec;
    spec.m = 1;
    spec.k = static_cast<int>(rng() % 2);
    spec.kind = (rng() % 2 == 0) ? TransformKind::YeoJohnson : TransformKind::InverseGH;
    spec.skew = skew;
    const Eigen::VectorXd lam = random_lambda(spec, rng);
    std::unique_ptr<Family> fam;
    if (skew) {
      fam = std::make_unique<SkewNormalCopula>(spec, lam);
    } else {
      fam = std::make_unique<GaussianCopula>(spec, lam);
    }
    double mu, sd;
    if (skew) {
      const auto* sn = dynamic_cast<const SkewNormalCopula*>(fam.get());
      mu = sn->mu()[0];
      sd = std::sqrt(sn->scale().variances()[0]);
    } else {
      const auto* gc = dynamic_cast<const GaussianCopula*>(fam.get());
      mu = gc->mu()[0];
      sd = std::sqrt(gc->scale().variances()[0]);
    }
    TransformParams tp;
    {
      const Layout L = make_layout(spec);
      tp = transform_from_unconstrained(spec.kind, lam.data() + L.gamma);
    }
    // integrate in theta on nodes equally spaced in psi
    const int n = 1 << 14;
    const double plo = mu - 10.0 * sd, phi = mu + 10.0 * sd;
    double integral = 0.0;
    double prev_theta = tf_inverse(plo, tp);
    Eigen::VectorXd tv(1);
    tv << prev_theta;
    double prev_f = std::exp(fam->log_density(tv));
    for (int i = 1; i <= n; ++i) {
      const double psi = plo + (phi - plo) * i / n;
      const double theta = tf_inverse(psi, tp);
      tv << theta;
      const double f = std::exp(fam->log_density(tv));
      integral += 0.5 * (f + prev_f) * (theta - prev_theta);
      prev_theta = theta;
      prev_f = f;
    }
    worst = std::max(worst, std::abs(integral - 1.0));
  }
  return worst;
}

double check_target_grads(std::mt19937_64& rng) {
  double worst = 0.0;
  std::normal_distribution<double> nd(0.0, 1.0);

  // logistic
  {
    const int n = 20, p = 5;
    DesignMatrix dm;
    dm.X = Eigen::MatrixXd::NullaryExpr(n, p, [&](Eigen::Index, Eigen::Index) { return nd(rng); });
    dm.y = Eigen::VectorXd::NullaryExpr(n, [&](Eigen::Index) { return rng() % 2 ? 1.0 : 0.0; });
    LogisticRegression t(dm, 10.0);
    for (int rep = 0; rep < 20; ++rep) {
      const Eigen::VectorXd beta = random_normal_vec(p, rng);
      worst = std::max(worst,
                       rel_err(t.grad_log_g(beta),
                               fd_gradient([&](const Eigen::VectorXd& b) { return t.log_g(b); }, beta)));
    }
  }
  // mixed logistic, 3 subjects, 8 observations
  {
    const int n = 8, p = 2, J = 3;
    DesignMatrix dm;
    dm.X = Eigen::MatrixXd::NullaryExpr(n, p, [&](Eigen::Index, Eigen::Index) { return nd(rng); });
    dm.y = Eigen::VectorXd::NullaryExpr(n, [&](Eigen::Index) { return rng() % 2 ? 1.0 : 0.0; });
    std::vector<int> subj = {0, 1, 2, 0, 1, 2, 0, 1};
    MixedLogistic t(dm, subj, J);
    for (int rep = 0; rep < 20; ++rep) {
      const Eigen::VectorXd theta = random_normal_vec(t.dim(), rng);
      worst = std::max(worst,
                       rel_err(t.grad_log_g(theta),
                               fd_gradient([&](const Eigen::VectorXd& x) { return t.log_g(x); }, theta)));
    }
  }
  // gaussian toy
  {
    Eigen::MatrixXd S(2, 2);
    S << 1.0, 0.8, 0.8, 1.0;
    GaussianToy t(Eigen::Vector2d(0.4, -0.7), S, 3.7);
    for (int rep = 0; rep < 10; ++rep) {
      const Eigen::VectorXd theta = random_normal_vec(2, rng);
      worst = std::max(worst,
                       rel_err(t.grad_log_g(theta),
                               fd_gradient([&](const Eigen::VectorXd& x) { return t.log_g(x); }, theta)));
    }
  }
  return worst;
}

double check_skew_reduction(std::mt19937_64& rng) {
  double worst = 0.0;
  for (int rep = 0; rep < 20; ++rep) {
    FamilySpec sspec = random_spec(true, rng);
    Eigen::VectorXd slam = random_lambda(sspec, rng);
    const Layout SL = make_layout(sspec);
    slam.segment(SL.alpha, sspec.m).setZero();
    SkewNormalCopula sn(sspec, slam);

    FamilySpec gspec = sspec;
    gspec.skew = false;
    const Layout GL = make_layout(gspec);
    Eigen::VectorXd glam(GL.total);
    glam.segment(GL.mu, GL.d + sspec.m - GL.mu) =
        slam.segment(SL.mu, SL.d + sspec.m - SL.mu);
    glam.segment(GL.gamma, GL.total - GL.gamma) =
        slam.segment(SL.gamma, SL.total - SL.gamma);
    GaussianCopula gc(gspec, glam);

    const Eigen::VectorXd geps = random_normal_vec(gc.eps_dim(), rng);
    Eigen::VectorXd seps(sn.eps_dim());
    seps[0] = 0.7;
    seps[1] = -0.3;
    seps.tail(gc.eps_dim()) = geps;

    const Eigen::VectorXd ts = sn.draw(seps);
    const Eigen::VectorXd tg = gc.draw(geps);
    worst = std::max(worst, (ts - tg).cwiseAbs().maxCoeff());
    worst = std::max(worst, std::abs(sn.log_density(tg) - gc.log_density(tg)));
    worst = std::max(worst, rel_err(sn.grad_theta(tg), gc.grad_theta(tg), 1.0));
  }
  return worst;
}

}  // namespace

std::vector<CheckResult> run_registered_checks(std::uint64_t seed) {
  std::vector<std::pair<std::string, CheckFn>> checks;
  checks.emplace_back("transforms/yj-bundle-fd", [](std::mt19937_64& r) {
    return check_transform_bundle(TransformKind::YeoJohnson, r);
  });
  checks.emplace_back("transforms/igh-bundle-fd", [](std::mt19937_64& r) {
    return check_transform_bundle(TransformKind::InverseGH, r);
  });
  checks.emplace_back("factor-scale/dense-oracle", check_factor_scale_dense);
  checks.emplace_back("gaussian/grad-theta-fd", check_gaussian_grad_theta);
  checks.emplace_back("gaussian/reparam-vjp-fd", check_gaussian_reparam_vjp);
  checks.emplace_back("gaussian/score-grad-fd", check_gaussian_score);
  checks.emplace_back("gaussian/pathwise-consistency", check_gaussian_pathwise_consistency);
  checks.emplace_back("gaussian/normalization-1d", [](std::mt19937_64& r) {
    return check_normalization_1d(false, r);
  });
  checks.emplace_back("skew/grad-theta-fd", check_skew_grad_theta);
  checks.emplace_back("skew/vjp-mu-fd", [](std::mt19937_64& r) { return check_skew_vjp_block(r, 0); });
  checks.emplace_back("skew/vjp-B-fd", [](std::mt19937_64& r) { return check_skew_vjp_block(r, 1); });
  checks.emplace_back("skew/vjp-d-fd", [](std::mt19937_64& r) { return check_skew_vjp_block(r, 2); });
  checks.emplace_back("skew/vjp-alpha-fd", [](std::mt19937_64& r) { return check_skew_vjp_block(r, 3); });
  checks.emplace_back("skew/vjp-gamma-fd", [](std::mt19937_64& r) { return check_skew_vjp_block(r, 4); });
  checks.emplace_back("skew/normalization-1d", [](std::mt19937_64& r) {
    return check_normalization_1d(true, r);
  });
  checks.emplace_back("skew/alpha0-reduction", check_skew_reduction);
  checks.emplace_back("targets/grad-fd", check_target_grads);

  std::vector<CheckResult> results;
  for (auto& [name, fn] : checks) {
    std::mt19937_64 rng(seed);
    CheckResult res;
    res.name = name;
    res.max_rel_err = fn(rng);
    res.pass = res.max_rel_err < 1e-5;
    results.push_back(std::move(res));
  }
  return results;
}

std::string checks_report_json(const std::vector<CheckResult>& results) {
  std::ostringstream os;
  os << "{\n  \"checks\": [\n";
  for (size_t i = 0; i < results.size(); ++i) {
    os << "    {\"name\": \"" << results[i].name << "\", \"max_rel_err\": "
       << results[i].max_rel_err << ", \"pass\": "
       << (results[i].pass ? "true" : "false") << "}";
    os << (i + 1 < results.size() ? ",\n" : "\n");
  }
  os << "  ]\n}\n";
  return os.str();
}

}  // namespace vicop
