#include "vicop/experiment.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <future>
#include <random>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "vicop/gaussian_copula.hpp"
#include "vicop/lambda_io.hpp"
#include "vicop/skew_normal_copula.hpp"
#include "vicop/stats.hpp"
#include "vicop/verification.hpp"

namespace vicop {

namespace fs = std::filesystem;
using nlohmann::json;

std::uint64_t fnv1a64(const std::string& s) {
  std::uint64_t h = 1469598103934665603ull;
  for (const unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

namespace {

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

TransformKind kind_from_string(const std::string& s) {
  if (s == "identity") return TransformKind::Identity;
  if (s == "yj") return TransformKind::YeoJohnson;
  if (s == "igh") return TransformKind::InverseGH;
  throw std::invalid_argument("unknown transform '" + s + "' (identity|yj|igh)");
}

}  // namespace

std::string ExperimentSpec::family_label() const {
  const bool skew = base == "skewnormal";
  const TransformKind kind = kind_from_string(transform);
  if (!skew && k == 0 && kind == TransformKind::Identity) return "A1";
  if (!skew && k == 0 && kind == TransformKind::YeoJohnson) return "A2";
  if (k > 0) {
    if (!skew && kind == TransformKind::Identity) return "A3";
    if (skew && kind == TransformKind::Identity) return "A4";
    if (!skew && kind == TransformKind::YeoJohnson) return "A5";
    if (skew && kind == TransformKind::YeoJohnson) return "A6";
    if (!skew && kind == TransformKind::InverseGH) return "A7";
    if (skew && kind == TransformKind::InverseGH) return "A8";
  }
  return "custom";
}

std::string ExperimentSpec::canonical() const {
  std::ostringstream os;
  os << "target=" << target << "\n"
     << "dataset_path=" << dataset_path << "\n"
     << "subject_column=" << subject_column << "\n"
     << "add_intercept=" << add_intercept << "\n"
     << "standardize=" << standardize << "\n"
     << "prior_var=" << fmt_double(prior_var) << "\n"
     << "prior_var_zeta=" << fmt_double(prior_var_zeta) << "\n"
     << "toy_dim=" << toy_dim << "\n"
     << "toy_corr=" << fmt_double(toy_corr) << "\n"
     << "toy_evidence=" << fmt_double(toy_evidence) << "\n"
     << "synth_n=" << synth_n << "\n"
     << "synth_p=" << synth_p << "\n"
     << "synth_rare=" << synth_rare << "\n"
     << "synth_seed=" << synth_seed << "\n"
     << "mixed_subjects=" << mixed_subjects << "\n"
     << "mixed_obs_per_subject=" << mixed_obs_per_subject << "\n"
     << "mixed_p=" << mixed_p << "\n"
     << "mixed_seed=" << mixed_seed << "\n"
     << "base=" << base << "\n"
     << "transform=" << transform << "\n"
     << "k=" << k << "\n"
     << "n_steps=" << opt.n_steps << "\n"
     << "samples_per_step=" << opt.samples_per_step << "\n"
     << "seed=" << opt.seed << "\n"
     << "adadelta_rho=" << fmt_double(opt.adadelta_rho) << "\n"
     << "adadelta_eps=" << fmt_double(opt.adadelta_eps) << "\n"
     << "estimator=" << (opt.estimator == GradEstimator::Reparam ? "reparam" : "score") << "\n"
     << "elbo_window=" << opt.elbo_window << "\n"
     << "checkpoint_every=" << opt.checkpoint_every << "\n"
     << "n_threads=" << opt.n_threads << "\n"
     << "marginal_coords=" << marginal_coords << "\n"
     << "moment_draws=" << moment_draws << "\n"
     << "moment_seed=" << moment_seed << "\n";
  return os.str();
}

std::uint64_t ExperimentSpec::hash() const { return fnv1a64(canonical()); }

namespace {

// Synthetic logistic data: standard-normal continuous features plus optional
// rare indicator columns whose active rows are forced to response 1 so the
// matching coefficients have one-sided, strongly skewed posteriors.
LoadedDataset make_synthetic_logistic(int n, int p_cont, int p_rare,
                                      std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd(0.0, 1.0);
  std::uniform_real_distribution<double> ur(0.0, 1.0);
  const int p = 1 + p_cont + p_rare;
  Eigen::MatrixXd X = Eigen::MatrixXd::Zero(n, p);
  X.col(0).setOnes();
  for (int j = 0; j < p_cont; ++j) {
    for (int i = 0; i < n; ++i) {
      X(i, 1 + j) = nd(rng);
    }
  }
  Eigen::VectorXd beta(p);
  beta[0] = -1.0;
  for (int j = 0; j < p_cont; ++j) {
    beta[1 + j] = 0.8 * nd(rng);
  }
  for (int j = 0; j < p_rare; ++j) {
    beta[1 + p_cont + j] = 2.0;
  }
  // rare indicators: 10-14 active rows each, drawn from a small shared pool
  // and forced to response 1 below.  Each coefficient's likelihood is a sharp
  // one-sided wall (a strongly right-skewed posterior margin) and the heavy
  // row overlap correlates the walls across columns.
  const int pool_size = std::min(n, 30);
  std::vector<int> pool(pool_size);
  for (int i = 0; i < pool_size; ++i) {
    pool[i] = static_cast<int>(rng() % n);
  }
  for (int j = 0; j < p_rare; ++j) {
    const int count = 10 + static_cast<int>(rng() % 5);
    for (int c = 0; c < count; ++c) {
      X(pool[rng() % pool_size], 1 + p_cont + j) = 1.0;
    }
  }
  Eigen::VectorXd y(n);
  const Eigen::VectorXd eta = X * beta;
  for (int i = 0; i < n; ++i) {
    y[i] = ur(rng) < sigmoid(eta[i]) ? 1.0 : 0.0;
  }
  for (int j = 0; j < p_rare; ++j) {
    for (int i = 0; i < n; ++i) {
      if (X(i, 1 + p_cont + j) == 1.0) {
        y[i] = 1.0;
      }
    }
  }
  LoadedDataset out;
  out.data.X = std::move(X);
  out.data.y = std::move(y);
  out.data.feature_names.push_back("(intercept)");
  for (int j = 0; j < p_cont; ++j) {
    out.data.feature_names.push_back("x" + std::to_string(j + 1));
  }
  for (int j = 0; j < p_rare; ++j) {
    out.data.feature_names.push_back("rare" + std::to_string(j + 1));
  }
  return out;
}

LoadedDataset make_synthetic_mixed(int J, int per_subject, int p,
                                   std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd(0.0, 1.0);
  std::uniform_real_distribution<double> ur(0.0, 1.0);
  const int n = J * per_subject;
  Eigen::MatrixXd X = Eigen::MatrixXd::Zero(n, p);
  X.col(0).setOnes();
  for (int i = 0; i < n; ++i) {
    for (int j = 1; j < p; ++j) {
      X(i, j) = nd(rng);
    }
  }
  Eigen::VectorXd beta(p);
  for (int j = 0; j < p; ++j) {
    beta[j] = 0.5 * nd(rng);
  }
  Eigen::VectorXd b(J);
  for (int j = 0; j < J; ++j) {
    b[j] = nd(rng);  // zeta_true = 0, unit random-effect sd
  }
  LoadedDataset out;
  out.subject.resize(n);
  Eigen::VectorXd y(n);
  for (int i = 0; i < n; ++i) {
    out.subject[i] = i / per_subject;
    const double eta = X.row(i).dot(beta) + b[out.subject[i]];
    y[i] = ur(rng) < sigmoid(eta) ? 1.0 : 0.0;
  }
  out.n_subjects = J;
  out.data.X = std::move(X);
  out.data.y = std::move(y);
  for (int j = 0; j < p; ++j) {
    out.data.feature_names.push_back(j == 0 ? "(intercept)" : "x" + std::to_string(j));
  }
  return out;
}

}  // namespace

BuiltTarget build_target(const ExperimentSpec& spec) {
  BuiltTarget out;
  if (spec.target == "toy-gaussian") {
    const int m = spec.toy_dim;
    Eigen::MatrixXd S = Eigen::MatrixXd::Identity(m, m);
    for (int i = 0; i < m; ++i) {
      for (int j = 0; j < m; ++j) {
        if (i != j) {
          S(i, j) = spec.toy_corr;
        }
      }
    }
    Eigen::VectorXd mu0(m);
    for (int i = 0; i < m; ++i) {
      mu0[i] = 0.5 - 0.2 * i;
    }
    out.target = std::make_unique<GaussianToy>(mu0, S, spec.toy_evidence);
    out.is_toy = true;
    out.log_evidence = spec.toy_evidence;
    return out;
  }
  if (spec.target == "logistic-csv") {
    LoadOptions lo;
    lo.add_intercept = spec.add_intercept;
    lo.standardize = spec.standardize;
    const LoadedDataset ds = load_dataset(spec.dataset_path, lo);
    out.standardize_mean = ds.feature_mean;
    out.standardize_sd = ds.feature_sd;
    out.target = std::make_unique<LogisticRegression>(ds.data, spec.prior_var);
    return out;
  }
  if (spec.target == "logistic-synth") {
    const LoadedDataset ds = make_synthetic_logistic(spec.synth_n, spec.synth_p,
                                                     spec.synth_rare, spec.synth_seed);
    out.target = std::make_unique<LogisticRegression>(ds.data, spec.prior_var);
    return out;
  }
  if (spec.target == "mixed-synth") {
    const LoadedDataset ds = make_synthetic_mixed(
        spec.mixed_subjects, spec.mixed_obs_per_subject, spec.mixed_p, spec.mixed_seed);
    out.target = std::make_unique<MixedLogistic>(ds.data, ds.subject, ds.n_subjects,
                                                 spec.prior_var, spec.prior_var_zeta);
    return out;
  }
  if (spec.target == "mixed-csv") {
    if (spec.subject_column.empty()) {
      throw std::invalid_argument("mixed-csv target needs --subject-col");
    }
    LoadOptions lo;
    lo.add_intercept = spec.add_intercept;
    lo.standardize = spec.standardize;
    lo.subject_column = spec.subject_column;
    const LoadedDataset ds = load_dataset(spec.dataset_path, lo);
    out.standardize_mean = ds.feature_mean;
    out.standardize_sd = ds.feature_sd;
    out.target = std::make_unique<MixedLogistic>(ds.data, ds.subject, ds.n_subjects,
                                                 spec.prior_var, spec.prior_var_zeta);
    return out;
  }
  throw std::invalid_argument("unknown target '" + spec.target + "'");
}

FamilySpec family_spec_for(const ExperimentSpec& spec, int m) {
  FamilySpec fs;
  fs.m = m;
  fs.k = spec.k;
  fs.kind = kind_from_string(spec.transform);
  if (spec.base == "skewnormal") {
    fs.skew = true;
  } else if (spec.base != "gaussian") {
    throw std::invalid_argument("unknown base '" + spec.base + "' (gaussian|skewnormal)");
  }
  return fs;
}

std::unique_ptr<Family> build_family(const FamilySpec& fs) {
  if (fs.skew) {
    return std::make_unique<SkewNormalCopula>(fs);
  }
  return std::make_unique<GaussianCopula>(fs);
}

Eigen::MatrixXd family_draw_moments(const Family& family, int n_draws,
                                    std::uint64_t seed) {
  const int m = family.dim();
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd(0.0, 1.0);
  Eigen::VectorXd eps(family.eps_dim());
  Eigen::VectorXd s1 = Eigen::VectorXd::Zero(m);
  Eigen::VectorXd s2 = Eigen::VectorXd::Zero(m);
  Eigen::VectorXd s3 = Eigen::VectorXd::Zero(m);
  for (int t = 0; t < n_draws; ++t) {
    for (int i = 0; i < eps.size(); ++i) {
      eps[i] = nd(rng);
    }
    const Eigen::VectorXd theta = family.draw(eps);
    s1 += theta;
    s2 += theta.cwiseAbs2();
    s3 += theta.array().cube().matrix();
  }
  Eigen::MatrixXd out(m, 3);
  for (int i = 0; i < m; ++i) {
    const double mean = s1[i] / n_draws;
    const double m2 = s2[i] / n_draws - mean * mean;
    const double m3 = s3[i] / n_draws - 3.0 * mean * m2 - mean * mean * mean;
    out(i, 0) = mean;
    out(i, 1) = std::sqrt(std::max(m2, 0.0));
    out(i, 2) = m3 / std::pow(std::max(m2, 1e-300), 1.5);
  }
  return out;
}

std::pair<Eigen::VectorXd, Eigen::VectorXd> marginal_curve(const Family& family,
                                                           int coord, int n) {
  double mu_i = 0.0, sd_i = 1.0;
  TransformParams tp;
  if (const auto* gc = dynamic_cast<const GaussianCopula*>(&family)) {
    mu_i = gc->mu()[coord];
    sd_i = std::sqrt(gc->scale().variances()[coord]);
    tp = gc->margins()[coord];
  } else if (const auto* sn = dynamic_cast<const SkewNormalCopula*>(&family)) {
    mu_i = sn->mu()[coord];
    sd_i = std::sqrt(sn->scale().variances()[coord]);
    tp = sn->margins()[coord];
  } else {
    throw std::invalid_argument("marginal_curve: unsupported family");
  }
  const double lo = tf_inverse(mu_i - 6.0 * sd_i, tp);
  const double hi = tf_inverse(mu_i + 6.0 * sd_i, tp);
  Eigen::VectorXd grid(n), dens(n);
  for (int j = 0; j < n; ++j) {
    grid[j] = lo + (hi - lo) * j / (n - 1);
    if (const auto* gc = dynamic_cast<const GaussianCopula*>(&family)) {
      dens[j] = gc->marginal_density(coord, grid[j]);
    } else {
      dens[j] = dynamic_cast<const SkewNormalCopula*>(&family)->marginal_density(coord, grid[j]);
    }
  }
  return {grid, dens};
}

ResultBundle run_experiment(const ExperimentSpec& spec) {
  ResultBundle bundle;
  bundle.spec = spec;
  bundle.spec_hash = spec.hash();
  bundle.label = spec.family_label();

  BuiltTarget bt = build_target(spec);
  const int m = bt.target->dim();
  bundle.family_spec = family_spec_for(spec, m);
  std::unique_ptr<Family> family = build_family(bundle.family_spec);
  bundle.lambda_size = family->lambda_size();

  bundle.trace = run(*family, *bt.target, spec.opt);
  bundle.window_avg = bundle.trace.window_avg;
  bundle.healthy = bundle.trace.healthy;
  double total_ms = 0.0;
  for (const double w : bundle.trace.wall_ms) {
    total_ms += w;
  }
  bundle.minutes_per_1000 =
      spec.opt.n_steps > 0 ? total_ms / spec.opt.n_steps * 1000.0 / 60000.0 : 0.0;

  family->set_lambda(bundle.trace.final_lambda);
  bundle.moments = family_draw_moments(*family, spec.moment_draws, spec.moment_seed);

  const int nmc = std::min(spec.marginal_coords, m);
  for (int i = 0; i < nmc; ++i) {
    bundle.marginal_idx.push_back(i);
    bundle.marginals.push_back(marginal_curve(*family, i, 512));
  }

  if (bt.is_toy) {
    const auto* toy = dynamic_cast<const GaussianToy*>(bt.target.get());
    bundle.has_ceiling = true;
    bundle.ceiling = toy->log_evidence();
    bundle.ceiling_gap = bundle.ceiling - bundle.window_avg;
    bundle.has_oracle = true;
    bundle.oracle_moments.resize(m, 3);
    bundle.oracle_moments.col(0) = toy->mean();
    bundle.oracle_moments.col(1) = toy->covariance().diagonal().cwiseSqrt();
    bundle.oracle_moments.col(2).setZero();
  } else if (m <= 2) {
    const QuadPosterior qp = quad_posterior(*bt.target);
    bundle.has_oracle = true;
    bundle.oracle_moments.resize(m, 3);
    bundle.oracle_moments.col(0) = qp.mean;
    bundle.oracle_moments.col(1) = qp.cov.diagonal().cwiseSqrt();
    bundle.oracle_moments.col(2) = qp.skew;
  }

  if (!spec.out_dir.empty()) {
    export_results(bundle, spec.out_dir);
  }
  return bundle;
}

namespace {

void write_file(const fs::path& p, const std::string& content) {
  std::ofstream out(p, std::ios::binary);
  if (!out) {
    throw std::runtime_error("cannot write " + p.string());
  }
  out << content;
}

json spec_to_json(const ExperimentSpec& s) {
  json j;
  j["target"] = s.target;
  j["dataset_path"] = s.dataset_path;
  j["subject_column"] = s.subject_column;
  j["add_intercept"] = s.add_intercept;
  j["standardize"] = s.standardize;
  j["prior_var"] = s.prior_var;
  j["prior_var_zeta"] = s.prior_var_zeta;
  j["toy_dim"] = s.toy_dim;
  j["toy_corr"] = s.toy_corr;
  j["toy_evidence"] = s.toy_evidence;
  j["synth_n"] = s.synth_n;
  j["synth_p"] = s.synth_p;
  j["synth_rare"] = s.synth_rare;
  j["synth_seed"] = s.synth_seed;
  j["mixed_subjects"] = s.mixed_subjects;
  j["mixed_obs_per_subject"] = s.mixed_obs_per_subject;
  j["mixed_p"] = s.mixed_p;
  j["mixed_seed"] = s.mixed_seed;
  j["base"] = s.base;
  j["transform"] = s.transform;
  j["k"] = s.k;
  j["n_steps"] = s.opt.n_steps;
  j["samples_per_step"] = s.opt.samples_per_step;
  j["seed"] = s.opt.seed;
  j["adadelta_rho"] = s.opt.adadelta_rho;
  j["adadelta_eps"] = s.opt.adadelta_eps;
  j["estimator"] = s.opt.estimator == GradEstimator::Reparam ? "reparam" : "score";
  j["elbo_window"] = s.opt.elbo_window;
  j["checkpoint_every"] = s.opt.checkpoint_every;
  j["n_threads"] = s.opt.n_threads;
  j["marginal_coords"] = s.marginal_coords;
  j["moment_draws"] = s.moment_draws;
  j["moment_seed"] = s.moment_seed;
  return j;
}

ExperimentSpec spec_from_json(const json& j) {
  ExperimentSpec s;
  s.target = j.at("target");
  s.dataset_path = j.at("dataset_path");
  s.subject_column = j.at("subject_column");
  s.add_intercept = j.at("add_intercept");
  s.standardize = j.at("standardize");
  s.prior_var = j.at("prior_var");
  s.prior_var_zeta = j.at("prior_var_zeta");
  s.toy_dim = j.at("toy_dim");
  s.toy_corr = j.at("toy_corr");
  s.toy_evidence = j.at("toy_evidence");
  s.synth_n = j.at("synth_n");
  s.synth_p = j.at("synth_p");
  s.synth_rare = j.at("synth_rare");
  s.synth_seed = j.at("synth_seed");
  s.mixed_subjects = j.at("mixed_subjects");
  s.mixed_obs_per_subject = j.at("mixed_obs_per_subject");
  s.mixed_p = j.at("mixed_p");
  s.mixed_seed = j.at("mixed_seed");
  s.base = j.at("base");
  s.transform = j.at("transform");
  s.k = j.at("k");
  s.opt.n_steps = j.at("n_steps");
  s.opt.samples_per_step = j.at("samples_per_step");
  s.opt.seed = j.at("seed");
  s.opt.adadelta_rho = j.at("adadelta_rho");
  s.opt.adadelta_eps = j.at("adadelta_eps");
  s.opt.estimator = j.at("estimator") == "score" ? GradEstimator::ScoreWithBaseline
                                                 : GradEstimator::Reparam;
  s.opt.elbo_window = j.at("elbo_window");
  s.opt.checkpoint_every = j.at("checkpoint_every");
  s.opt.n_threads = j.at("n_threads");
  s.marginal_coords = j.at("marginal_coords");
  s.moment_draws = j.at("moment_draws");
  s.moment_seed = j.at("moment_seed");
  return s;
}

}  // namespace

void export_results(const ResultBundle& bundle, const std::string& dir) {
  fs::create_directories(dir);
  const std::string hash_line = "# spec_hash=" + std::to_string(bundle.spec_hash) + "\n";

  {
    std::ostringstream os;
    os << hash_line << "step,elbo\n";
    for (size_t i = 0; i < bundle.trace.elbo.size(); ++i) {
      os << (i + 1) << "," << fmt_double(bundle.trace.elbo[i]) << "\n";
    }
    write_file(fs::path(dir) / "trace.csv", os.str());
  }
  {
    std::ostringstream os;
    os << hash_line << "step,wallclock_ms\n";
    for (size_t i = 0; i < bundle.trace.wall_ms.size(); ++i) {
      os << (i + 1) << "," << fmt_double(bundle.trace.wall_ms[i]) << "\n";
    }
    write_file(fs::path(dir) / "timing.csv", os.str());
  }
  {
    std::ostringstream os;
    os << hash_line << "step,cum_seconds,elbo\n";
    double cum = 0.0;
    for (size_t i = 0; i < bundle.trace.elbo.size(); ++i) {
      cum += bundle.trace.wall_ms[i] / 1000.0;
      os << (i + 1) << "," << fmt_double(cum) << "," << fmt_double(bundle.trace.elbo[i]) << "\n";
    }
    write_file(fs::path(dir) / "elbo_vs_time.csv", os.str());
  }
  {
    std::ostringstream os;
    os << hash_line << "coord,mean,sd,skew\n";
    for (int i = 0; i < bundle.moments.rows(); ++i) {
      os << i << "," << fmt_double(bundle.moments(i, 0)) << ","
         << fmt_double(bundle.moments(i, 1)) << "," << fmt_double(bundle.moments(i, 2))
         << "\n";
    }
    write_file(fs::path(dir) / "moments.csv", os.str());
  }
  {
    std::ostringstream os;
    os << hash_line << "coord,theta,density\n";
    for (size_t c = 0; c < bundle.marginals.size(); ++c) {
      const auto& [grid, dens] = bundle.marginals[c];
      for (int j = 0; j < grid.size(); ++j) {
        os << bundle.marginal_idx[c] << "," << fmt_double(grid[j]) << ","
           << fmt_double(dens[j]) << "\n";
      }
    }
    write_file(fs::path(dir) / "marginals.csv", os.str());
  }
  if (bundle.has_oracle) {
    // comparison table: fitted moments next to the oracle's
    std::ostringstream os;
    os << hash_line
       << "coord,mean,sd,skew,oracle_mean,oracle_sd,oracle_skew\n";
    for (int i = 0; i < bundle.oracle_moments.rows(); ++i) {
      os << i << "," << fmt_double(bundle.moments(i, 0)) << ","
         << fmt_double(bundle.moments(i, 1)) << ","
         << fmt_double(bundle.moments(i, 2)) << ","
         << fmt_double(bundle.oracle_moments(i, 0)) << ","
         << fmt_double(bundle.oracle_moments(i, 1)) << ","
         << fmt_double(bundle.oracle_moments(i, 2)) << "\n";
    }
    write_file(fs::path(dir) / "oracle.csv", os.str());
  }

  save_lambda((fs::path(dir) / "lambda.bin").string(), bundle.family_spec,
              bundle.trace.final_lambda);

  json j;
  j["spec"] = spec_to_json(bundle.spec);
  j["spec_hash"] = bundle.spec_hash;
  j["label"] = bundle.label;
  j["m"] = bundle.family_spec.m;
  j["lambda_size"] = bundle.lambda_size;
  j["window_avg_elbo"] = bundle.window_avg;
  j["minutes_per_1000_steps"] = bundle.minutes_per_1000;
  j["flagged_steps"] = bundle.trace.n_flagged;
  j["healthy"] = bundle.healthy;
  j["lambda_checksum"] = fnv1a64([&] {
    std::ostringstream os;
    for (int i = 0; i < bundle.trace.final_lambda.size(); ++i) {
      os << fmt_double(bundle.trace.final_lambda[i]) << ",";
    }
    return os.str();
  }());
  if (bundle.has_ceiling) {
    j["elbo_ceiling"] = bundle.ceiling;
    j["ceiling_gap"] = bundle.ceiling_gap;
  }
  j["has_oracle"] = bundle.has_oracle;
  write_file(fs::path(dir) / "summary.json", j.dump(2) + "\n");
}

void reexport_bundle(const std::string& bundle_dir, const std::string& out_dir) {
  std::ifstream in(fs::path(bundle_dir) / "summary.json");
  if (!in) {
    throw std::runtime_error("reexport_bundle: no summary.json in " + bundle_dir);
  }
  json j;
  in >> j;
  const ExperimentSpec spec = spec_from_json(j.at("spec"));
  const LambdaCheckpoint cp = load_lambda((fs::path(bundle_dir) / "lambda.bin").string());

  std::unique_ptr<Family> family = build_family(cp.spec);
  family->set_lambda(cp.lambda);

  fs::create_directories(out_dir);
  const std::string hash_line =
      "# spec_hash=" + std::to_string(j.at("spec_hash").get<std::uint64_t>()) + "\n";

  const Eigen::MatrixXd moments =
      family_draw_moments(*family, spec.moment_draws, spec.moment_seed);
  {
    std::ostringstream os;
    os << hash_line << "coord,mean,sd,skew\n";
    for (int i = 0; i < moments.rows(); ++i) {
      os << i << "," << fmt_double(moments(i, 0)) << "," << fmt_double(moments(i, 1))
         << "," << fmt_double(moments(i, 2)) << "\n";
    }
    write_file(fs::path(out_dir) / "moments.csv", os.str());
  }
  {
    std::ostringstream os;
    os << hash_line << "coord,theta,density\n";
    const int nmc = std::min(spec.marginal_coords, family->dim());
    for (int c = 0; c < nmc; ++c) {
      const auto [grid, dens] = marginal_curve(*family, c, 512);
      for (int g = 0; g < grid.size(); ++g) {
        os << c << "," << fmt_double(grid[g]) << "," << fmt_double(dens[g]) << "\n";
      }
    }
    write_file(fs::path(out_dir) / "marginals.csv", os.str());
  }
  write_file(fs::path(out_dir) / "summary.json", j.dump(2) + "\n");
}

GridResult run_grid(const std::vector<ExperimentSpec>& specs, int workers) {
  if (specs.empty()) {
    throw std::invalid_argument("run_grid: empty spec list");
  }
  // all entries must share the target configuration
  auto target_key = [](const ExperimentSpec& s) {
    ExperimentSpec t = s;
    t.base.clear();
    t.transform.clear();
    t.k = 0;
    t.out_dir.clear();
    t.opt = OptimizerConfig{};
    t.opt.seed = s.opt.seed;
    return t.canonical();
  };
  const std::string key0 = target_key(specs.front());
  for (const auto& s : specs) {
    if (target_key(s) != key0) {
      throw std::invalid_argument("run_grid: specs must share the same target");
    }
  }

  GridResult out;
  out.entries.resize(specs.size());
  if (workers > 1) {
    std::vector<std::future<ResultBundle>> futs;
    futs.reserve(specs.size());
    for (const auto& s : specs) {
      futs.push_back(std::async(std::launch::async, [&s] { return run_experiment(s); }));
    }
    for (size_t i = 0; i < futs.size(); ++i) {
      out.entries[i] = futs[i].get();
    }
  } else {
    for (size_t i = 0; i < specs.size(); ++i) {
      out.entries[i] = run_experiment(specs[i]);
    }
  }

  std::ostringstream os;
  os << "label,lambda_size,window_avg_elbo,minutes_per_1000_steps\n";
  for (const auto& b : out.entries) {
    os << b.label << "," << b.lambda_size << "," << fmt_double(b.window_avg) << ","
       << fmt_double(b.minutes_per_1000) << "\n";
  }
  out.table_csv = os.str();
  return out;
}

ExperimentSpec spec_with_family_label(ExperimentSpec base, const std::string& label) {
  if (label == "A1") {
    base.base = "gaussian";
    base.transform = "identity";
    base.k = 0;
  } else if (label == "A2") {
    base.base = "gaussian";
    base.transform = "yj";
    base.k = 0;
  } else if (label == "A3") {
    base.base = "gaussian";
    base.transform = "identity";
  } else if (label == "A4") {
    base.base = "skewnormal";
    base.transform = "identity";
  } else if (label == "A5") {
    base.base = "gaussian";
    base.transform = "yj";
  } else if (label == "A6") {
    base.base = "skewnormal";
    base.transform = "yj";
  } else if (label == "A7") {
    base.base = "gaussian";
    base.transform = "igh";
  } else if (label == "A8") {
    base.base = "skewnormal";
    base.transform = "igh";
  } else {
    throw std::invalid_argument("unknown family label '" + label + "'");
  }
  if (label != "A1" && label != "A2" && base.k <= 0) {
    throw std::invalid_argument("family " + label + " needs k > 0 factors");
  }
  return base;
}

}  // namespace vicop
