#ifndef VICOP_EXPERIMENT_HPP
#define VICOP_EXPERIMENT_HPP

#include <cstdint>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "vicop/dataset.hpp"
#include "vicop/family.hpp"
#include "vicop/optimizer.hpp"
#include "vicop/targets.hpp"

namespace vicop {

// One fit: a target, a family configuration and an optimizer setup.  The
// (base, transform, k) triple maps onto the A1-A8 labels when it matches one.
struct ExperimentSpec {
  // target
  std::string target = "toy-gaussian";  // toy-gaussian | logistic-csv |
                                        // logistic-synth | mixed-synth
  std::string dataset_path;
  std::string subject_column;
  bool add_intercept = false;
  bool standardize = false;
  double prior_var = 10.0;       // logistic coefficients / mixed fixed effects
  double prior_var_zeta = 10.0;  // mixed model zeta prior

  int toy_dim = 2;
  double toy_corr = 0.8;
  double toy_evidence = 0.0;

  int synth_n = 200;             // logistic-synth rows
  int synth_p = 1;               // continuous features (intercept added)
  int synth_rare = 0;            // rare quasi-separated indicator columns
  std::uint64_t synth_seed = 7;

  int mixed_subjects = 500;
  int mixed_obs_per_subject = 7;
  int mixed_p = 8;               // fixed effects including intercept
  std::uint64_t mixed_seed = 11;

  // family
  std::string base = "gaussian";       // gaussian | skewnormal
  std::string transform = "identity";  // identity | yj | igh
  int k = 0;

  OptimizerConfig opt;

  // outputs
  std::string out_dir;
  int marginal_coords = 9;      // first N coordinates exported
  int moment_draws = 100000;
  std::uint64_t moment_seed = 1234;
  int is_draws = 0;             // importance-sampling reference moments
                                // (qualitative, for dim > 2); 0 disables

  std::string family_label() const;  // "A1".."A8" or "custom"
  std::string canonical() const;     // flat key=value serialization
  std::uint64_t hash() const;        // FNV-1a 64 over canonical()
};

struct BuiltTarget {
  std::unique_ptr<Target> target;
  bool is_toy = false;
  double log_evidence = 0.0;  // toy only
  Eigen::VectorXd standardize_mean;  // recorded when standardization is on
  Eigen::VectorXd standardize_sd;
};
BuiltTarget build_target(const ExperimentSpec& spec);

FamilySpec family_spec_for(const ExperimentSpec& spec, int m);
std::unique_ptr<Family> build_family(const FamilySpec& fs);

struct ResultBundle {
  ExperimentSpec spec;
  std::uint64_t spec_hash = 0;
  std::string label;
  FamilySpec family_spec;
  int lambda_size = 0;
  RunTrace trace;
  double window_avg = 0.0;
  double minutes_per_1000 = 0.0;
  bool healthy = true;

  Eigen::MatrixXd moments;  // m x 3: mean, sd, Pearson skew (from draws)
  std::vector<int> marginal_idx;
  std::vector<std::pair<Eigen::VectorXd, Eigen::VectorXd>> marginals;  // grid, density

  bool has_oracle = false;
  Eigen::MatrixXd oracle_moments;  // m x 3 when available
  bool has_ceiling = false;
  double ceiling = 0.0;
  double ceiling_gap = 0.0;

  bool has_is_moments = false;     // qualitative IS reference for dim > 2
  Eigen::VectorXd is_mean, is_sd;
  double is_ess = 0.0;

  Eigen::VectorXd standardize_mean, standardize_sd;
};

ResultBundle run_experiment(const ExperimentSpec& spec);

// Writes trace.csv, timing.csv, elbo_vs_time.csv, summary.json, lambda.bin,
// moments.csv, marginals.csv and oracle.csv (when present) under dir.
void export_results(const ResultBundle& bundle, const std::string& dir);

// Re-derives the draw-based artifacts (moments, marginals) from a stored
// bundle directory; used by the export CLI verb.
void reexport_bundle(const std::string& bundle_dir, const std::string& out_dir);

struct GridResult {
  std::vector<ResultBundle> entries;
  std::string table_csv;  // label, |lambda|, window_avg, minutes per 1000 steps
};
// All specs must share the same target configuration.
GridResult run_grid(const std::vector<ExperimentSpec>& specs, int workers = 1);

// Per-coordinate mean, sd and Pearson skew from n family draws.
Eigen::MatrixXd family_draw_moments(const Family& family, int n_draws,
                                    std::uint64_t seed);

// (grid, density) curve of the i-th marginal on n points.
std::pair<Eigen::VectorXd, Eigen::VectorXd> marginal_curve(const Family& family,
                                                           int coord, int n = 512);

ExperimentSpec spec_with_family_label(ExperimentSpec base, const std::string& label);

std::uint64_t fnv1a64(const std::string& s);

}  // namespace vicop

#endif
