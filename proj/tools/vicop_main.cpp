// Command-line front door: fit one approximation, run a family grid, run the
// registered verification checks, or re-export a stored bundle.
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "vicop/experiment.hpp"
#include "vicop/verification.hpp"

namespace {

void add_spec_options(CLI::App* cmd, vicop::ExperimentSpec& spec,
                      std::string& estimator) {
  cmd->add_option("--target", spec.target,
                  "toy-gaussian | logistic-csv | logistic-synth | mixed-synth | mixed-csv");
  cmd->add_option("--dataset", spec.dataset_path, "CSV path (header row, last column = binary response)");
  cmd->add_option("--subject-col", spec.subject_column, "subject id column for mixed-csv");
  cmd->add_flag("--add-intercept", spec.add_intercept, "prepend a ones column");
  cmd->add_flag("--standardize", spec.standardize, "z-score features per column");
  cmd->add_option("--prior-var", spec.prior_var, "prior variance for coefficients");
  cmd->add_option("--prior-var-zeta", spec.prior_var_zeta, "prior variance for zeta (mixed model)");
  cmd->add_option("--toy-dim", spec.toy_dim);
  cmd->add_option("--toy-corr", spec.toy_corr);
  cmd->add_option("--toy-evidence", spec.toy_evidence);
  cmd->add_option("--synth-n", spec.synth_n);
  cmd->add_option("--synth-p", spec.synth_p);
  cmd->add_option("--synth-rare", spec.synth_rare);
  cmd->add_option("--synth-seed", spec.synth_seed);
  cmd->add_option("--mixed-subjects", spec.mixed_subjects);
  cmd->add_option("--mixed-obs", spec.mixed_obs_per_subject);
  cmd->add_option("--mixed-p", spec.mixed_p);
  cmd->add_option("--mixed-seed", spec.mixed_seed);

  cmd->add_option("--base", spec.base, "gaussian | skewnormal");
  cmd->add_option("--transform", spec.transform, "identity | yj | igh");
  cmd->add_option("--k", spec.k, "factor count (0 = mean field)");

  cmd->add_option("--steps", spec.opt.n_steps, "SGA steps");
  cmd->add_option("--samples", spec.opt.samples_per_step, "samples per step");
  cmd->add_option("--seed", spec.opt.seed);
  cmd->add_option("--adadelta-rho", spec.opt.adadelta_rho);
  cmd->add_option("--adadelta-eps", spec.opt.adadelta_eps);
  cmd->add_option("--estimator", estimator, "reparam | score");
  cmd->add_option("--elbo-window", spec.opt.elbo_window);
  cmd->add_option("--checkpoint-every", spec.opt.checkpoint_every);
  cmd->add_option("--threads", spec.opt.n_threads, "per-step sample evaluation threads");

  cmd->add_option("--out", spec.out_dir, "output directory");
  cmd->add_option("--marginal-coords", spec.marginal_coords);
  cmd->add_option("--moment-draws", spec.moment_draws);
  cmd->add_option("--moment-seed", spec.moment_seed);
  cmd->set_config("--config", "", "flat key=value config file; command-line flags win");
}

void finish_spec(vicop::ExperimentSpec& spec, const std::string& estimator) {
  if (estimator == "score") {
    spec.opt.estimator = vicop::GradEstimator::ScoreWithBaseline;
  } else if (estimator == "reparam") {
    spec.opt.estimator = vicop::GradEstimator::Reparam;
  } else {
    throw CLI::ValidationError("--estimator must be reparam or score");
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"implicit-copula variational inference"};
  app.require_subcommand(1);

  vicop::ExperimentSpec spec;
  std::string estimator = "reparam";

  auto* fit = app.add_subcommand("fit", "calibrate one approximation");
  add_spec_options(fit, spec, estimator);

  auto* grid = app.add_subcommand("grid", "run a family grid on one target");
  std::vector<std::string> family_labels;
  int workers = 1;
  add_spec_options(grid, spec, estimator);
  grid->add_option("--families", family_labels, "family labels, e.g. A3,A5,A7")
      ->delimiter(',')
      ->required();
  grid->add_option("--workers", workers, "concurrent grid entries");

  auto* verify = app.add_subcommand("verify", "run registered verification checks");
  std::string report_path = "verification_report.json";
  std::uint64_t verify_seed = 20240901;
  verify->add_option("--report", report_path, "JSON report path");
  verify->add_option("--seed", verify_seed);

  auto* exp = app.add_subcommand("export", "re-export artifacts from a stored bundle");
  std::string bundle_dir, export_out;
  exp->add_option("--bundle", bundle_dir, "bundle directory (summary.json + lambda.bin)")->required();
  exp->add_option("--out", export_out, "output directory")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (fit->parsed()) {
      finish_spec(spec, estimator);
      const vicop::ResultBundle bundle = vicop::run_experiment(spec);
      std::cout << "label=" << bundle.label << " |lambda|=" << bundle.lambda_size
                << " window_avg_elbo=" << bundle.window_avg
                << " minutes_per_1000=" << bundle.minutes_per_1000
                << (bundle.healthy ? "" : " [UNHEALTHY]") << "\n";
      if (bundle.has_ceiling) {
        std::cout << "elbo_ceiling=" << bundle.ceiling
                  << " ceiling_gap=" << bundle.ceiling_gap << "\n";
      }
      if (!spec.out_dir.empty()) {
        std::cout << "wrote " << spec.out_dir << "\n";
      }
    } else if (grid->parsed()) {
      finish_spec(spec, estimator);
      std::vector<vicop::ExperimentSpec> specs;
      for (const auto& label : family_labels) {
        vicop::ExperimentSpec s = vicop::spec_with_family_label(spec, label);
        if (!spec.out_dir.empty()) {
          s.out_dir = spec.out_dir + "/" + label;
        }
        specs.push_back(std::move(s));
      }
      const vicop::GridResult res = vicop::run_grid(specs, workers);
      std::cout << res.table_csv;
      if (!spec.out_dir.empty()) {
        std::ofstream out(spec.out_dir + "/grid.csv");
        out << res.table_csv;
        std::cout << "wrote " << spec.out_dir << "/grid.csv\n";
      }
    } else if (verify->parsed()) {
      const auto results = vicop::run_registered_checks(verify_seed);
      bool all = true;
      for (const auto& r : results) {
        std::cout << (r.pass ? "[PASS] " : "[FAIL] ") << r.name
                  << "  max_rel_err=" << r.max_rel_err << "\n";
        all = all && r.pass;
      }
      std::ofstream out(report_path);
      out << vicop::checks_report_json(results);
      std::cout << "wrote " << report_path << "\n";
      return all ? 0 : 1;
    } else if (exp->parsed()) {
      vicop::reexport_bundle(bundle_dir, export_out);
      std::cout << "wrote " << export_out << "\n";
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
