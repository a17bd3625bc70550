#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "hypokfem/assembly.hpp"

namespace hypokfem {

inline constexpr const char* kVersion = "0.1.0";

// Flat key=value run configuration shared by every experiment. Defaults
// reproduce the baseline setup: domain (-1,1)^2, eps = 0.1, m = 0.35,
// C_sigma = 10. alpha = 0 means "use the experiment's own default" (1 for
// oc-convergence, 1e-3 for m-sweep and box-control, 1e-2 for
// timedep-control). The n and r lists drive the convergence studies; the
// snapshot experiments (alpha-sweep, m-sweep, box-control) run on a single
// mesh: the last n entry when n was set explicitly, otherwise 24
// (90 with --expensive), and timedep-control uses 16.
struct ExperimentConfig {
  std::string experiment;
  std::vector<int> n_list{4, 8, 16, 32};
  std::vector<int> r_list{2, 3, 4};
  double eps = 0.1;
  double m = 0.35;
  double c_sigma = 10.0;
  double alpha = 0.0;
  std::vector<double> alpha_list{1e-1, 1e-2, 1e-3, 1e-4};
  double omega = 1e-3;
  double kappa = 1.0;
  double tol = 1e-10;
  double t_final = 1.0;
  int k_steps = 32;
  std::string out_dir = "out";
  bool expensive = false;
  bool check = false;
  bool n_set = false;  // true once the config supplied an explicit n

  // scalar parameters bundled for assembly; alpha falls back to fallback
  // when the config leaves it at 0
  HParams params(double alpha_fallback = 1.0) const;

  // sorted key=value serialisation of everything that affects output
  std::string canonical() const;
  // 16-hex-digit FNV-1a hash of canonical(); stamped into every output file
  std::string hash() const;
};

// Recognised keys: n, r (comma lists), eps, m, c_sigma, alpha, alpha_list,
// omega, kappa, tol, T, K, out. Throws std::invalid_argument on unknown
// keys or malformed values.
void set_config_value(ExperimentConfig& cfg, const std::string& key,
                      const std::string& value);

// Reads a flat key=value file; '#' starts a comment, blank lines skipped.
void load_config_file(ExperimentConfig& cfg, const std::string& path);

// Experiment registry, in documentation order.
std::vector<std::string> experiment_names();

// Runs cfg.experiment, writing CSV/VTK artifacts and a manifest under
// cfg.out_dir. Returns 0 on success, 1 when --check found a violated
// acceptance property. Throws std::invalid_argument for unknown experiment
// names or bad parameters.
int run_experiment(const ExperimentConfig& cfg);

// One acceptance criterion verdict; skipped marks checks that do not apply
// to the configuration (non-hypocoercive mode m = 0).
struct CheckResult {
  std::string name;
  bool passed = false;
  bool skipped = false;
  double seconds = 0;
  std::string detail;
};

// The nine acceptance checks, in criterion order. Exceptions inside a
// check become failed verdicts, not errors.
std::vector<CheckResult> run_acceptance_checks(const ExperimentConfig& cfg);

// Renders "criterion k <name>: PASS/FAIL/SKIP (detail)" lines; returns the
// number of failures.
int print_check_report(const std::vector<CheckResult>& results);

}  // namespace hypokfem
