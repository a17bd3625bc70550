#include <cstdio>
#include <exception>
#include <string>

#include "CLI11.hpp"
#include "hypokfem/experiments.hpp"

int main(int argc, char** argv) {
  std::string names;
  for (const std::string& n : hypokfem::experiment_names()) {
    if (!names.empty()) names += ", ";
    names += n;
  }

  CLI::App app{"hypocoercive Kolmogorov finite element experiments"};
  app.set_version_flag("--version", std::string(hypokfem::kVersion));
  std::string experiment, config_path, out_dir;
  bool check = false, expensive = false;
  app.add_option("experiment", experiment, "one of: " + names)->required();
  app.add_option("--config", config_path, "flat key=value config file");
  app.add_flag("--check", check,
               "evaluate the experiment's acceptance properties; exit "
               "nonzero when one fails");
  app.add_flag("--expensive", expensive,
               "include the full-size meshes (h^-1 = 64 convergence rows, "
               "h^-1 = 90 control meshes)");
  app.add_option("--out", out_dir, "output directory (default: out)");
  CLI11_PARSE(app, argc, argv);

  try {
    hypokfem::ExperimentConfig cfg;
    if (!config_path.empty()) hypokfem::load_config_file(cfg, config_path);
    cfg.experiment = experiment;
    cfg.check = check;
    cfg.expensive = expensive;
    if (!out_dir.empty()) cfg.out_dir = out_dir;
    const int rc = hypokfem::run_experiment(cfg);
    if (check && experiment != "check-all")
      std::printf("%s: check %s\n", experiment.c_str(),
                  rc == 0 ? "passed" : "failed (see manifest notes)");
    return rc;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
}
