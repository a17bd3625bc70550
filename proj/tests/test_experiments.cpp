#include "doctest.h"

#include <cctype>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "hypokfem/experiments.hpp"

using namespace hypokfem;

namespace {

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

}  // namespace

TEST_CASE("config values parse with validation") {
  ExperimentConfig cfg;
  CHECK_FALSE(cfg.n_set);
  set_config_value(cfg, "n", "4, 8,16");
  CHECK(cfg.n_list == std::vector<int>{4, 8, 16});
  CHECK(cfg.n_set);
  set_config_value(cfg, "r", "3");
  CHECK(cfg.r_list == std::vector<int>{3});
  set_config_value(cfg, "eps", "1e-4");
  CHECK(cfg.eps == 1e-4);
  set_config_value(cfg, "m", "0");
  CHECK(cfg.m == 0.0);
  set_config_value(cfg, "alpha_list", "1e-1,1e-5");
  CHECK(cfg.alpha_list == std::vector<double>{1e-1, 1e-5});
  set_config_value(cfg, "omega", "0.5");
  set_config_value(cfg, "kappa", "2");
  set_config_value(cfg, "tol", "1e-8");
  set_config_value(cfg, "T", "2.5");
  CHECK(cfg.t_final == 2.5);
  set_config_value(cfg, "K", "16");
  CHECK(cfg.k_steps == 16);
  set_config_value(cfg, "out", "results");
  CHECK(cfg.out_dir == "results");

  CHECK_THROWS_AS(set_config_value(cfg, "granularity", "3"),
                  std::invalid_argument);
  CHECK_THROWS_AS(set_config_value(cfg, "eps", "fast"), std::invalid_argument);
  CHECK_THROWS_AS(set_config_value(cfg, "eps", "1.0x"), std::invalid_argument);
  CHECK_THROWS_AS(set_config_value(cfg, "K", "2.5"), std::invalid_argument);
  CHECK_THROWS_AS(set_config_value(cfg, "r", "9"), std::invalid_argument);
  CHECK_THROWS_AS(set_config_value(cfg, "n", "0"), std::invalid_argument);
}

TEST_CASE("alpha falls back to the experiment default only when unset") {
  ExperimentConfig cfg;
  CHECK(cfg.params(1e-2).alpha == 1e-2);
  CHECK(cfg.params().alpha == 1.0);
  set_config_value(cfg, "alpha", "0.125");
  CHECK(cfg.params(1e-2).alpha == 0.125);
  // the remaining assembly parameters ride along
  set_config_value(cfg, "eps", "0.3");
  set_config_value(cfg, "m", "0.5");
  set_config_value(cfg, "c_sigma", "12");
  const HParams p = cfg.params();
  CHECK(p.eps == 0.3);
  CHECK(p.m == 0.5);
  CHECK(p.c_sigma == 12.0);
}

TEST_CASE("canonical form and hash are stable and sensitive") {
  ExperimentConfig a;
  a.experiment = "primal-convergence";
  ExperimentConfig b = a;
  CHECK(a.canonical() == b.canonical());
  CHECK(a.hash() == b.hash());
  CHECK(a.hash().size() == 16);
  for (char c : a.hash()) CHECK(std::isxdigit(static_cast<unsigned char>(c)));

  set_config_value(b, "eps", "0.2");
  CHECK(a.hash() != b.hash());

  // output directory and check mode do not perturb the science hash
  ExperimentConfig c = a;
  c.out_dir = "elsewhere";
  c.check = true;
  CHECK(a.hash() == c.hash());

  // keys appear sorted in the canonical form
  const std::string canon = a.canonical();
  CHECK(canon.find("eps=") != std::string::npos);
  CHECK(canon.find("experiment=primal-convergence") != std::string::npos);
  CHECK(canon.find("eps=") < canon.find("experiment="));
  CHECK(canon.find("alpha=") < canon.find("eps="));
}

TEST_CASE("config files parse with comments and line diagnostics") {
  const std::string path = "/tmp/hypokfem_config_test.cfg";
  {
    std::ofstream os(path);
    os << "# convergence sweep\n";
    os << "\n";
    os << "n = 4,8\n";
    os << "eps = 0.05   # thin diffusion\n";
    os << "r=2\n";
  }
  ExperimentConfig cfg;
  load_config_file(cfg, path);
  CHECK(cfg.n_list == std::vector<int>{4, 8});
  CHECK(cfg.eps == 0.05);
  CHECK(cfg.r_list == std::vector<int>{2});

  {
    std::ofstream os(path);
    os << "n = 4\n";
    os << "this line has no equals sign\n";
  }
  ExperimentConfig bad;
  try {
    load_config_file(bad, path);
    FAIL("expected a parse failure");
  } catch (const std::invalid_argument& e) {
    CHECK(std::string(e.what()).find(":2") != std::string::npos);
  }
  CHECK_THROWS_AS(load_config_file(bad, "/nonexistent/nowhere.cfg"),
                  std::invalid_argument);
  std::remove(path.c_str());
}

TEST_CASE("experiment registry") {
  const std::vector<std::string> names = experiment_names();
  CHECK(names.size() == 8);
  for (const char* expected :
       {"primal-convergence", "oc-convergence", "alpha-sweep", "m-sweep",
        "box-control", "timedep-control", "dump-mesh", "check-all"}) {
    bool found = false;
    for (const std::string& n : names) found = found || n == expected;
    CHECK_MESSAGE(found, expected);
  }
  ExperimentConfig cfg;
  cfg.experiment = "warp-drive";
  CHECK_THROWS_AS(run_experiment(cfg), std::invalid_argument);
}

TEST_CASE("runs are reproducible byte for byte") {
  namespace fs = std::filesystem;
  const fs::path dir1 = "/tmp/hypokfem_run1", dir2 = "/tmp/hypokfem_run2";
  fs::remove_all(dir1);
  fs::remove_all(dir2);

  ExperimentConfig cfg;
  cfg.experiment = "dump-mesh";
  set_config_value(cfg, "n", "2,4");
  cfg.out_dir = dir1.string();
  CHECK(run_experiment(cfg) == 0);
  cfg.out_dir = dir2.string();
  CHECK(run_experiment(cfg) == 0);

  for (const char* name :
       {"mesh-n2.csv", "mesh-n4.csv", "dump-mesh.manifest.txt"}) {
    CAPTURE(name);
    REQUIRE(fs::exists(dir1 / name));
    std::string c1 = slurp(dir1 / name), c2 = slurp(dir2 / name);
    // the manifest records the out directory; normalise it away
    if (std::string(name).find("manifest") != std::string::npos) {
      const std::string k1 = "out=" + dir1.string(),
                        k2 = "out=" + dir2.string();
      const auto pos = c2.find(k2);
      REQUIRE(pos != std::string::npos);
      c2 = c2.substr(0, pos) + k1 + c2.substr(pos + k2.size());
    }
    CHECK(c1 == c2);
  }

  // every artifact leads with the version and the config hash
  const std::string csv = slurp(dir1 / "mesh-n2.csv");
  CHECK(csv.rfind("# hypokfem 0.1.0", 0) == 0);
  CHECK(csv.find(cfg.hash()) != std::string::npos);
  const std::string manifest = slurp(dir1 / "dump-mesh.manifest.txt");
  CHECK(manifest.find(cfg.hash()) != std::string::npos);
  CHECK(manifest.find("artifact=mesh-n2.csv") != std::string::npos);

  fs::remove_all(dir1);
  fs::remove_all(dir2);
}
