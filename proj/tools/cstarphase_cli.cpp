// Copyright 2026 the cstarphase authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Command-line driver: load an experiment config, run it, and write the
// CSV/JSON report.  Exit codes: 0 = all checks passed, 1 = an invariant
// check failed (report files are still written) or a runtime error occurred,
// 2 = the config was rejected before any computation started.

#include <chrono>
#include <cstdint>
#include <exception>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "experiments.hpp"

namespace {

void print_checks(const cstar::tools::ExperimentReport& rep, bool verbose) {
  int failed = 0;
  for (const auto& c : rep.checks) {
    if (!c.pass) ++failed;
    if (verbose || !c.pass) {
      std::cout << (c.pass ? "    ok: " : "  FAIL: ") << c.name << "  (value "
                << cstar::fmt17(c.value) << ", tolerance "
                << cstar::fmt17(c.tolerance) << ")\n";
    }
  }
  std::cout << rep.experiment << ": " << (rep.checks.size() - failed) << "/"
            << rep.checks.size() << " checks passed\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"cstarphase: eigen-sections, transport generators, curvature "
               "data, and adiabatic holonomy for bipartite quantum models"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::string> out_flag;
  std::optional<std::uint64_t> seed_flag;
  std::optional<int> workers_flag;
  bool verbose = false;

  CLI::App* run = app.add_subcommand("run", "run one experiment config");
  run->add_option("config", config_path, "path to a json experiment config")
      ->required();
  run->add_option("--out", out_flag,
                  "output directory (overrides CSTARPHASE_OUT_DIR and the "
                  "config's \"out\")");
  run->add_option("--seed", seed_flag, "override the config's rng seed");
  run->add_option("--workers", workers_flag,
                  "override the config's worker count");
  run->add_flag("--verbose", verbose, "print every check and progress lines");

  CLI11_PARSE(app, argc, argv);

  cstar::tools::ExperimentConfig cfg;
  try {
    cfg = cstar::tools::load_config(config_path);
    if (seed_flag) cfg.seed = *seed_flag;
    if (workers_flag) {
      if (*workers_flag < 1) {
        throw cstar::tools::ConfigError("--workers must be >= 1");
      }
      cfg.workers = *workers_flag;
    }
  } catch (const cstar::tools::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  }

  try {
    const auto t0 = std::chrono::steady_clock::now();
    const cstar::tools::ExperimentReport rep =
        cstar::tools::run_experiment(cfg, verbose);
    const double wall =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
            .count();

    const std::string out_dir = cstar::tools::resolve_out_dir(out_flag, cfg);
    const auto written = cstar::tools::emit_report(rep, out_dir, wall);
    print_checks(rep, verbose);
    for (const auto& path : written) {
      std::cout << "wrote " << path << "\n";
    }
    return rep.pass() ? 0 : 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
