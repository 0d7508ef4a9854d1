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

#ifndef CSTARPHASE_TOOLS_EXPERIMENTS_HPP_
#define CSTARPHASE_TOOLS_EXPERIMENTS_HPP_

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "cstarphase/io.hpp"
#include "cstarphase/qubit_model.hpp"

namespace cstar::tools {

// Any defect detectable before computation starts: unreadable or unparsable
// config, schema violations, unknown experiment/preset names, out-of-range
// parameters.  The CLI maps this to exit code 2 and writes no output files.
struct ConfigError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Control-parameter evolution requested by the config.
struct PathSpec {
  std::string kind;  // "circle" | "segment" | "waypoints"
  RealVector center; // circle
  double radius = 0.0;
  int axis_a = 0, axis_b = 2;
  bool clockwise = false;
  RealVector from, to;             // segment
  std::vector<RealVector> points;  // waypoints (resampled cubically)
  double duration = 0.0;
  int samples = 0;
  int substeps = 10;
};

// Sample grid requested by the config (1-3 varied axes).
struct GridSpec {
  RealVector origin;
  std::vector<int> axes;
  std::vector<int> dims;
  RealVector spacing;
};

// System under study.  "qubit-phase-damping" is the registered preset; a
// "rotation" system supplies the frozen universe Hamiltonian and seed
// operator explicitly and reuses the same x -> U(x) = exp(i x.sigma)
// parameterization (closed-form cross-checks are preset-only).
struct SystemSpec {
  std::string kind = "qubit-phase-damping";  // or "rotation"
  QubitModelParams params;
  ComplexMatrix h0;  // rotation systems: 4x4 Hermitian universe Hamiltonian
  ComplexMatrix e0;  // rotation systems: 2x2 Hermitian seed at x = 0
  int branch = 3;    // rotation systems: spectrum branch tracked from x0
};

struct ExperimentConfig {
  std::string experiment;  // eigen-validate | generator | curvature |
                           // transport | atlas-cocycle | sweep
  SystemSpec system;
  std::optional<PathSpec> path;
  std::optional<GridSpec> grid;
  std::uint64_t seed = 0;
  int workers = 1;
  int samples = 100;                 // eigen-validate draw count
  bool sampled_pullback = false;     // transport: difference the section
                                     // instead of using exact one-forms
  bool sheared_transitions = false;  // atlas-cocycle: non-scalar transitions
  std::vector<double> sweep_values;  // sweep: loop durations
  std::string out_dir;               // config-level output directory
  std::map<std::string, double> tolerances;  // overrides, see defaults()

  // Effective tolerance for a named budget ("trace", "fd", ...).
  double tol(const std::string& key) const;
};

// Parse + validate.  Throws ConfigError on any schema or range violation;
// nothing is computed and no files are touched on the error path.
ExperimentConfig parse_config(const Json& j);
ExperimentConfig load_config(const std::string& path);

// Resolved output directory: flag > CSTARPHASE_OUT_DIR > config > ".".
std::string resolve_out_dir(const std::optional<std::string>& flag,
                            const ExperimentConfig& cfg);

// One validated invariant.  `pass` is direction-aware (order checks pass
// when value >= tolerance; everything else when value <= tolerance).
struct CheckResult {
  std::string name;
  double value = 0.0;
  double tolerance = 0.0;
  bool pass = false;
};

struct ExperimentReport {
  std::string experiment;
  Json params;     // resolved configuration echo
  CsvTable table;  // empty rows -> no CSV file is emitted
  std::vector<CheckResult> checks;
  std::map<std::string, double> extra;  // informational residuals
  bool pass() const;
};

// Run one experiment.  Throws std::exception subclasses on runtime failures
// (e.g. integrator refinement demands); invariant violations do not throw —
// they are recorded as failed checks.
ExperimentReport run_experiment(const ExperimentConfig& cfg,
                                bool verbose = false);

// Write <experiment>.csv (when the table has rows) and
// <experiment>.summary.json into out_dir, creating it if needed.  Returns
// the paths written.  Timestamps appear only in the JSON summary, so CSV
// bodies are byte-identical across reruns.
std::vector<std::string> emit_report(const ExperimentReport& rep,
                                     const std::string& out_dir,
                                     double wall_time_s);

}  // namespace cstar::tools

#endif  // CSTARPHASE_TOOLS_EXPERIMENTS_HPP_
