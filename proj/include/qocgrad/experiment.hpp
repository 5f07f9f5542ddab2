// Copyright 2026 The qocgrad Authors
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

// Experiment configuration and the command implementations behind the
// `qocgrad` executable. Every command writes CSV artifacts under the
// configured output directory and returns a process exit code.

#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "qocgrad/objective.hpp"
#include "qocgrad/optimizer.hpp"
#include "qocgrad/qgrad.hpp"

namespace qoc {

/// Exit codes shared by every command.
enum ExitCode : int { kExitOk = 0, kExitCheckFailed = 1, kExitConfigError = 2, kExitDiverged = 3 };

struct ModelSection {
  /// "example", "random" or "file".
  std::string kind = "example";
  ExampleModelParams example;
  /// Dimension and seed of the "random" model.
  Eigen::Index random_dimension = 8;
  std::uint64_t random_seed = 11;
  /// JSON operator file of the "file" model.
  std::string file;
  /// "gaussian", "basis", "random" or "file" (psi0 of the model file).
  std::string initial_state = "gaussian";
  double initial_center = 2.0;
  double initial_width = 1.0;
  Eigen::Index initial_basis_index = 0;
};

struct GridSection {
  double horizon = 5.0;
  /// Explicit N; 0 derives it from `delta`, or from `eps` when eps > 0.
  int steps = 0;
  double delta = 0.02;
  double eps = 0.0;
  bool smooth = false;
  double step_constant = 1.0;
};

struct ObjectiveSection {
  /// Empty selects alpha = 4/T.
  std::optional<double> alpha;
};

struct GradientSection {
  /// "adjoint", "fd" or "jordan_sim".
  std::string provider = "adjoint";
  double fd_step = 1e-4;
};

struct GradcheckSection {
  Eigen::Index dimension = 8;
  int steps = 10;
  double horizon = 1.0;
  double alpha = 2.0;
  int samples = 20;
  double h = 1e-4;
  double control_scale = 1.0;
  std::uint64_t seed = 3;
  bool zero_mu = false;
  /// Test hook: negate the adjoint gradient before comparison.
  bool inject_sign_flip = false;
};

struct ScalingSection {
  double horizon = 1.0;
  int base_steps = 8;
  int doublings = 4;
  Eigen::Index dimension = 8;
  std::uint64_t seed = 5;
  double control_amplitude = 1.0;
  double dyson_base_delta = 0.5;
  int dyson_quadrature_points = 64;
  std::vector<int> dyson_orders{1, 2, 3};
};

struct QgradSection {
  int bits = 9;
  int difference_order = 1;
  double probe_radius = 1e-2;
  int shots = 16;
  int repeats = 100;
  double phase_eps = 0.1;
  std::uint64_t seed = 17;
  /// Reduced model of the QOC test.
  Eigen::Index dimension = 4;
  int steps = 8;
  double horizon = 4.0;
  double control_amplitude = 0.5;
  std::vector<int> coordinates{1, 2};
  /// Integer register readings of the linear test gradient.
  std::vector<int> linear_readings{5, -3};
  double linear_threshold = 0.99;
  double qoc_threshold = 2.0 / 3.0;
};

struct SimulateSection {
  /// "zero", "constant" or "sine".
  std::string control = "sine";
  double amplitude = 0.5;
  double frequency = 1.0;
};

struct ExperimentConfig {
  ModelSection model;
  GridSection grid;
  ObjectiveSection objective;
  PropagatorConfig propagator;
  OptimizerConfig optimizer;
  /// True when the optimizer eta was given as "auto": eta = 1/(2L).
  bool eta_auto = false;
  GradientSection gradient;
  JordanProviderConfig jordan;
  GradcheckSection gradcheck;
  ScalingSection scaling;
  QgradSection qgrad;
  SimulateSection simulate;
  std::string output_directory = "out";
};

/// Parses a JSON document (a missing section keeps its defaults). Unknown
/// sections or keys and wrongly typed values raise InputError.
ExperimentConfig parse_config(const std::string& json_text);

/// Reads `path` (empty means defaults), applies `section.key=value` overrides
/// (value parsed as JSON, falling back to a string) and parses the result.
ExperimentConfig load_config(const std::string& path, const std::vector<std::string>& overrides);

/// The configured model as an ObjectiveSpec.
ObjectiveSpec build_spec(const ExperimentConfig& config);

/// Number of time steps selected by the grid section.
int resolve_steps(const GridSection& grid);

int cmd_optimize(const ExperimentConfig& config, std::ostream& log);
int cmd_gradcheck(const ExperimentConfig& config, std::ostream& log);
int cmd_scaling(const ExperimentConfig& config, std::ostream& log);
int cmd_qgrad(const ExperimentConfig& config, std::ostream& log);
int cmd_simulate(const ExperimentConfig& config, std::ostream& log);

/// Least-squares slope of log(error) against log(delta).
double loglog_slope(const std::vector<double>& delta, const std::vector<double>& error);

struct ScalingStudy {
  std::string name;
  std::vector<double> delta;
  std::vector<double> error;
  double slope = 0.0;
  double threshold_low = 0.0;
  /// Upper slope limit; infinity when only a lower bound applies.
  double threshold_high = 0.0;
  bool passed() const { return slope >= threshold_low && slope <= threshold_high; }
};

/// Interpolation, quadrature, midpoint-propagator and Dyson local-error studies.
std::vector<ScalingStudy> run_scaling_studies(const ScalingSection& section);

struct QgradStatistic {
  std::string test;
  int repeats = 0;
  int successes = 0;
  double threshold = 0.0;
  double cell_width = 0.0;
  /// Largest |component| of the target gradient, for judging the resolution.
  double gradient_scale = 0.0;
  long long phase_calls = 0;
  long long oracle_calls = 0;
  double rate() const { return repeats > 0 ? static_cast<double>(successes) / repeats : 0.0; }
  bool passed() const { return rate() >= threshold; }
};

/// Linear-function exactness test and the reduced-model test of Jordan's estimator.
std::vector<QgradStatistic> run_qgrad_suite(const QgradSection& section);

}  // namespace qoc
