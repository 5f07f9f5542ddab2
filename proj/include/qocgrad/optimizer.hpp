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

#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "qocgrad/objective.hpp"

namespace qoc {

struct OptimizerConfig {
  double eta = 0.04;
  int k_max = 2000;
  /// Per-coordinate standard deviation r of the Gaussian perturbation.
  double noise_std = 0.0;
  /// First-order target: stop once ||g|| < eps.
  double eps = 1e-3;
  std::uint64_t seed = 1;
  /// Hessian-Lipschitz constant for the second-order test; <= 0 selects
  /// default_hessian_lipschitz(spec).
  double hessian_lipschitz = 0.0;
  double failure_probability = 0.1;
  /// Accept eta >= 1/L with a warning instead of refusing.
  bool allow_large_eta = false;

  /// Returns warnings; throws InputError on invalid fields, or when eta >= 1/L
  /// and allow_large_eta is false.
  std::vector<std::string> validate(const ObjectiveSpec& spec) const;
};

/// Objective value and gradient estimate at one control.
struct ProviderResult {
  double value = 0.0;
  GradientEstimate gradient;
};

using GradientProvider = std::function<ProviderResult(const ControlGrid&)>;

GradientProvider make_adjoint_provider(const ObjectiveSpec& spec);
GradientProvider make_fd_provider(const ObjectiveSpec& spec, double h = 1e-4);

struct IterateRecord {
  int k = 0;
  RealVector u;
  double objective = 0.0;
  /// ||g_k|| of the provider's estimate.
  double grad_norm = 0.0;
  /// ||grad J(u_k)|| from the adjoint.
  double true_grad_norm = 0.0;
  /// ||g_k - grad J(u_k)||; empty when no ground truth was recorded.
  std::optional<double> error_norm;
  /// ||zeta_k|| of the perturbation applied after this record (0 for the last one).
  double noise_norm = 0.0;
  double ascent_slack = 0.0;
  double l1_norm = 0.0;
};

enum class Termination { kFirstOrder, kMaxIterations, kDiverged };

std::string to_string(Termination reason);

struct IterateTrace {
  std::vector<IterateRecord> records;
  Termination termination = Termination::kMaxIterations;
  std::vector<std::string> warnings;
  double eta = 0.0;
};

/// Perturbed gradient ascent u_{k+1} = u_k + eta (g_k + zeta_k) until
/// ||g_k|| < eps or k_max updates. Ground-truth adjoint gradients are recorded
/// alongside every provider estimate so the ascent inequality can be audited.
IterateTrace ascend(const ObjectiveSpec& spec, const ControlGrid& u0, const OptimizerConfig& config,
                    const GradientProvider& provider);

/// ||g|| < eps (strict).
bool check_first_order(const GradientEstimate& g, double eps);

struct SecondOrderCertificate {
  bool satisfied = false;
  double largest_eigenvalue = 0.0;
  double threshold = 0.0;
};

/// Largest eigenvalue of the symmetric Hessian against sqrt(rho eps). Refuses
/// matrices larger than 65 x 65.
SecondOrderCertificate check_second_order(const Eigen::MatrixXd& hessian, double rho, double eps);

struct AscentReport {
  std::vector<double> slack;
  std::vector<bool> holds;
  /// Slack of the eps-budget form J_k >= J_0 + eta/2 sum ||grad||^2 - k eta eps^2 / 4.
  std::vector<double> eps_form_slack;
  int violations = 0;
  bool all_hold() const { return violations == 0; }
};

/// Re-derives J_k - [J_0 + eta/2 sum ||grad J_j||^2 - eta sum ||zeta_j||^2 -
/// eta sum ||e_j||^2] for every record. Throws InputError when a record has no
/// gradient-error entry.
AscentReport ascent_property_check(const IterateTrace& trace, double eta, double eps);

/// ceil(4 L (J* - J0) / eps^2 * log(1/nu)).
long long iteration_bound(double lipschitz, double j_star, double j0, double eps, double nu);

/// `k,J,grad_norm,noise_norm,ascent_slack`.
void write_trace_csv(std::ostream& out, const IterateTrace& trace);

}  // namespace qoc
