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

#include <string>

#include "qocgrad/control.hpp"
#include "qocgrad/dynamics.hpp"
#include "qocgrad/operators.hpp"

namespace qoc {

/// Everything that defines the discrete objective
///   J(u) = <psi_N|O|psi_N> - alpha delta sum_j w_j u_j^2.
class ObjectiveSpec {
 public:
  static constexpr double kNormTolerance = 1e-8;

  /// Checks matching dimensions, alpha >= 0, a valid propagator config and
  /// spectral norms of H0, mu, O at most 1 + kNormTolerance.
  ObjectiveSpec(SparseHermitianOperator h0, SparseHermitianOperator mu, SparseHermitianOperator observable,
                double alpha, double horizon, int steps, QuantumState psi0, PropagatorConfig propagator = {});

  const SparseHermitianOperator& h0() const { return h0_; }
  const SparseHermitianOperator& mu() const { return mu_; }
  const SparseHermitianOperator& observable() const { return observable_; }
  double alpha() const { return alpha_; }
  double horizon() const { return horizon_; }
  int steps() const { return steps_; }
  double delta() const { return horizon_ / steps_; }
  const QuantumState& psi0() const { return psi0_; }
  const PropagatorConfig& propagator() const { return propagator_; }

  double h0_norm() const { return h0_norm_; }
  double mu_norm() const { return mu_norm_; }
  double observable_norm() const { return observable_norm_; }

  /// alpha >= 2/T, the regime where the a-priori L1 bound on iterates holds.
  bool alpha_meets_l1_condition() const { return alpha_ >= 2.0 / horizon_; }

  /// u = 0 on this spec's grid.
  ControlGrid zero_control() const { return ControlGrid(horizon_, steps_); }
  /// Throws InputError when `u` lives on a different grid.
  void require_grid(const ControlGrid& u) const;

  ObjectiveSpec with_propagator(PropagatorConfig config) const;
  ObjectiveSpec with_alpha(double alpha) const;

 private:
  SparseHermitianOperator h0_;
  SparseHermitianOperator mu_;
  SparseHermitianOperator observable_;
  double alpha_;
  double horizon_;
  int steps_;
  QuantumState psi0_;
  PropagatorConfig propagator_;
  double h0_norm_ = 0.0;
  double mu_norm_ = 0.0;
  double observable_norm_ = 0.0;
};

enum class GradientProvenance { kAdjoint, kFiniteDifference, kJordanSim };

std::string to_string(GradientProvenance provenance);

struct GradientEstimate {
  RealVector values;
  GradientProvenance provenance = GradientProvenance::kAdjoint;
  /// A-priori bound on the per-component error of `values`.
  double error_bound = 0.0;
};

/// <psi_N|O|psi_N>.
double evaluate_j1(const ObjectiveSpec& spec, const ControlGrid& u);
/// alpha delta sum_j w_j u_j^2.
double evaluate_j2(const ObjectiveSpec& spec, const ControlGrid& u);
/// J1 - J2.
double evaluate(const ObjectiveSpec& spec, const ControlGrid& u);

struct ValueAndGradient {
  double value = 0.0;
  double j1 = 0.0;
  GradientEstimate gradient;
};

/// Exact gradient of the discrete J1 by the discrete adjoint of the midpoint
/// rule: one forward pass, then a backward costate sweep that differentiates
/// every sub-step exponential through the hat-function weights.
ValueAndGradient value_and_gradient_j1(const ObjectiveSpec& spec, const ControlGrid& u);

/// Full objective value and adjoint gradient, J2 part in closed form.
ValueAndGradient value_and_gradient(const ObjectiveSpec& spec, const ControlGrid& u);

GradientEstimate gradient_adjoint(const ObjectiveSpec& spec, const ControlGrid& u);

/// Central differences of evaluate(), one coordinate at a time.
GradientEstimate gradient_fd(const ObjectiveSpec& spec, const ControlGrid& u, double h = 1e-4);

/// d J2 / d u_j = 2 alpha delta w_j u_j.
RealVector penalty_gradient(const ObjectiveSpec& spec, const ControlGrid& u);

struct HessianEstimate {
  Eigen::MatrixXd matrix;  // symmetrized
  double max_asymmetry = 0.0;
};

/// Central differences of the adjoint gradient; refuses N > 64.
HessianEstimate hessian_fd(const ObjectiveSpec& spec, const ControlGrid& u, double h = 1e-4);

/// (k+1)! (delta ||mu||)^k, the bound on any k-th partial derivative of J1.
double derivative_bound(int k, double delta, double mu_norm);

/// T delta ||mu||^2 + 2 alpha delta.
double lipschitz_bound(const ObjectiveSpec& spec);

/// Default Hessian-Lipschitz constant for the second-order test: 4! (delta ||mu||)^3 / delta.
double default_hessian_lipschitz(const ObjectiveSpec& spec);

}  // namespace qoc
