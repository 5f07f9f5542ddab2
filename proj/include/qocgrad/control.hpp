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

#include <functional>
#include <iosfwd>

#include "qocgrad/operators.hpp"

namespace qoc {

/// Piecewise-linear control on a uniform grid t_j = j*delta, j = 0..N.
class ControlGrid {
 public:
  /// Throws InputError for T <= 0, N < 1, or non-finite nodal values.
  ControlGrid(double horizon, int steps, RealVector nodal_values);
  /// All nodal values zero.
  ControlGrid(double horizon, int steps);

  /// Samples `u` at the nodes.
  static ControlGrid sampled(double horizon, int steps, const std::function<double(double)>& u);

  double horizon() const { return horizon_; }
  int steps() const { return steps_; }
  double delta() const { return horizon_ / steps_; }
  double node_time(int j) const { return horizon_ * j / steps_; }
  const RealVector& values() const { return values_; }

  /// Same time grid, new nodal values.
  ControlGrid with_values(RealVector values) const;

 private:
  double horizon_;
  int steps_;
  RealVector values_;
};

/// Hat-function interpolant u_I(t); exact at the nodes. t outside [0, T] is an InputError.
double interpolate(const ControlGrid& grid, double t);

/// Composite trapezoid weights: 1/2 at both ends, 1 in the interior.
RealVector trapezoid_weights(int steps);

/// alpha * delta * sum_j w_j u_j^2.
double quadrature_penalty(const ControlGrid& grid, double alpha);

/// L2 norm of u_exact - u_I, integrated with composite Simpson on
/// `points_per_interval` (>= 32, even) sub-intervals of every grid interval.
double interpolation_error_norm(const std::function<double(double)>& u_exact, const ControlGrid& grid,
                                int points_per_interval = 64);

/// Exact integral of |u_I| (closed form per linear piece).
double l1_norm(const ControlGrid& grid);

/// Exact integral of u_I^2 (closed form per linear piece).
double l2_norm_squared(const ControlGrid& grid);

/// Step count from the accuracy target: ceil(c T^{3/2} / eps^{1/2}) for
/// piecewise-linear controls, ceil(c T log(T/eps) / max(1, log log(T/eps)))
/// for smooth ones. Never below 2.
int choose_num_steps(double horizon, double eps, bool smooth, double constant = 1.0);

/// Writes `t,u` rows, one per node, at 17 significant digits.
void write_control_csv(std::ostream& out, const ControlGrid& grid);

}  // namespace qoc
