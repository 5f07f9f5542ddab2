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

#include "qocgrad/control.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <sstream>

#include "qocgrad/csv.hpp"

namespace qoc {

ControlGrid::ControlGrid(double horizon, int steps, RealVector nodal_values)
    : horizon_(horizon), steps_(steps), values_(std::move(nodal_values)) {
  if (!(horizon_ > 0.0) || !std::isfinite(horizon_)) throw InputError("ControlGrid: horizon must be positive");
  if (steps_ < 1) throw InputError("ControlGrid: need at least one interval");
  if (values_.size() != steps_ + 1) {
    std::ostringstream msg;
    msg << "ControlGrid: expected " << steps_ + 1 << " nodal values, got " << values_.size();
    throw InputError(msg.str());
  }
  if (!values_.allFinite()) throw InputError("ControlGrid: non-finite nodal value");
}

ControlGrid::ControlGrid(double horizon, int steps)
    : ControlGrid(horizon, steps, RealVector::Zero(std::max(steps, 0) + 1)) {}

ControlGrid ControlGrid::sampled(double horizon, int steps, const std::function<double(double)>& u) {
  if (steps < 1) throw InputError("ControlGrid: need at least one interval");
  RealVector v(steps + 1);
  for (int j = 0; j <= steps; ++j) v(j) = u(horizon * j / steps);
  return ControlGrid(horizon, steps, std::move(v));
}

ControlGrid ControlGrid::with_values(RealVector values) const {
  return ControlGrid(horizon_, steps_, std::move(values));
}

double interpolate(const ControlGrid& grid, double t) {
  const double T = grid.horizon();
  if (!(t >= 0.0 && t <= T)) {
    std::ostringstream msg;
    msg << "interpolate: t=" << t << " outside [0, " << T << "]";
    throw InputError(msg.str());
  }
  const double s = t / grid.delta();
  const int j = std::min(static_cast<int>(std::floor(s)), grid.steps() - 1);
  const double theta = s - j;
  const auto& u = grid.values();
  return (1.0 - theta) * u(j) + theta * u(j + 1);
}

RealVector trapezoid_weights(int steps) {
  if (steps < 1) throw InputError("trapezoid_weights: need at least one interval");
  RealVector w = RealVector::Ones(steps + 1);
  w(0) = 0.5;
  w(steps) = 0.5;
  return w;
}

double quadrature_penalty(const ControlGrid& grid, double alpha) {
  if (!(alpha >= 0.0)) throw InputError("quadrature_penalty: alpha must be non-negative");
  const RealVector w = trapezoid_weights(grid.steps());
  return alpha * grid.delta() * (w.array() * grid.values().array().square()).sum();
}

double interpolation_error_norm(const std::function<double(double)>& u_exact, const ControlGrid& grid,
                                int points_per_interval) {
  if (points_per_interval < 32 || points_per_interval % 2 != 0) {
    throw InputError("interpolation_error_norm: need an even sub-grid of at least 32 points");
  }
  const double delta = grid.delta();
  const double h = delta / points_per_interval;
  const auto& u = grid.values();
  double total = 0.0;
  for (int j = 0; j < grid.steps(); ++j) {
    const double t0 = grid.node_time(j);
    auto err2 = [&](int k) {
      const double theta = static_cast<double>(k) / points_per_interval;
      const double ui = (1.0 - theta) * u(j) + theta * u(j + 1);
      const double e = u_exact(t0 + k * h) - ui;
      return e * e;
    };
    double sum = err2(0) + err2(points_per_interval);
    for (int k = 1; k < points_per_interval; ++k) sum += (k % 2 ? 4.0 : 2.0) * err2(k);
    total += sum * h / 3.0;
  }
  return std::sqrt(total);
}

double l1_norm(const ControlGrid& grid) {
  const double delta = grid.delta();
  const auto& u = grid.values();
  double total = 0.0;
  for (int j = 0; j < grid.steps(); ++j) {
    const double a = u(j), b = u(j + 1);
    if (a * b >= 0.0) {
      total += 0.5 * delta * std::abs(a + b);
    } else {
      // Sign change inside the interval: two triangles meeting at the root.
      total += 0.5 * delta * (a * a + b * b) / (std::abs(a) + std::abs(b));
    }
  }
  return total;
}

double l2_norm_squared(const ControlGrid& grid) {
  const double delta = grid.delta();
  const auto& u = grid.values();
  double total = 0.0;
  for (int j = 0; j < grid.steps(); ++j) {
    const double a = u(j), b = u(j + 1);
    total += delta * (a * a + a * b + b * b) / 3.0;
  }
  return total;
}

int choose_num_steps(double horizon, double eps, bool smooth, double constant) {
  if (!(horizon > 0.0)) throw InputError("choose_num_steps: T must be positive");
  if (!(eps > 0.0 && eps < 1.0)) throw InputError("choose_num_steps: eps must lie in (0, 1)");
  if (!(constant > 0.0)) throw InputError("choose_num_steps: constant must be positive");
  double n = 0.0;
  if (!smooth) {
    n = constant * std::pow(horizon, 1.5) / std::sqrt(eps);
  } else {
    const double x = std::log(horizon / eps);
    const double loglog = x > 1.0 ? std::log(x) : 0.0;
    n = constant * horizon * x / std::max(1.0, loglog);
  }
  // Round-off guard so exact products such as 8/0.1 do not ceil to the next integer.
  const double rounded = std::ceil(n * (1.0 - 1e-12));
  return std::max(2, static_cast<int>(rounded));
}

void write_control_csv(std::ostream& out, const ControlGrid& grid) {
  out << "t,u\n";
  for (int j = 0; j <= grid.steps(); ++j) {
    out << format_double(grid.node_time(j)) << ',' << format_double(grid.values()(j)) << '\n';
  }
}

}  // namespace qoc
