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

// Small models shared by the unit and acceptance tests.

#pragma once

#include <random>

#include "qocgrad/objective.hpp"

namespace testing_models {

using namespace qoc;

inline SparseHermitianOperator sigma_x() { return SparseHermitianOperator(2, CooStorage{{{0, 1, 1.0}, {1, 0, 1.0}}}); }

inline SparseHermitianOperator sigma_z() {
  RealVector d(2);
  d << 1.0, -1.0;
  return SparseHermitianOperator::diagonal(d);
}

/// H0 = 0, mu = sigma_x, O = sigma_z, psi0 = |0>: J1 = cos(2 theta) with
/// theta = delta (u_0/2 + u_1 + ... + u_{N-1} + u_N/2).
inline ObjectiveSpec two_level_spec(double horizon, int steps, double alpha = 0.0) {
  return ObjectiveSpec(SparseHermitianOperator::zero(2), sigma_x(), sigma_z(), alpha, horizon, steps,
                       QuantumState::basis(2, 0));
}

inline ObjectiveSpec random_spec(Eigen::Index dimension, double horizon, int steps, double alpha,
                                 std::uint64_t seed, PropagatorConfig propagator = {}) {
  return ObjectiveSpec(random_hermitian(dimension, seed), random_hermitian(dimension, seed + 1),
                       random_hermitian(dimension, seed + 2), alpha, horizon, steps,
                       random_state(dimension, seed + 3), propagator);
}

inline RealVector uniform_control(int steps, double scale, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> uni(-scale, scale);
  RealVector u(steps + 1);
  for (int j = 0; j <= steps; ++j) u(j) = uni(rng);
  return u;
}

}  // namespace testing_models
