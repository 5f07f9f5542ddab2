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
#include <cmath>
#include <random>

#include "doctest.h"
#include "models.hpp"
#include "oracles.hpp"
#include "qocgrad/objective.hpp"

using namespace qoc;
using testing_models::random_spec;
using testing_models::two_level_spec;
using testing_models::uniform_control;

namespace {

double theta_of(const ControlGrid& u) {
  const RealVector w = trapezoid_weights(u.steps());
  return u.delta() * w.dot(u.values());
}

ObjectiveSpec identity_observable_spec(double alpha, double horizon, int steps) {
  return ObjectiveSpec(random_hermitian(4, 1), random_hermitian(4, 2), SparseHermitianOperator::identity(4), alpha,
                       horizon, steps, random_state(4, 3));
}

}  // namespace

TEST_CASE("objective spec validation") {
  CHECK_THROWS_AS(ObjectiveSpec(SparseHermitianOperator::zero(2), SparseHermitianOperator::zero(3),
                                SparseHermitianOperator::zero(2), 0.0, 1.0, 2, QuantumState::basis(2, 0)),
                  InputError);
  CHECK_THROWS_AS(ObjectiveSpec(SparseHermitianOperator::zero(2), SparseHermitianOperator::zero(2),
                                SparseHermitianOperator::zero(2), -1.0, 1.0, 2, QuantumState::basis(2, 0)),
                  InputError);
  RealVector big(2);
  big << 1.5, 0.0;
  CHECK_THROWS_AS(ObjectiveSpec(SparseHermitianOperator::diagonal(big), SparseHermitianOperator::zero(2),
                                SparseHermitianOperator::zero(2), 0.0, 1.0, 2, QuantumState::basis(2, 0)),
                  InputError);
  const auto spec = two_level_spec(2.0, 4, 1.0);
  CHECK(spec.alpha_meets_l1_condition());
  CHECK_FALSE(spec.with_alpha(0.5).alpha_meets_l1_condition());
  CHECK_THROWS_AS(evaluate(spec, ControlGrid(2.0, 5)), InputError);
  CHECK_THROWS_AS(evaluate(spec, ControlGrid(3.0, 4)), InputError);
}

TEST_CASE("objective values") {
  const auto id = identity_observable_spec(0.3, 2.0, 6);
  std::mt19937_64 rng(4);
  const ControlGrid random_u(2.0, 6, uniform_control(6, 1.0, rng));
  CHECK(evaluate_j1(id, random_u) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(evaluate(id, id.zero_control()) == doctest::Approx(1.0).epsilon(1e-12));
  const auto ones = ControlGrid::sampled(2.0, 6, [](double) { return 1.0; });
  CHECK(evaluate(id, ones) == doctest::Approx(1.0 - 0.3 * 2.0).epsilon(1e-12));
  CHECK(evaluate_j2(id, id.zero_control()) == 0.0);

  // Commuting drift and observable conserve the expectation at u = 0.
  RealVector h(3), o(3);
  h << 0.1, -0.7, 0.4;
  o << 0.9, 0.2, -0.5;
  const ObjectiveSpec diag(SparseHermitianOperator::diagonal(h), random_hermitian(3, 9),
                           SparseHermitianOperator::diagonal(o), 0.0, 3.0, 5, random_state(3, 2));
  CHECK(evaluate_j1(diag, diag.zero_control()) ==
        doctest::Approx(expectation(diag.observable(), diag.psi0())).epsilon(1e-12));

  for (int n : {1, 3, 10}) {
    const auto spec = two_level_spec(1.5, n);
    const ControlGrid u(1.5, n, uniform_control(n, 0.8, rng));
    CHECK(evaluate_j1(spec, u) == doctest::Approx(std::cos(2.0 * theta_of(u))).epsilon(1e-13));
  }

  const auto sine = [](double t) { return std::sin(t); };
  const auto quad = identity_observable_spec(1.0, M_PI, 256);
  CHECK(evaluate_j2(quad, ControlGrid::sampled(M_PI, 256, sine)) == doctest::Approx(M_PI / 2.0).epsilon(1e-4));
}

TEST_CASE("example model objective matches dense pipeline") {
  ExampleModelParams params;
  const auto model = build_example_model(params);
  const ObjectiveSpec spec(model.h0, model.mu, model.observable, 0.8, 5.0, 250,
                           gaussian_state(params.grid(), 2.0, 1.0));
  const ComplexVector ref = oracle::midpoint_evolve(model.h0.to_dense(), model.mu.to_dense(), 5.0,
                                                    RealVector::Zero(251), spec.psi0().amplitudes());
  CHECK(std::abs(evaluate_j1(spec, spec.zero_control()) -
                 oracle::expectation(model.observable.to_dense(), ref)) < 1e-8);

  const auto sine = ControlGrid::sampled(5.0, 250, [](double t) { return 0.5 * std::sin(t); });
  const ComplexVector driven = oracle::midpoint_evolve(model.h0.to_dense(), model.mu.to_dense(), 5.0, sine.values(),
                                                       spec.psi0().amplitudes());
  CHECK(std::abs(evaluate_j1(spec, sine) - oracle::expectation(model.observable.to_dense(), driven)) < 1e-8);
}

TEST_CASE("adjoint gradient on the two-level system") {
  std::mt19937_64 rng(6);
  for (int n : {1, 2, 5}) {
    const auto spec = two_level_spec(2.0, n, 0.7);
    const ControlGrid u(2.0, n, uniform_control(n, 1.0, rng));
    const RealVector w = trapezoid_weights(n);
    const double theta = theta_of(u);
    const auto g = gradient_adjoint(spec, u);
    CHECK(g.provenance == GradientProvenance::kAdjoint);
    REQUIRE(g.values.size() == n + 1);
    for (int j = 0; j <= n; ++j) {
      const double expected = -2.0 * std::sin(2.0 * theta) * spec.delta() * w(j) -
                              2.0 * 0.7 * spec.delta() * w(j) * u.values()(j);
      CHECK(g.values(j) == doctest::Approx(expected).epsilon(1e-12));
    }
  }
}

TEST_CASE("adjoint gradient with decoupled control") {
  const ObjectiveSpec spec(random_hermitian(5, 1), SparseHermitianOperator::zero(5), random_hermitian(5, 2), 0.9,
                           2.0, 8, random_state(5, 3));
  std::mt19937_64 rng(1);
  const ControlGrid u(2.0, 8, uniform_control(8, 1.0, rng));
  const auto g = gradient_adjoint(spec, u);
  CHECK((g.values + penalty_gradient(spec, u)).norm() < 1e-15);
  const RealVector w = trapezoid_weights(8);
  for (int j = 0; j <= 8; ++j) CHECK(penalty_gradient(spec, u)(j) == doctest::Approx(2.0 * 0.9 * 0.25 * w(j) * u.values()(j)));
}

TEST_CASE("adjoint and finite differences agree") {
  std::mt19937_64 rng(11);
  for (int substeps : {1, 2}) {
    PropagatorConfig config;
    config.substeps_per_interval = substeps;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      const auto spec = random_spec(8, 1.0, 10, 2.0, 100 + 4 * seed, config);
      const ControlGrid u(1.0, 10, uniform_control(10, 1.0, rng));
      const auto adj = gradient_adjoint(spec, u);
      const auto fd = gradient_fd(spec, u, 1e-4);
      CHECK(fd.provenance == GradientProvenance::kFiniteDifference);
      CHECK((adj.values - fd.values).lpNorm<Eigen::Infinity>() <= 1e-6);
    }
  }

  // Zero control with no penalty on a larger horizon.
  const auto spec = random_spec(8, 4.0, 12, 0.0, 7);
  const auto adj = gradient_adjoint(spec, spec.zero_control()).values;
  const auto fd = gradient_fd(spec, spec.zero_control(), 1e-4).values;
  CHECK((adj - fd).lpNorm<Eigen::Infinity>() <= 1e-6 * adj.lpNorm<Eigen::Infinity>() + 1e-9);

  const auto vg = value_and_gradient(spec, spec.zero_control());
  CHECK(vg.value == doctest::Approx(evaluate(spec, spec.zero_control())).epsilon(1e-14));
  CHECK(vg.j1 == doctest::Approx(evaluate_j1(spec, spec.zero_control())).epsilon(1e-14));
}

TEST_CASE("finite differences") {
  std::mt19937_64 rng(12);
  const auto id = identity_observable_spec(0.5, 2.0, 6);
  const ControlGrid u(2.0, 6, uniform_control(6, 1.0, rng));
  CHECK((gradient_fd(id, u, 1e-3).values + penalty_gradient(id, u)).norm() < 1e-10);

  const auto spec = random_spec(6, 2.0, 6, 0.5, 31);
  const RealVector g1 = gradient_fd(spec, u, 1e-2).values;
  const RealVector g2 = gradient_fd(spec, u, 5e-3).values;
  const RealVector g4 = gradient_fd(spec, u, 2.5e-3).values;
  // Truncation error of central differences is O(h^2): successive differences shrink by 4.
  CHECK((g1 - g2).norm() / (g2 - g4).norm() == doctest::Approx(4.0).epsilon(0.05));
  CHECK_THROWS_AS(gradient_fd(spec, u, 0.0), InputError);
}

TEST_CASE("hessian by finite differences") {
  const auto id = identity_observable_spec(0.5, 2.0, 6);
  const auto h = hessian_fd(id, id.zero_control());
  const RealVector w = trapezoid_weights(6);
  for (int j = 0; j <= 6; ++j) {
    for (int k = 0; k <= 6; ++k) {
      CHECK(h.matrix(j, k) == doctest::Approx(j == k ? -2.0 * 0.5 * (2.0 / 6) * w(j) : 0.0).epsilon(1e-8));
    }
  }

  std::mt19937_64 rng(14);
  const auto spec = random_spec(8, 1.6, 16, 1.0, 50);
  const ControlGrid u(1.6, 16, uniform_control(16, 1.0, rng));
  const auto hess = hessian_fd(spec, u);
  CHECK(hess.max_asymmetry < 1e-4);
  for (int j = 0; j <= 16; ++j) {
    for (int k = 0; k <= 16; ++k) {
      const double penalty = j == k ? 2.0 * spec.alpha() * spec.delta() * trapezoid_weights(16)(j) : 0.0;
      CHECK(std::abs(hess.matrix(j, k)) <= derivative_bound(2, spec.delta(), spec.mu_norm()) + penalty + 1e-8);
    }
  }
  CHECK_THROWS_AS(hessian_fd(random_spec(4, 1.0, 65, 0.0, 1), ControlGrid(1.0, 65)), InputError);
}

TEST_CASE("derivative and lipschitz bounds") {
  CHECK(derivative_bound(1, 0.1, 1.0) == doctest::Approx(0.2));
  CHECK(derivative_bound(2, 0.1, 1.0) == doctest::Approx(0.06));
  for (int k = 1; k <= 12; ++k) CHECK(derivative_bound(k, 0.3, 0.0) == 0.0);
  CHECK_THROWS_AS(derivative_bound(13, 0.1, 1.0), InputError);
  CHECK_THROWS_AS(derivative_bound(0, 0.1, 1.0), InputError);

  const ObjectiveSpec spec(SparseHermitianOperator::zero(2), testing_models::sigma_x(), testing_models::sigma_z(),
                           0.2, 10.0, 100, QuantumState::basis(2, 0));
  CHECK(lipschitz_bound(spec) == doctest::Approx(1.04).epsilon(1e-9));
  const ObjectiveSpec flat(SparseHermitianOperator::zero(2), SparseHermitianOperator::zero(2),
                           testing_models::sigma_z(), 0.0, 10.0, 100, QuantumState::basis(2, 0));
  CHECK(lipschitz_bound(flat) == 0.0);
  CHECK(default_hessian_lipschitz(spec) == doctest::Approx(24.0 * 1e-3 / 0.1).epsilon(1e-9));

  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 20; ++trial) {
    const auto s = random_spec(8, 1.0 + trial * 0.2, 10, 0.0, 300 + trial);
    const ControlGrid u(s.horizon(), 10, uniform_control(10, 1.0, rng));
    const RealVector g = gradient_adjoint(s, u).values;
    CHECK(g.lpNorm<Eigen::Infinity>() <= derivative_bound(1, s.delta(), s.mu_norm()) * (1.0 + 1e-12));
  }
}
