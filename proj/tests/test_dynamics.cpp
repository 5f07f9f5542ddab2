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
#include <sstream>

#include "doctest.h"
#include "models.hpp"
#include "oracles.hpp"
#include "qocgrad/dynamics.hpp"

using namespace qoc;
using testing_models::uniform_control;

namespace {

ComplexVector random_vector(Eigen::Index d, std::mt19937_64& rng) {
  std::normal_distribution<double> n;
  ComplexVector v(d);
  for (Eigen::Index i = 0; i < d; ++i) v(i) = Complex(n(rng), n(rng));
  return v;
}

}  // namespace

TEST_CASE("expm_apply") {
  std::mt19937_64 rng(5);
  const auto op = random_hermitian(4, 21);
  const ComplexVector v = random_vector(4, rng);
  CHECK((expm_apply(op, v, 0.0, 1e-14) - v).norm() == 0.0);

  RealVector w(3);
  w << 0.3, -1.2, 2.5;
  for (int k = 0; k < 3; ++k) {
    const ComplexVector e = ComplexVector::Unit(3, k);
    const ComplexVector out = expm_apply(SparseHermitianOperator::diagonal(w), e, 0.7, 1e-14);
    CHECK(std::abs(out(k) - std::polar(1.0, -0.7 * w(k))) < 1e-14);
    CHECK(out.norm() == doctest::Approx(1.0).epsilon(1e-14));
  }

  for (double tau : {0.01, 0.5, 1.0, 4.0, -2.5, 30.0}) {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      const auto h = random_hermitian(4, seed);
      const ComplexVector x = random_vector(4, rng);
      const ComplexVector ref = oracle::expm_hermitian(h.to_dense(), tau) * x;
      CHECK((expm_apply(h, x, tau, 1e-12) - ref).norm() <= 1e-12 * x.norm() * (1.0 + std::abs(tau)));
    }
  }

  ComplexVector bad = v;
  bad(0) = Complex(NAN, 0.0);
  CHECK_THROWS_AS(expm_apply(op, bad, 0.1, 1e-12), InputError);
  CHECK_THROWS_AS(expm_apply(op, ComplexVector::Zero(3), 0.1, 1e-12), InputError);
}

TEST_CASE("exponential derivative matches finite differences") {
  std::mt19937_64 rng(8);
  const ControlledHamiltonian ham(random_hermitian(5, 1), random_hermitian(5, 2));
  const ComplexVector v = random_vector(5, rng).normalized();
  for (double c : {-0.8, 0.0, 1.3}) {
    const auto out = expm_apply_with_derivative(ham, c, v, 0.4, 1e-14);
    const ComplexMatrix h0 = ham.drift().to_dense(), mu = ham.dipole().to_dense();
    CHECK((out.value - oracle::expm_hermitian(h0 - c * mu, 0.4) * v).norm() < 1e-13);
    const double h = 1e-5;
    const ComplexVector fd = (oracle::expm_hermitian(h0 - (c + h) * mu, 0.4) * v -
                              oracle::expm_hermitian(h0 - (c - h) * mu, 0.4) * v) /
                             (2.0 * h);
    CHECK((out.derivative - fd).norm() < 1e-9);
  }
}

TEST_CASE("propagator configuration") {
  PropagatorConfig config;
  CHECK_NOTHROW(config.validate());
  config.dyson_order = 7;
  CHECK_THROWS_AS(config.validate(), InputError);
  config = {};
  config.expm_tolerance = 1e-5;
  CHECK_THROWS_AS(config.validate(), InputError);
  config = {};
  config.method = PropagatorMethod::kDyson;
  config.dyson_order = 6;
  config.dyson_quadrature_points = 20;
  CHECK_THROWS_AS(config.validate(), InputError);
  CHECK(propagator_method_from_string(to_string(PropagatorMethod::kDyson)) == PropagatorMethod::kDyson);
  CHECK_THROWS_AS(propagator_method_from_string("rk4"), InputError);

  const auto f = midpoint_fractions(4);
  REQUIRE(f.size() == 4);
  CHECK(f[0] == 0.125);
  CHECK(f[3] == 0.875);
}

TEST_CASE("midpoint step") {
  RealVector w(3);
  w << 1.0, -0.5, 0.25;
  const auto h0 = SparseHermitianOperator::diagonal(w);
  const ControlGrid zero(1.0, 4);
  ComplexVector psi(3);
  psi << Complex(0.6, 0.0), Complex(0.0, 0.48), Complex(-0.64, 0.0);
  const ComplexVector next = step(h0, SparseHermitianOperator::zero(3), zero, 0, psi);
  CHECK((next.cwiseAbs() - psi.cwiseAbs()).norm() < 1e-15);
  CHECK(std::abs(next(0) - psi(0) * std::polar(1.0, -0.25)) < 1e-14);

  // Commuting drift and dipole with constant control.
  RealVector m(3);
  m << 0.2, 0.9, -0.4;
  const auto mu = SparseHermitianOperator::diagonal(m);
  const auto constant = ControlGrid::sampled(2.0, 5, [](double) { return 0.7; });
  PropagatorConfig config;
  config.substeps_per_interval = 3;
  const ComplexVector out = step(h0, mu, constant, 2, psi, config);
  for (int k = 0; k < 3; ++k) CHECK(std::abs(out(k) - psi(k) * std::polar(1.0, -0.4 * (w(k) - 0.7 * m(k)))) < 1e-13);

  CHECK_THROWS_AS(step(h0, mu, constant, 5, psi), InputError);
  CHECK_THROWS_AS(step(h0, mu, constant, -1, psi), InputError);
}

TEST_CASE("evolve matches the dense midpoint oracle") {
  std::mt19937_64 rng(13);
  for (int substeps : {1, 3}) {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      const auto h0 = random_hermitian(6, 10 * seed), mu = random_hermitian(6, 10 * seed + 1);
      const ControlGrid grid(2.0, 7, uniform_control(7, 1.5, rng));
      const ComplexVector psi0 = random_state(6, seed).amplitudes();
      PropagatorConfig config;
      config.substeps_per_interval = substeps;
      const auto evo = evolve(h0, mu, grid, psi0, config);
      const ComplexVector ref =
          oracle::midpoint_evolve(h0.to_dense(), mu.to_dense(), 2.0, grid.values(), psi0, substeps);
      CHECK((evo.final_state - ref).norm() < 1e-12);
      REQUIRE(evo.trajectory.states.size() == 8);
      for (const auto& s : evo.trajectory.states) CHECK(std::abs(s.norm() - 1.0) < 1e-10);
      CHECK((evo.trajectory.states.front() - psi0).norm() == 0.0);
    }
  }
}

TEST_CASE("evolve composition, reversal, linearity and determinism") {
  std::mt19937_64 rng(17);
  const auto h0 = random_hermitian(8, 3), mu = random_hermitian(8, 4);
  const ComplexVector psi0 = random_state(8, 5).amplitudes();

  const ControlGrid one(0.3, 1, uniform_control(1, 1.0, rng));
  CHECK((evolve(h0, mu, one, psi0).final_state - step(h0, mu, one, 0, psi0)).norm() == 0.0);

  const ControlGrid grid(3.0, 12, uniform_control(12, 1.0, rng));
  const ComplexVector final_state = evolve(h0, mu, grid, psi0).final_state;
  CHECK((evolve_backward(h0, mu, grid, final_state) - psi0).norm() < 1e-8);

  const ComplexVector phi = random_state(8, 6).amplitudes();
  const Complex a(0.3, -0.4), b(1.1, 0.2);
  const ComplexVector combined = evolve(h0, mu, grid, ComplexVector(a * psi0 + b * phi)).final_state;
  CHECK((combined - (a * final_state + b * evolve(h0, mu, grid, phi).final_state)).norm() < 1e-10);

  const auto first = evolve(h0, mu, grid, psi0), second = evolve(h0, mu, grid, psi0);
  for (std::size_t j = 0; j < first.trajectory.states.size(); ++j) {
    CHECK((first.trajectory.states[j].array() == second.trajectory.states[j].array()).all());
  }

  PropagatorConfig dyson;
  dyson.method = PropagatorMethod::kDyson;
  CHECK_THROWS_AS(evolve_backward(h0, mu, grid, final_state, dyson), InputError);
  CHECK_THROWS_AS(evolve(h0, mu, grid, ComplexVector::Zero(3)), InputError);
}

TEST_CASE("midpoint rule converges at second order") {
  std::mt19937_64 rng(2);
  const auto h0 = random_hermitian(6, 40), mu = random_hermitian(6, 41);
  const ComplexVector psi0 = random_state(6, 42).amplitudes();
  auto u = [](double t) { return std::sin(2.0 * t); };
  const double horizon = 2.0;
  const auto reference = evolve(h0, mu, ControlGrid::sampled(horizon, 8, u), psi0, [] {
                           PropagatorConfig c;
                           c.substeps_per_interval = 512;
                           return c;
                         }()).final_state;
  // Same control u_I at N = 8 on every run; only the sub-stepping changes.
  std::vector<double> errors;
  for (int s : {1, 2, 4, 8}) {
    PropagatorConfig c;
    c.substeps_per_interval = s;
    errors.push_back((evolve(h0, mu, ControlGrid::sampled(horizon, 8, u), psi0, c).final_state - reference).norm());
  }
  for (std::size_t i = 1; i < errors.size(); ++i) CHECK(errors[i - 1] / errors[i] == doctest::Approx(4.0).epsilon(0.1));
}

TEST_CASE("example model expectation matches dense propagation") {
  ExampleModelParams params;
  const auto model = build_example_model(params);
  const ComplexVector psi0 = gaussian_state(params.grid(), 2.0, 1.0).amplitudes();
  const ControlGrid zero(5.0, 250);
  const ComplexVector psi = evolve(model.h0, model.mu, zero, psi0).final_state;
  const ComplexVector ref = oracle::expm_hermitian(model.h0.to_dense(), 5.0) * psi0;
  CHECK(std::abs(expectation(model.observable, psi) - oracle::expectation(model.observable.to_dense(), ref)) < 1e-8);
}

TEST_CASE("dyson series") {
  std::mt19937_64 rng(23);
  const auto h0 = random_hermitian(5, 60), mu = random_hermitian(5, 61);
  const ComplexVector psi = random_state(5, 62).amplitudes();
  const ControlGrid grid(1.2, 4, uniform_control(4, 1.0, rng));

  CHECK((dyson_series(h0, mu, grid, 1, psi, 0, 7) - psi).norm() == 0.0);

  const ControlGrid zero(1.2, 4);
  const ComplexVector first = dyson_series(h0, mu, zero, 0, psi, 1, 5);
  CHECK((first - (psi - Complex(0.0, 0.3) * (h0.to_dense() * psi))).norm() < 1e-14);

  for (int order = 1; order <= 3; ++order) {
    for (int points : {1, 2, 3}) {
      for (int j = 0; j < 4; ++j) {
        const ComplexVector ref = oracle::dyson_bruteforce(h0.to_dense(), mu.to_dense(), grid.delta(),
                                                           grid.values()(j), grid.values()(j + 1), psi, order, points);
        CHECK((dyson_series(h0, mu, grid, j, psi, order, points) - ref).norm() < 1e-13);
      }
    }
  }

  CHECK_THROWS_AS(dyson_series(h0, mu, grid, 0, psi, 7, 2), InputError);
  CHECK_THROWS_AS(dyson_series(h0, mu, grid, 0, psi, 2, 0), InputError);
}

TEST_CASE("dyson step accuracy and drift guard") {
  const auto h0 = random_hermitian(6, 70), mu = random_hermitian(6, 71);
  const ComplexVector psi = random_state(6, 72).amplitudes();
  const auto u = ControlGrid::sampled(1.0, 8, [](double t) { return std::sin(t); });
  PropagatorConfig fine;
  fine.substeps_per_interval = 32;
  const ComplexVector ref = step(h0, mu, u, 3, psi, fine);
  const double e3 = (dyson_step(h0, mu, u, 3, psi, 3, 32) - ref).norm();
  const double e4 = (dyson_step(h0, mu, u, 3, psi, 4, 32) - ref).norm();
  CHECK(e4 < e3 * 0.125 * 2.0);
  CHECK(dyson_step(h0, mu, u, 3, psi, 4, 32).norm() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK_THROWS_AS(dyson_step(h0, mu, u, 3, psi, 4, 64), InputError);

  const auto big = ControlGrid::sampled(8.0, 2, [](double) { return 1.0; });
  CHECK_THROWS_AS(dyson_step(h0, mu, big, 0, psi, 1, 4), ConvergenceError);

  PropagatorConfig config;
  config.method = PropagatorMethod::kDyson;
  config.dyson_order = 5;
  config.dyson_quadrature_points = 8;
  PropagatorConfig matched;
  matched.substeps_per_interval = 8;
  const auto evo = evolve(h0, mu, u, psi, config);
  CHECK((evo.final_state - evolve(h0, mu, u, psi, matched).final_state).norm() < 1e-7);
}

TEST_CASE("trajectory csv") {
  const ControlGrid grid(1.0, 2);
  const auto evo = evolve(SparseHermitianOperator::zero(2), SparseHermitianOperator::zero(2), grid,
                          QuantumState::basis(2, 1).amplitudes());
  std::ostringstream out;
  write_trajectory_csv(out, grid, evo.trajectory);
  CHECK(out.str() ==
        "j,t,re_amp_0,re_amp_1,im_amp_0,im_amp_1\n0,0,0,1,0,0\n1,0.5,0,1,0,0\n2,1,0,1,0,0\n");
}
