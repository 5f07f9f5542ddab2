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
#include "qocgrad/control.hpp"

using namespace qoc;

TEST_CASE("control grid invariants") {
  const ControlGrid g(3.0, 7);
  CHECK(g.delta() * g.steps() == doctest::Approx(3.0).epsilon(1e-12));
  CHECK(g.values().size() == 8);
  CHECK_THROWS_AS(ControlGrid(0.0, 4), InputError);
  CHECK_THROWS_AS(ControlGrid(1.0, 0), InputError);
  RealVector bad = RealVector::Zero(3);
  bad(1) = NAN;
  CHECK_THROWS_AS(ControlGrid(1.0, 2, bad), InputError);
  CHECK_THROWS_AS(ControlGrid(1.0, 3, RealVector::Zero(3)), InputError);
}

TEST_CASE("interpolation") {
  const auto constant = ControlGrid::sampled(2.0, 5, [](double) { return 1.25; });
  for (double t : {0.0, 0.13, 1.0, 1.99, 2.0}) CHECK(interpolate(constant, t) == doctest::Approx(1.25));

  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> uni(-3.0, 3.0);
  for (int trial = 0; trial < 20; ++trial) {
    const double a = uni(rng), b = uni(rng);
    const auto g = ControlGrid::sampled(1.7, 9, [&](double t) { return a + b * t; });
    for (int k = 0; k <= 40; ++k) {
      const double t = 1.7 * k / 40.0;
      CHECK(interpolate(g, t) == doctest::Approx(a + b * t).epsilon(1e-12));
    }
  }

  const auto s = ControlGrid::sampled(1.0, 10, [](double t) { return std::sin(t); });
  CHECK(interpolate(s, 0.05) == doctest::Approx((std::sin(0.0) + std::sin(0.1)) / 2.0).epsilon(1e-14));
  CHECK_THROWS_AS(interpolate(s, -1e-9), InputError);
  CHECK_THROWS_AS(interpolate(s, 1.0 + 1e-9), InputError);
}

TEST_CASE("trapezoid weights and quadrature penalty") {
  const RealVector w = trapezoid_weights(6);
  CHECK(w(0) == 0.5);
  CHECK(w(6) == 0.5);
  for (int j = 1; j < 6; ++j) CHECK(w(j) == 1.0);
  CHECK(w.sum() * (2.0 / 6) == doctest::Approx(2.0).epsilon(1e-12));

  CHECK(quadrature_penalty(ControlGrid(2.0, 5), 1.0) == 0.0);
  const auto ones = ControlGrid::sampled(2.5, 7, [](double) { return 1.0; });
  CHECK(quadrature_penalty(ones, 1.0) == doctest::Approx(2.5).epsilon(1e-14));
  const auto c = ControlGrid::sampled(3.0, 11, [](double) { return -0.7; });
  CHECK(quadrature_penalty(c, 0.3) == doctest::Approx(0.3 * 0.49 * 3.0).epsilon(1e-14));

  // u = sin t on [0, pi] converges to pi/2 at second order.
  const double exact = M_PI / 2.0;
  double previous = 0.0;
  for (int n : {8, 16, 32, 64}) {
    const double err =
        std::abs(quadrature_penalty(ControlGrid::sampled(M_PI, n, [](double t) { return std::sin(t); }), 1.0) - exact);
    if (previous > 0.0) CHECK(err <= previous);
    previous = err;
  }
  CHECK(previous < 1e-12);
}

TEST_CASE("interpolation error norm") {
  const auto linear = ControlGrid::sampled(2.0, 4, [](double t) { return 3.0 * t - 1.0; });
  CHECK(interpolation_error_norm([](double t) { return 3.0 * t - 1.0; }, linear) < 1e-14);

  const auto square = ControlGrid::sampled(1.0, 1, [](double t) { return t * t; });
  // Simpson's rule is exact up to the quartic term of (t^2 - t)^2.
  CHECK(interpolation_error_norm([](double t) { return t * t; }, square) ==
        doctest::Approx(1.0 / std::sqrt(30.0)).epsilon(1e-5));
  CHECK(interpolation_error_norm([](double t) { return t * t; }, square, 256) ==
        doctest::Approx(1.0 / std::sqrt(30.0)).epsilon(1e-9));

  auto sine = [](double t) { return std::sin(t); };
  const double coarse = interpolation_error_norm(sine, ControlGrid::sampled(1.0, 8, sine));
  const double fine = interpolation_error_norm(sine, ControlGrid::sampled(1.0, 16, sine));
  CHECK(coarse / fine == doctest::Approx(4.0).epsilon(0.1));

  CHECK_THROWS_AS(interpolation_error_norm(sine, ControlGrid::sampled(1.0, 8, sine), 31), InputError);
  CHECK_THROWS_AS(interpolation_error_norm(sine, ControlGrid::sampled(1.0, 8, sine), 16), InputError);
}

TEST_CASE("step-count selection") {
  CHECK(choose_num_steps(4.0, 0.01, false) == 80);
  CHECK(choose_num_steps(1.0, 0.5, false) == 2);
  const double ratio = static_cast<double>(choose_num_steps(20.0, 1e-3, true)) / choose_num_steps(10.0, 1e-3, true);
  CHECK(ratio >= 1.8);
  CHECK(ratio <= 2.5);
  CHECK_THROWS_AS(choose_num_steps(1.0, 1.5, false), InputError);
  CHECK_THROWS_AS(choose_num_steps(-1.0, 0.1, false), InputError);
}

TEST_CASE("l1 and l2 norms") {
  CHECK(l1_norm(ControlGrid(3.0, 4)) == 0.0);
  CHECK(l1_norm(ControlGrid::sampled(3.0, 4, [](double) { return 1.0; })) == doctest::Approx(3.0));
  RealVector v(2);
  v << -1.0, 1.0;
  CHECK(l1_norm(ControlGrid(0.4, 1, v)) == doctest::Approx(0.2).epsilon(1e-15));
  v << 1.0, -3.0;  // zero at a quarter of the interval
  CHECK(l1_norm(ControlGrid(1.0, 1, v)) == doctest::Approx(0.5 * 0.25 * 1.0 + 0.5 * 0.75 * 3.0).epsilon(1e-15));

  v << 1.0, 2.0;  // integral of (1 + t)^2 on [0, 1]
  CHECK(l2_norm_squared(ControlGrid(1.0, 1, v)) == doctest::Approx(7.0 / 3.0).epsilon(1e-15));

  std::mt19937_64 rng(3);
  std::normal_distribution<double> n;
  for (int trial = 0; trial < 50; ++trial) {
    RealVector u(13);
    for (Eigen::Index j = 0; j < u.size(); ++j) u(j) = n(rng);
    const ControlGrid g(2.4, 12, u);
    CHECK(l1_norm(g) <= std::sqrt(l2_norm_squared(g)) * std::sqrt(2.4) * (1.0 + 1e-12));
    // Fine midpoint sum as an independent check of the closed form.
    double sum = 0.0;
    const int m = 24000;
    for (int k = 0; k < m; ++k) sum += std::abs(interpolate(g, 2.4 * (k + 0.5) / m)) * (2.4 / m);
    CHECK(l1_norm(g) == doctest::Approx(sum).epsilon(1e-6));
  }
}

TEST_CASE("control csv") {
  RealVector v(3);
  v << 0.1, -2.0, 1.0 / 3.0;
  std::ostringstream out;
  write_control_csv(out, ControlGrid(1.0, 2, v));
  CHECK(out.str() == "t,u\n0,0.10000000000000001\n0.5,-2\n1,0.33333333333333331\n");
}
