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

// Dense, independently coded reference computations used by the tests.

#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "qocgrad/operators.hpp"

namespace oracle {

using qoc::Complex;
using qoc::ComplexMatrix;
using qoc::ComplexVector;
using qoc::RealVector;

/// exp(-i tau H) for Hermitian H via eigendecomposition.
inline ComplexMatrix expm_hermitian(const ComplexMatrix& h, double tau) {
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(h);
  ComplexVector phases(h.rows());
  for (Eigen::Index i = 0; i < h.rows(); ++i) phases(i) = std::polar(1.0, -tau * es.eigenvalues()(i));
  return es.eigenvectors() * phases.asDiagonal() * es.eigenvectors().adjoint();
}

/// Dense midpoint rule with S sub-steps per interval.
inline ComplexVector midpoint_evolve(const ComplexMatrix& h0, const ComplexMatrix& mu, double horizon,
                                     const RealVector& u, const ComplexVector& psi0, int substeps = 1) {
  const int n = static_cast<int>(u.size()) - 1;
  const double delta = horizon / n;
  ComplexVector psi = psi0;
  for (int j = 0; j < n; ++j) {
    for (int s = 0; s < substeps; ++s) {
      const double theta = (s + 0.5) / substeps;
      const double c = (1.0 - theta) * u(j) + theta * u(j + 1);
      psi = expm_hermitian(h0 - c * mu, delta / substeps) * psi;
    }
  }
  return psi;
}

inline double expectation(const ComplexMatrix& o, const ComplexVector& psi) { return psi.dot(o * psi).real(); }

/// Truncated time-ordered sum over all M^k sample tuples of one interval:
/// sum_k (-i delta / M)^k / k! sum_{tuples} T[H(s_{i_k}) ... H(s_{i_1})], with
/// samples at the sub-interval midpoints (equal samples commute).
inline ComplexVector dyson_bruteforce(const ComplexMatrix& h0, const ComplexMatrix& mu, double delta, double u_left,
                                      double u_right, const ComplexVector& psi, int order, int points) {
  std::vector<ComplexMatrix> h;
  for (int i = 0; i < points; ++i) {
    const double theta = (i + 0.5) / points;
    h.push_back(h0 - ((1.0 - theta) * u_left + theta * u_right) * mu);
  }
  ComplexVector out = psi;
  double factorial = 1.0;
  for (int k = 1; k <= order; ++k) {
    factorial *= k;
    std::vector<int> tuple(static_cast<std::size_t>(k), 0);
    ComplexVector sum = ComplexVector::Zero(psi.size());
    while (true) {
      std::vector<int> sorted = tuple;
      std::sort(sorted.begin(), sorted.end());
      ComplexVector term = psi;
      for (int idx : sorted) term = h[static_cast<std::size_t>(idx)] * term;  // earliest acts first
      sum += term;
      int pos = 0;
      while (pos < k && ++tuple[static_cast<std::size_t>(pos)] == points) tuple[static_cast<std::size_t>(pos++)] = 0;
      if (pos == k) break;
    }
    out += std::pow(Complex(0.0, -delta / points), k) / factorial * sum;
  }
  return out;
}

/// First-derivative stencil on offsets -m..m from the Vandermonde system
/// sum_l a_l l^q = [q == 1], q = 0..2m.
inline std::vector<double> vandermonde_stencil(int m) {
  const int n = 2 * m + 1;
  Eigen::MatrixXd v(n, n);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n);
  rhs(1) = 1.0;
  for (int q = 0; q < n; ++q) {
    for (int l = -m; l <= m; ++l) v(q, l + m) = std::pow(static_cast<double>(l), q);
  }
  const Eigen::VectorXd a = v.fullPivLu().solve(rhs);
  return {a.data(), a.data() + n};
}

}  // namespace oracle
