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
#include <string>
#include <vector>

#include "qocgrad/control.hpp"
#include "qocgrad/operators.hpp"

namespace qoc {

enum class PropagatorMethod { kMidpointExpm, kDyson };

std::string to_string(PropagatorMethod method);
PropagatorMethod propagator_method_from_string(const std::string& name);

struct PropagatorConfig {
  PropagatorMethod method = PropagatorMethod::kMidpointExpm;
  /// Truncation order K of the Dyson series (0..6).
  int dyson_order = 4;
  /// Sample points M per interval for the Dyson time integrals.
  int dyson_quadrature_points = 16;
  /// Equal midpoint sub-steps per control interval.
  int substeps_per_interval = 1;
  double expm_tolerance = 1e-14;

  /// Throws InputError when a field is out of range.
  void validate() const;
};

/// States at t_0..t_N produced by evolve().
struct TrajectoryRecord {
  std::vector<ComplexVector> states;
  PropagatorConfig config;
};

struct Evolution {
  ComplexVector final_state;
  TrajectoryRecord trajectory;
};

/// H(c) = H0 - c*mu applied without materializing the sum.
class ControlledHamiltonian {
 public:
  ControlledHamiltonian(SparseHermitianOperator h0, SparseHermitianOperator mu);

  Eigen::Index dimension() const { return h0_.dimension(); }
  const SparseHermitianOperator& drift() const { return h0_; }
  const SparseHermitianOperator& dipole() const { return mu_; }

  /// y = scale * (H0 - c mu) x, optionally accumulated into y.
  void apply_into(double c, const ComplexVector& x, ComplexVector& y, Complex scale = 1.0,
                  bool accumulate = false) const;
  /// Upper bound on ||H0 - c mu||.
  double norm_bound(double c) const { return h0_bound_ + std::abs(c) * mu_bound_; }

 private:
  SparseHermitianOperator h0_;
  SparseHermitianOperator mu_;
  double h0_bound_;
  double mu_bound_;
};

namespace detail {

using MatVec = std::function<void(const ComplexVector&, ComplexVector&)>;

/// exp(A) v by scaled Taylor series, where matvec computes A x and
/// norm_bound >= ||A||. Error is at most tol * ||v||.
ComplexVector taylor_expm_action(const MatVec& matvec, const ComplexVector& v, double norm_bound, double tol);

}  // namespace detail

/// exp(-i tau op) v, accurate to tol * ||v||. Throws InputError on non-finite
/// input or dimension mismatch.
ComplexVector expm_apply(const SparseHermitianOperator& op, const ComplexVector& v, double tau, double tol);

/// exp(-i tau H(c)) v and its derivative with respect to c, both to tolerance
/// tol. The derivative is the Frechet derivative of the exponential, obtained
/// from the 2x2 block-triangular augmented generator.
struct ExpmWithDerivative {
  ComplexVector value;
  ComplexVector derivative;
};
ExpmWithDerivative expm_apply_with_derivative(const ControlledHamiltonian& hamiltonian, double c,
                                              const ComplexVector& v, double tau, double tol);

/// Midpoint sub-step locations inside one interval: control weight theta in
/// [0,1] of the right-hand node, so that u = (1-theta) u_j + theta u_{j+1}.
std::vector<double> midpoint_fractions(int substeps);

/// One interval j -> j+1 of the midpoint exponential rule.
ComplexVector step(const SparseHermitianOperator& h0, const SparseHermitianOperator& mu, const ControlGrid& grid,
                   int j, const ComplexVector& psi_j, const PropagatorConfig& config = {});

/// Truncated time-ordered Dyson sum for interval j without any renormalization.
/// Time ordering is taken over all M^k sample tuples; equal sample times
/// contribute with the 1/m! weight of the sorted product, so the result is the
/// degree-<=K part of prod_i exp(-i delta/M H(s_i)).
ComplexVector dyson_series(const SparseHermitianOperator& h0, const SparseHermitianOperator& mu,
                           const ControlGrid& grid, int j, const ComplexVector& psi_j, int order, int points);

/// dyson_series followed by a norm check: drift below 1e-6 is renormalized away,
/// larger drift throws ConvergenceError.
ComplexVector dyson_step(const SparseHermitianOperator& h0, const SparseHermitianOperator& mu,
                         const ControlGrid& grid, int j, const ComplexVector& psi_j, int order, int points);

/// Time-marching over all N intervals, recording every nodal state.
Evolution evolve(const SparseHermitianOperator& h0, const SparseHermitianOperator& mu, const ControlGrid& grid,
                 const ComplexVector& psi0, const PropagatorConfig& config = {});

/// Inverse of evolve for the midpoint rule: steps N-1..0 with negated time step.
ComplexVector evolve_backward(const SparseHermitianOperator& h0, const SparseHermitianOperator& mu,
                              const ControlGrid& grid, const ComplexVector& psi_final,
                              const PropagatorConfig& config = {});

/// `j,t,re_amp_0..re_amp_{D-1},im_amp_0..im_amp_{D-1}`.
void write_trajectory_csv(std::ostream& out, const ControlGrid& grid, const TrajectoryRecord& record);

}  // namespace qoc
