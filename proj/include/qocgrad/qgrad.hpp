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

// Statevector simulation of the quantum gradient-estimation pipeline:
// a Hadamard-test probability oracle for the terminal expectation, exact
// phase-oracle application, and Jordan's algorithm over a grid register with
// a higher-order central-difference surrogate.

#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include "qocgrad/objective.hpp"
#include "qocgrad/optimizer.hpp"

namespace qoc {

/// Probability of reading |1> on the control qubit of
/// (H x I)(c-U_O)(H x I)|0>|0>|psi>, where U_O = [[O, S], [S, -O]] with
/// S = sqrt(I - O^2) is the unitary dilation of O.
class HadamardTest {
 public:
  static constexpr double kNormTolerance = 1e-8;

  /// Refuses ||O|| > 1 + kNormTolerance: the oracle range would leave [0, 1].
  explicit HadamardTest(const SparseHermitianOperator& observable);

  Eigen::Index dimension() const { return observable_.rows(); }
  const ComplexMatrix& block_encoding() const { return block_encoding_; }

  /// Simulates the circuit; throws std::logic_error if any gate layer moves the
  /// statevector norm by more than 1e-10.
  double probability_of_one(const ComplexVector& psi) const;

 private:
  ComplexMatrix observable_;
  ComplexMatrix block_encoding_;
};

/// f(u) = 1/2 - 1/2 <psi_N|O|psi_N> read off the simulated Hadamard test.
double hadamard_test_probability(const ObjectiveSpec& spec, const ControlGrid& u);

/// Grid of Jordan's algorithm: `num_vars` registers of `bits` qubits, register
/// value k mapping to the offset probe_radius * (k - 2^{b-1}) / 2^{b-1}.
struct GridRegisterSpec {
  int num_vars = 2;
  int bits = 4;
  double probe_radius = 1e-2;

  static constexpr int kMaxQubits = 22;
  void validate() const;
  int total_qubits() const { return num_vars * bits; }
  /// Offset in [-1, 1) of register value k, before scaling by probe_radius.
  double unit_offset(int k) const;
};

/// (2m+1)-point first-derivative stencil: sum_l a_l f(l x) = f'(0) x + O(x^{2m+1}).
struct CentralDifferenceScheme {
  int order = 1;
  std::vector<int> offsets;
  std::vector<double> coefficients;

  /// Largest relative violation of sum a_l = 0, sum a_l l = 1,
  /// sum a_l l^q = 0 (q = 2..2m).
  double order_condition_residual() const;
};

/// Closed-form coefficients a_l = (-1)^{l+1} (m!)^2 / (l (m-l)! (m+l)!), a_0 = 0.
/// Refuses m outside 1..6.
CentralDifferenceScheme central_difference_coefficients(int m);

/// m = ceil(log(x) / log(log(x))) with x = T^{1/2} / eps^{3/4}, clamped to 1..6.
int select_difference_order(double horizon, double eps);

using PhaseTarget = std::function<double(const RealVector&)>;

/// Phase oracle O_f |x> = exp(i S f(x)) |x>, applied exactly in simulation.
struct PhaseOracleSpec {
  PhaseTarget target;
  double phase_scale = 1.0;
  double error_budget = 0.0;
};

/// Inverse QFT of one register: out[k] = 2^{-b/2} sum_x exp(-2 pi i k x / 2^b) in[x].
ComplexVector inverse_qft(const ComplexVector& block);

/// Two's-complement reading of a b-bit register value, centred at 0.
int decode_signed(int value, int bits);

/// Largest phase scale that keeps every decoded component inside the
/// register: S < pi 2^{b-1} / (r B). The default uses half of that range,
/// S = pi 2^{b-2} / (r B), with B a bound on |df/dx_i|.
double default_phase_scale(const GridRegisterSpec& grid, double derivative_bound);

struct JordanResult {
  GradientEstimate gradient;
  std::vector<int> modal_outcome;  // signed register values
  double modal_frequency = 0.0;    // fraction of shots that hit the mode
  double cell_width = 0.0;         // gradient resolution pi / (S r)
  int phase_oracle_calls = 0;      // 2m per shot
};

/// The final statevector of Jordan's algorithm, prepared once and sampled
/// with independent seeds.
class JordanCircuit {
 public:
  /// Refuses a phase scale that violates S r B < pi 2^{b-1}; the message
  /// carries the default scale as a suggestion.
  JordanCircuit(const PhaseTarget& f, const RealVector& point, const GridRegisterSpec& grid,
                const CentralDifferenceScheme& scheme, double phase_scale, double derivative_bound);

  const ComplexVector& state() const { return state_; }
  /// Measurement distribution of one register, marginalised over the others.
  RealVector marginal(int register_index) const;
  /// Gradient value represented by a signed register reading.
  double decode(int signed_value) const { return signed_value * cell_width_; }
  double cell_width() const { return cell_width_; }

  JordanResult sample(int shots, std::uint64_t seed) const;

 private:
  GridRegisterSpec grid_;
  int order_ = 1;
  double cell_width_ = 0.0;
  ComplexVector state_;
};

/// Jordan's gradient estimator. Builds the uniform superposition over the
/// register grid, imprints exp(i S f_m(x)) with f_m the central-difference
/// surrogate of x -> f(point + r x), applies an inverse QFT per register,
/// samples `shots` outcomes and decodes the most frequent one. `derivative_bound`
/// bounds |df/dx_i| and drives the anti-aliasing guard.
JordanResult jordan_estimate_gradient(const PhaseTarget& f, const RealVector& point, const GridRegisterSpec& grid,
                                      const CentralDifferenceScheme& scheme, double phase_scale, int shots,
                                      std::uint64_t seed, double derivative_bound);

/// ceil(c log(1/eps)) probability-oracle calls per phase-oracle call. Refuses
/// eps outside (0, 1/3).
long long phase_to_probability_cost_model(double eps, double constant = 1.0);

struct QueryCostRow {
  std::string component;
  long long oracle_calls = 0;
  long long phase_calls = 0;
  double estimated_paper_cost = 0.0;
};

/// Running query counters shared by a gradient provider and its caller.
struct QueryCounter {
  long long gradient_calls = 0;
  long long phase_calls = 0;
  long long oracle_calls = 0;
};

/// `component,oracle_calls,phase_calls,estimated_paper_cost`.
void write_query_cost_csv(std::ostream& out, const std::vector<QueryCostRow>& rows);

struct JordanProviderConfig {
  int bits = 6;
  int difference_order = 1;
  /// Coordinates estimated jointly per simulation (N_g).
  int block_size = 2;
  double probe_radius = 1e-2;
  int shots = 64;
  /// Precision of the modelled probability-to-phase conversion.
  double phase_eps = 0.1;
  std::uint64_t seed = 7;
};

/// Gradient provider that estimates grad J1 coordinate block by coordinate
/// block with Jordan's algorithm on the Hadamard-test probability f = 1/2 - J1/2
/// (so grad J1 = -2 grad f) and subtracts the closed-form penalty gradient.
GradientProvider make_jordan_provider(const ObjectiveSpec& spec, const JordanProviderConfig& config,
                                      std::shared_ptr<QueryCounter> counter = nullptr);

}  // namespace qoc
