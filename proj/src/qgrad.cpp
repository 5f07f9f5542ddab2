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

#include "qocgrad/qgrad.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <ostream>
#include <random>
#include <sstream>
#include <stdexcept>

#include <Eigen/Eigenvalues>

#include "qocgrad/csv.hpp"

namespace qoc {

namespace {

constexpr double kLayerNormTolerance = 1e-10;

void check_layer_norm(double before, const ComplexVector& state, const char* layer) {
  const double after = state.norm();
  if (std::abs(after - before) > kLayerNormTolerance) {
    std::ostringstream msg;
    msg << "statevector norm drifted from " << before << " to " << after << " after " << layer;
    throw std::logic_error(msg.str());
  }
}

bool is_power_of_two(Eigen::Index n) { return n > 0 && (n & (n - 1)) == 0; }

// In-place radix-2 transform with kernel exp(-2 pi i k x / n), scaled by 1/sqrt(n).
void inverse_qft_inplace(std::vector<Complex>& a) {
  const std::size_t n = a.size();
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const std::size_t half = len / 2;
    std::vector<Complex> twiddle(half);
    for (std::size_t k = 0; k < half; ++k) {
      twiddle[k] = std::polar(1.0, -2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(len));
    }
    for (std::size_t start = 0; start < n; start += len) {
      for (std::size_t k = 0; k < half; ++k) {
        const Complex even = a[start + k];
        const Complex odd = twiddle[k] * a[start + k + half];
        a[start + k] = even + odd;
        a[start + k + half] = even - odd;
      }
    }
  }
  const double scale = 1.0 / std::sqrt(static_cast<double>(n));
  for (auto& z : a) z *= scale;
}

}  // namespace

// ---------------------------------------------------------------------------
// Hadamard test

HadamardTest::HadamardTest(const SparseHermitianOperator& observable) : observable_(observable.to_dense()) {
  const Eigen::Index d = observable_.rows();
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> solver(observable_);
  if (solver.info() != Eigen::Success) throw ConvergenceError("hadamard test: eigensolver failed");
  RealVector lambda = solver.eigenvalues();
  const double norm = lambda.cwiseAbs().maxCoeff();
  if (norm > 1.0 + kNormTolerance) {
    std::ostringstream msg;
    msg << "hadamard test: ||O|| = " << norm << " exceeds 1, the probability oracle is undefined";
    throw InputError(msg.str());
  }
  lambda = lambda.cwiseMax(-1.0).cwiseMin(1.0);
  const RealVector root = (1.0 - lambda.array().square()).max(0.0).sqrt().matrix();
  const ComplexMatrix& v = solver.eigenvectors();
  const ComplexMatrix o = v * lambda.cast<Complex>().asDiagonal() * v.adjoint();
  const ComplexMatrix s = v * root.cast<Complex>().asDiagonal() * v.adjoint();
  block_encoding_.resize(2 * d, 2 * d);
  block_encoding_ << o, s, s, -o;
}

double HadamardTest::probability_of_one(const ComplexVector& psi) const {
  const Eigen::Index d = dimension();
  if (psi.size() != d) throw InputError("hadamard test: state dimension does not match O");
  // Register order: control qubit, dilation qubit, system.
  ComplexVector state = ComplexVector::Zero(4 * d);
  state.head(d) = psi;
  const double norm = state.norm();
  const double h = 1.0 / std::sqrt(2.0);

  auto hadamard_on_control = [&] {
    const ComplexVector zero = state.head(2 * d);
    const ComplexVector one = state.tail(2 * d);
    state.head(2 * d) = h * (zero + one);
    state.tail(2 * d) = h * (zero - one);
  };

  hadamard_on_control();
  check_layer_norm(norm, state, "H on control");
  state.tail(2 * d) = block_encoding_ * state.tail(2 * d).eval();
  check_layer_norm(norm, state, "controlled U_O");
  hadamard_on_control();
  check_layer_norm(norm, state, "H on control");
  return state.tail(2 * d).squaredNorm();
}

double hadamard_test_probability(const ObjectiveSpec& spec, const ControlGrid& u) {
  spec.require_grid(u);
  const HadamardTest test(spec.observable());
  const auto evo = evolve(spec.h0(), spec.mu(), u, spec.psi0().amplitudes(), spec.propagator());
  return test.probability_of_one(evo.final_state);
}

// ---------------------------------------------------------------------------
// Grid and difference schemes

void GridRegisterSpec::validate() const {
  if (num_vars < 1) throw InputError("grid register: need at least one variable");
  if (bits < 2) throw InputError("grid register: bits per variable must be >= 2");
  if (total_qubits() > kMaxQubits) {
    std::ostringstream msg;
    msg << "grid register: " << total_qubits() << " qubits exceed the simulator budget of " << kMaxQubits;
    throw InputError(msg.str());
  }
  if (!(probe_radius > 0.0) || !std::isfinite(probe_radius)) {
    throw InputError("grid register: probe_radius must be positive");
  }
}

double GridRegisterSpec::unit_offset(int k) const {
  const double centre = std::ldexp(1.0, bits - 1);
  return (k - centre) / centre;
}

double CentralDifferenceScheme::order_condition_residual() const {
  double worst = 0.0;
  for (int q = 0; q <= 2 * order; ++q) {
    double sum = 0.0, scale = 0.0;
    for (std::size_t i = 0; i < offsets.size(); ++i) {
      const double term = coefficients[i] * std::pow(static_cast<double>(offsets[i]), q);
      sum += term;
      scale += std::abs(term);
    }
    const double target = q == 1 ? 1.0 : 0.0;
    worst = std::max(worst, std::abs(sum - target) / std::max(scale, 1.0));
  }
  return worst;
}

CentralDifferenceScheme central_difference_coefficients(int m) {
  if (m < 1 || m > 6) throw InputError("central difference: order m must lie in 1..6 (ill-conditioned beyond)");
  auto factorial = [](int n) {
    double f = 1.0;
    for (int i = 2; i <= n; ++i) f *= i;
    return f;
  };
  CentralDifferenceScheme scheme;
  scheme.order = m;
  const double mf2 = factorial(m) * factorial(m);
  for (int l = -m; l <= m; ++l) {
    scheme.offsets.push_back(l);
    if (l == 0) {
      scheme.coefficients.push_back(0.0);
      continue;
    }
    const double sign = (std::abs(l) % 2 == 1) ? 1.0 : -1.0;
    scheme.coefficients.push_back(sign * mf2 / (l * factorial(m - std::abs(l)) * factorial(m + std::abs(l))));
  }
  return scheme;
}

int select_difference_order(double horizon, double eps) {
  if (!(horizon > 0.0) || !(eps > 0.0)) throw InputError("select_difference_order: T and eps must be positive");
  const double x = std::sqrt(horizon) / std::pow(eps, 0.75);
  if (x <= std::numbers::e) return 1;
  const double m = std::ceil(std::log(x) / std::max(1.0, std::log(std::log(x))) * (1.0 - 1e-12));
  return static_cast<int>(std::clamp(m, 1.0, 6.0));
}

ComplexVector inverse_qft(const ComplexVector& block) {
  if (!is_power_of_two(block.size())) throw InputError("inverse_qft: block size must be a power of two");
  std::vector<Complex> a(block.data(), block.data() + block.size());
  inverse_qft_inplace(a);
  return Eigen::Map<const ComplexVector>(a.data(), block.size());
}

int decode_signed(int value, int bits) {
  const int n = 1 << bits;
  if (value < 0 || value >= n) throw InputError("decode_signed: value outside the register");
  return value >= n / 2 ? value - n : value;
}

double default_phase_scale(const GridRegisterSpec& grid, double derivative_bound) {
  grid.validate();
  if (!(derivative_bound > 0.0)) throw InputError("phase scale: derivative bound must be positive");
  return std::numbers::pi * std::ldexp(1.0, grid.bits - 2) / (grid.probe_radius * derivative_bound);
}

// ---------------------------------------------------------------------------
// Jordan's algorithm

JordanCircuit::JordanCircuit(const PhaseTarget& f, const RealVector& point, const GridRegisterSpec& grid,
                             const CentralDifferenceScheme& scheme, double phase_scale, double derivative_bound)
    : grid_(grid), order_(scheme.order) {
  grid.validate();
  if (!f) throw InputError("jordan: no target function");
  if (point.size() != grid.num_vars) throw InputError("jordan: point dimension does not match the register count");
  if (scheme.offsets.size() != scheme.coefficients.size() || scheme.offsets.empty()) {
    throw InputError("jordan: malformed difference scheme");
  }
  if (!(phase_scale > 0.0) || !std::isfinite(phase_scale)) throw InputError("jordan: phase scale must be positive");
  if (!(derivative_bound > 0.0)) throw InputError("jordan: derivative bound must be positive");
  const double limit = std::numbers::pi * std::ldexp(1.0, grid.bits - 1);
  if (phase_scale * grid.probe_radius * derivative_bound >= limit) {
    std::ostringstream msg;
    msg << "jordan: phase scale " << phase_scale << " aliases (S r B >= pi 2^(b-1)); try S = "
        << default_phase_scale(grid, derivative_bound);
    throw InputError(msg.str());
  }
  cell_width_ = std::numbers::pi / (phase_scale * grid.probe_radius);

  const int b = grid.bits;
  const int registers = grid.num_vars;
  const Eigen::Index size = Eigen::Index{1} << grid.total_qubits();
  const int mask = (1 << b) - 1;

  // Uniform superposition over the grid.
  state_ = ComplexVector::Constant(size, Complex(1.0 / std::sqrt(static_cast<double>(size)), 0.0));
  check_layer_norm(1.0, state_, "Hadamard layer");

  // Phase layer exp(i S f_m(x)).
  RealVector x(registers);
  RealVector probe(registers);
  for (Eigen::Index idx = 0; idx < size; ++idx) {
    for (int i = 0; i < registers; ++i) {
      x(i) = grid.unit_offset(static_cast<int>((idx >> (i * b)) & mask));
    }
    double surrogate = 0.0;
    for (std::size_t l = 0; l < scheme.offsets.size(); ++l) {
      const double a = scheme.coefficients[l];
      if (a == 0.0) continue;
      probe = point + (scheme.offsets[l] * grid.probe_radius) * x;
      surrogate += a * f(probe);
    }
    state_(idx) *= std::polar(1.0, phase_scale * surrogate);
  }
  check_layer_norm(1.0, state_, "phase oracle");

  // Inverse QFT along each register axis.
  const Eigen::Index n = Eigen::Index{1} << b;
  std::vector<Complex> line(static_cast<std::size_t>(n));
  for (int i = 0; i < registers; ++i) {
    const Eigen::Index stride = Eigen::Index{1} << (i * b);
    for (Eigen::Index base = 0; base < size; ++base) {
      if ((base >> (i * b)) & mask) continue;
      for (Eigen::Index k = 0; k < n; ++k) line[static_cast<std::size_t>(k)] = state_(base + k * stride);
      inverse_qft_inplace(line);
      for (Eigen::Index k = 0; k < n; ++k) state_(base + k * stride) = line[static_cast<std::size_t>(k)];
    }
    check_layer_norm(1.0, state_, "inverse QFT");
  }
}

RealVector JordanCircuit::marginal(int register_index) const {
  if (register_index < 0 || register_index >= grid_.num_vars) throw InputError("jordan: register index out of range");
  const int b = grid_.bits;
  const int mask = (1 << b) - 1;
  RealVector p = RealVector::Zero(Eigen::Index{1} << b);
  for (Eigen::Index idx = 0; idx < state_.size(); ++idx) {
    p((idx >> (register_index * b)) & mask) += std::norm(state_(idx));
  }
  return p;
}

JordanResult JordanCircuit::sample(int shots, std::uint64_t seed) const {
  if (shots < 1) throw InputError("jordan: need at least one shot");
  std::vector<double> prob(static_cast<std::size_t>(state_.size()));
  for (Eigen::Index i = 0; i < state_.size(); ++i) prob[static_cast<std::size_t>(i)] = std::norm(state_(i));
  std::discrete_distribution<std::size_t> dist(prob.begin(), prob.end());
  std::mt19937_64 rng(seed);
  std::vector<int> counts(prob.size(), 0);
  for (int s = 0; s < shots; ++s) ++counts[dist(rng)];
  // Ties go to the smallest basis index.
  const auto mode = static_cast<Eigen::Index>(std::max_element(counts.begin(), counts.end()) - counts.begin());

  JordanResult result;
  const int b = grid_.bits;
  const int mask = (1 << b) - 1;
  result.gradient.provenance = GradientProvenance::kJordanSim;
  result.gradient.values = RealVector::Zero(grid_.num_vars);
  for (int i = 0; i < grid_.num_vars; ++i) {
    const int reading = decode_signed(static_cast<int>((mode >> (i * b)) & mask), b);
    result.modal_outcome.push_back(reading);
    result.gradient.values(i) = decode(reading);
  }
  result.gradient.error_bound = cell_width_;
  result.modal_frequency = static_cast<double>(counts[static_cast<std::size_t>(mode)]) / shots;
  result.cell_width = cell_width_;
  result.phase_oracle_calls = 2 * order_ * shots;
  return result;
}

JordanResult jordan_estimate_gradient(const PhaseTarget& f, const RealVector& point, const GridRegisterSpec& grid,
                                      const CentralDifferenceScheme& scheme, double phase_scale, int shots,
                                      std::uint64_t seed, double derivative_bound) {
  return JordanCircuit(f, point, grid, scheme, phase_scale, derivative_bound).sample(shots, seed);
}

// ---------------------------------------------------------------------------
// Query accounting

long long phase_to_probability_cost_model(double eps, double constant) {
  if (!(eps > 0.0 && eps < 1.0 / 3.0)) throw InputError("phase conversion: eps must lie in (0, 1/3)");
  if (!(constant > 0.0)) throw InputError("phase conversion: constant must be positive");
  const double count = std::ceil(constant * std::log(1.0 / eps) * (1.0 - 1e-12));
  return std::max(1LL, static_cast<long long>(count));
}

void write_query_cost_csv(std::ostream& out, const std::vector<QueryCostRow>& rows) {
  out << "component,oracle_calls,phase_calls,estimated_paper_cost\n";
  for (const auto& row : rows) {
    out << row.component << ',' << row.oracle_calls << ',' << row.phase_calls << ','
        << format_double(row.estimated_paper_cost) << '\n';
  }
}

GradientProvider make_jordan_provider(const ObjectiveSpec& spec, const JordanProviderConfig& config,
                                      std::shared_ptr<QueryCounter> counter) {
  if (config.block_size < 1) throw InputError("jordan provider: block_size must be >= 1");
  if (config.shots < 1) throw InputError("jordan provider: shots must be >= 1");
  GridRegisterSpec probe_grid{config.block_size, config.bits, config.probe_radius};
  probe_grid.validate();
  const auto scheme = central_difference_coefficients(config.difference_order);
  const long long conversion = phase_to_probability_cost_model(config.phase_eps);
  if (!counter) counter = std::make_shared<QueryCounter>();
  auto test = std::make_shared<const HadamardTest>(spec.observable());
  auto calls = std::make_shared<std::uint64_t>(0);

  return [spec, config, scheme, conversion, counter, test, calls](const ControlGrid& u) {
    spec.require_grid(u);
    const int n = u.steps() + 1;
    // |d f / d u_j| <= delta ||mu|| for f = 1/2 - J1/2.
    const double bound = std::max(spec.delta() * spec.mu_norm(), 1e-300);
    const std::uint64_t call = (*calls)++;
    RealVector grad_j1 = RealVector::Zero(n);
    double cell = 0.0;
    for (int start = 0, block = 0; start < n; start += config.block_size, ++block) {
      const int width = std::min(config.block_size, n - start);
      const GridRegisterSpec grid{width, config.bits, config.probe_radius};
      const double scale = default_phase_scale(grid, bound);
      auto f = [&](const RealVector& v) {
        RealVector values = u.values();
        values.segment(start, width) = v;
        const auto evo = evolve(spec.h0(), spec.mu(), u.with_values(values), spec.psi0().amplitudes(),
                                spec.propagator());
        return test->probability_of_one(evo.final_state);
      };
      const std::uint64_t seed = config.seed + 1000003ULL * call + static_cast<std::uint64_t>(block);
      const auto result = jordan_estimate_gradient(f, u.values().segment(start, width), grid, scheme, scale,
                                                   config.shots, seed, bound);
      grad_j1.segment(start, width) = -2.0 * result.gradient.values;
      cell = std::max(cell, 2.0 * result.cell_width);
      counter->phase_calls += result.phase_oracle_calls;
      counter->oracle_calls += result.phase_oracle_calls * conversion;
    }
    ++counter->gradient_calls;
    ProviderResult out;
    out.value = evaluate(spec, u);
    out.gradient.values = grad_j1 - penalty_gradient(spec, u);
    out.gradient.provenance = GradientProvenance::kJordanSim;
    out.gradient.error_bound = cell;
    return out;
  };
}

}  // namespace qoc
