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

#include "qocgrad/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <sstream>

#include "qocgrad/csv.hpp"

namespace qoc {

namespace {

constexpr Complex kMinusI{0.0, -1.0};

void require_finite(const ComplexVector& v, const char* what) {
  if (!v.allFinite()) throw InputError(std::string(what) + ": non-finite input vector");
}

double control_at(const ControlGrid& grid, int j, double theta) {
  const auto& u = grid.values();
  return (1.0 - theta) * u(j) + theta * u(j + 1);
}

void require_interval(const ControlGrid& grid, int j) {
  if (j < 0 || j >= grid.steps()) {
    std::ostringstream msg;
    msg << "interval index " << j << " outside [0, " << grid.steps() << ")";
    throw InputError(msg.str());
  }
}

ComplexVector midpoint_interval(const ControlledHamiltonian& ham, const ControlGrid& grid, int j,
                                ComplexVector psi, const PropagatorConfig& config, double direction) {
  const auto fractions = midpoint_fractions(config.substeps_per_interval);
  const double tau = direction * grid.delta() / config.substeps_per_interval;
  auto run = [&](double theta) {
    const double c = control_at(grid, j, theta);
    auto matvec = [&](const ComplexVector& x, ComplexVector& y) { ham.apply_into(c, x, y, kMinusI * tau); };
    psi = detail::taylor_expm_action(matvec, psi, std::abs(tau) * ham.norm_bound(c), config.expm_tolerance);
  };
  if (direction > 0) {
    for (double theta : fractions) run(theta);
  } else {
    for (auto it = fractions.rbegin(); it != fractions.rend(); ++it) run(*it);
  }
  return psi;
}

ComplexVector dyson_interval(const ControlledHamiltonian& ham, const ControlGrid& grid, int j,
                             const ComplexVector& psi, int order, int points) {
  if (order < 0 || order > 6) throw InputError("dyson: order K must lie in 0..6");
  if (points < 1) throw InputError("dyson: need at least one sample point");
  if (std::pow(static_cast<double>(points), order) > 1e7) {
    throw InputError("dyson: M^K exceeds 1e7 sample tuples; lower K or M");
  }
  const double tau = grid.delta() / points;
  // components[k] holds the degree-k part of the time-ordered product so far.
  std::vector<ComplexVector> components(static_cast<std::size_t>(order) + 1,
                                        ComplexVector::Zero(psi.size()));
  components[0] = psi;
  ComplexVector chain, next;
  for (int i = 0; i < points; ++i) {
    const double c = control_at(grid, j, (i + 0.5) / points);
    // Multiply on the left by exp(-i tau H(s_i)) truncated at total degree K:
    // source degree l picks up (-i tau H)^m / m! into degree l + m.
    std::vector<ComplexVector> updated = components;
    for (int source = 0; source < order; ++source) {
      chain = components[static_cast<std::size_t>(source)];
      for (int m = 1; source + m <= order; ++m) {
        ham.apply_into(c, chain, next, kMinusI * tau / static_cast<double>(m));
        chain.swap(next);
        updated[static_cast<std::size_t>(source + m)] += chain;
      }
    }
    components.swap(updated);
  }
  ComplexVector out = ComplexVector::Zero(psi.size());
  for (const auto& part : components) out += part;
  return out;
}

}  // namespace

std::string to_string(PropagatorMethod method) {
  return method == PropagatorMethod::kDyson ? "dyson" : "midpoint_expm";
}

PropagatorMethod propagator_method_from_string(const std::string& name) {
  if (name == "midpoint_expm" || name == "midpoint") return PropagatorMethod::kMidpointExpm;
  if (name == "dyson") return PropagatorMethod::kDyson;
  throw InputError("unknown propagator method '" + name + "'");
}

void PropagatorConfig::validate() const {
  if (dyson_order < 0 || dyson_order > 6) throw InputError("propagator: dyson_order must lie in 0..6");
  if (dyson_quadrature_points < 1) throw InputError("propagator: dyson_quadrature_points must be >= 1");
  if (substeps_per_interval < 1) throw InputError("propagator: substeps_per_interval must be >= 1");
  if (!(expm_tolerance > 0.0 && expm_tolerance <= 1e-6)) {
    throw InputError("propagator: expm_tolerance must lie in (0, 1e-6]");
  }
  if (method == PropagatorMethod::kDyson &&
      std::pow(static_cast<double>(dyson_quadrature_points), dyson_order) > 1e7) {
    throw InputError("propagator: M^K exceeds 1e7 sample tuples");
  }
}

ControlledHamiltonian::ControlledHamiltonian(SparseHermitianOperator h0, SparseHermitianOperator mu)
    : h0_(std::move(h0)), mu_(std::move(mu)) {
  if (h0_.dimension() != mu_.dimension()) throw InputError("ControlledHamiltonian: dimension mismatch");
  h0_bound_ = h0_.row_sum_norm();
  mu_bound_ = mu_.row_sum_norm();
}

void ControlledHamiltonian::apply_into(double c, const ComplexVector& x, ComplexVector& y, Complex scale,
                                       bool accumulate) const {
  h0_.apply_into(x, y, scale, accumulate);
  if (c != 0.0) mu_.apply_into(x, y, -c * scale, true);
}

namespace detail {

ComplexVector taylor_expm_action(const MatVec& matvec, const ComplexVector& v, double norm_bound, double tol) {
  require_finite(v, "expm");
  if (!(tol > 0.0)) throw InputError("expm: tolerance must be positive");
  if (!std::isfinite(norm_bound)) throw InputError("expm: non-finite operator norm");
  const double vnorm = v.norm();
  if (norm_bound == 0.0 || vnorm == 0.0) return v;
  // Scale so each sub-step has ||A||/s <= 1, then sum Taylor terms until the
  // geometric tail bound drops below the per-sub-step share of tol.
  const int substeps = std::max(1, static_cast<int>(std::ceil(norm_bound)));
  const double x = norm_bound / substeps;
  const double budget = tol / substeps;
  constexpr int kMaxTerms = 60;
  ComplexVector result = v;
  ComplexVector term, next;
  for (int s = 0; s < substeps; ++s) {
    term = result;
    const double base = result.norm();
    for (int k = 1; k <= kMaxTerms; ++k) {
      matvec(term, next);
      next /= static_cast<double>(k) * substeps;
      term.swap(next);
      result += term;
      const double ratio = x / (k + 1);
      const double tail = term.norm() * ratio / (1.0 - ratio);
      if (ratio < 0.5 && tail <= budget * base) break;
      if (k == kMaxTerms) throw ConvergenceError("expm: Taylor series did not converge");
    }
  }
  if (!result.allFinite()) throw ConvergenceError("expm: non-finite result");
  return result;
}

}  // namespace detail

ComplexVector expm_apply(const SparseHermitianOperator& op, const ComplexVector& v, double tau, double tol) {
  if (op.dimension() != v.size()) throw InputError("expm_apply: dimension mismatch");
  if (!std::isfinite(tau)) throw InputError("expm_apply: non-finite time step");
  auto matvec = [&](const ComplexVector& x, ComplexVector& y) { op.apply_into(x, y, kMinusI * tau); };
  return detail::taylor_expm_action(matvec, v, std::abs(tau) * op.row_sum_norm(), tol);
}

ExpmWithDerivative expm_apply_with_derivative(const ControlledHamiltonian& hamiltonian, double c,
                                              const ComplexVector& v, double tau, double tol) {
  const auto d = hamiltonian.dimension();
  if (v.size() != d) throw InputError("expm_apply_with_derivative: dimension mismatch");
  // Generator [[A, E], [0, A]] with A = -i tau H(c), E = dA/dc = i tau mu.
  // exp of it applied to (0, v) gives (L(A, E) v, exp(A) v).
  ComplexVector stacked = ComplexVector::Zero(2 * d);
  stacked.tail(d) = v;
  ComplexVector top, bottom, tmp;
  auto matvec = [&](const ComplexVector& x, ComplexVector& y) {
    y.resize(2 * d);
    top = x.head(d);
    bottom = x.tail(d);
    hamiltonian.apply_into(c, top, tmp, kMinusI * tau);
    y.head(d) = tmp;
    hamiltonian.dipole().apply_into(bottom, tmp, Complex(0.0, tau));
    y.head(d) += tmp;
    hamiltonian.apply_into(c, bottom, tmp, kMinusI * tau);
    y.tail(d) = tmp;
  };
  const double bound = std::abs(tau) * (hamiltonian.norm_bound(c) + hamiltonian.dipole().row_sum_norm());
  const ComplexVector out = detail::taylor_expm_action(matvec, stacked, bound, tol);
  return {out.tail(d), out.head(d)};
}

std::vector<double> midpoint_fractions(int substeps) {
  if (substeps < 1) throw InputError("midpoint_fractions: need at least one sub-step");
  std::vector<double> theta(static_cast<std::size_t>(substeps));
  for (int s = 0; s < substeps; ++s) theta[static_cast<std::size_t>(s)] = (s + 0.5) / substeps;
  return theta;
}

ComplexVector step(const SparseHermitianOperator& h0, const SparseHermitianOperator& mu, const ControlGrid& grid,
                   int j, const ComplexVector& psi_j, const PropagatorConfig& config) {
  config.validate();
  require_interval(grid, j);
  return midpoint_interval(ControlledHamiltonian(h0, mu), grid, j, psi_j, config, 1.0);
}

ComplexVector dyson_series(const SparseHermitianOperator& h0, const SparseHermitianOperator& mu,
                           const ControlGrid& grid, int j, const ComplexVector& psi_j, int order, int points) {
  require_interval(grid, j);
  require_finite(psi_j, "dyson");
  return dyson_interval(ControlledHamiltonian(h0, mu), grid, j, psi_j, order, points);
}

namespace {

ComplexVector checked_dyson(const ControlledHamiltonian& ham, const ControlGrid& grid, int j,
                            const ComplexVector& psi, int order, int points) {
  ComplexVector out = dyson_interval(ham, grid, j, psi, order, points);
  const double in_norm = psi.norm();
  const double out_norm = out.norm();
  const double drift = in_norm > 0.0 ? std::abs(out_norm / in_norm - 1.0) : 0.0;
  if (!(drift < 1e-6)) {
    std::ostringstream msg;
    msg << "dyson: series under-converged (norm drift " << drift << " on interval " << j
        << "); increase the order K or the sample count M, or refine the grid";
    throw ConvergenceError(msg.str());
  }
  if (out_norm > 0.0) out *= in_norm / out_norm;
  return out;
}

}  // namespace

ComplexVector dyson_step(const SparseHermitianOperator& h0, const SparseHermitianOperator& mu,
                         const ControlGrid& grid, int j, const ComplexVector& psi_j, int order, int points) {
  require_interval(grid, j);
  require_finite(psi_j, "dyson");
  return checked_dyson(ControlledHamiltonian(h0, mu), grid, j, psi_j, order, points);
}

Evolution evolve(const SparseHermitianOperator& h0, const SparseHermitianOperator& mu, const ControlGrid& grid,
                 const ComplexVector& psi0, const PropagatorConfig& config) {
  config.validate();
  if (psi0.size() != h0.dimension()) throw InputError("evolve: state dimension does not match operators");
  require_finite(psi0, "evolve");
  const ControlledHamiltonian ham(h0, mu);
  Evolution result;
  result.trajectory.config = config;
  result.trajectory.states.reserve(static_cast<std::size_t>(grid.steps()) + 1);
  result.trajectory.states.push_back(psi0);
  ComplexVector psi = psi0;
  for (int j = 0; j < grid.steps(); ++j) {
    if (config.method == PropagatorMethod::kDyson) {
      psi = checked_dyson(ham, grid, j, psi, config.dyson_order, config.dyson_quadrature_points);
    } else {
      psi = midpoint_interval(ham, grid, j, std::move(psi), config, 1.0);
    }
    result.trajectory.states.push_back(psi);
  }
  result.final_state = psi;
  return result;
}

ComplexVector evolve_backward(const SparseHermitianOperator& h0, const SparseHermitianOperator& mu,
                              const ControlGrid& grid, const ComplexVector& psi_final,
                              const PropagatorConfig& config) {
  config.validate();
  if (config.method != PropagatorMethod::kMidpointExpm) {
    throw InputError("evolve_backward: only the midpoint rule is time-reversible");
  }
  if (psi_final.size() != h0.dimension()) throw InputError("evolve_backward: dimension mismatch");
  const ControlledHamiltonian ham(h0, mu);
  ComplexVector psi = psi_final;
  for (int j = grid.steps() - 1; j >= 0; --j) psi = midpoint_interval(ham, grid, j, std::move(psi), config, -1.0);
  return psi;
}

void write_trajectory_csv(std::ostream& out, const ControlGrid& grid, const TrajectoryRecord& record) {
  if (record.states.empty()) return;
  const auto d = record.states.front().size();
  out << "j,t";
  for (Eigen::Index i = 0; i < d; ++i) out << ",re_amp_" << i;
  for (Eigen::Index i = 0; i < d; ++i) out << ",im_amp_" << i;
  out << '\n';
  for (std::size_t j = 0; j < record.states.size(); ++j) {
    const auto& s = record.states[j];
    out << j << ',' << format_double(grid.node_time(static_cast<int>(j)));
    for (Eigen::Index i = 0; i < d; ++i) out << ',' << format_double(s(i).real());
    for (Eigen::Index i = 0; i < d; ++i) out << ',' << format_double(s(i).imag());
    out << '\n';
  }
}

}  // namespace qoc
