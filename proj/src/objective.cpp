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

#include "qocgrad/objective.hpp"

#include <cmath>
#include <sstream>

namespace qoc {

namespace {

double checked_norm(const SparseHermitianOperator& op, const char* name) {
  const double n = spectral_norm_estimate(op, 1e-12).value;
  if (n > 1.0 + ObjectiveSpec::kNormTolerance) {
    std::ostringstream msg;
    msg << "objective: ||" << name << "|| = " << n << " exceeds 1; rescale the operator";
    throw InputError(msg.str());
  }
  return n;
}

}  // namespace

ObjectiveSpec::ObjectiveSpec(SparseHermitianOperator h0, SparseHermitianOperator mu,
                             SparseHermitianOperator observable, double alpha, double horizon, int steps,
                             QuantumState psi0, PropagatorConfig propagator)
    : h0_(std::move(h0)),
      mu_(std::move(mu)),
      observable_(std::move(observable)),
      alpha_(alpha),
      horizon_(horizon),
      steps_(steps),
      psi0_(std::move(psi0)),
      propagator_(propagator) {
  const auto d = h0_.dimension();
  if (mu_.dimension() != d || observable_.dimension() != d || psi0_.dimension() != d) {
    throw InputError("objective: operator and state dimensions differ");
  }
  if (!(alpha_ >= 0.0) || !std::isfinite(alpha_)) throw InputError("objective: alpha must be non-negative");
  if (!(horizon_ > 0.0)) throw InputError("objective: horizon must be positive");
  if (steps_ < 1) throw InputError("objective: need at least one time step");
  propagator_.validate();
  h0_norm_ = checked_norm(h0_, "H0");
  mu_norm_ = checked_norm(mu_, "mu");
  observable_norm_ = checked_norm(observable_, "O");
}

void ObjectiveSpec::require_grid(const ControlGrid& u) const {
  if (u.steps() != steps_ || std::abs(u.horizon() - horizon_) > 1e-12 * horizon_) {
    std::ostringstream msg;
    msg << "objective: control grid (T=" << u.horizon() << ", N=" << u.steps() << ") does not match (T="
        << horizon_ << ", N=" << steps_ << ")";
    throw InputError(msg.str());
  }
}

ObjectiveSpec ObjectiveSpec::with_propagator(PropagatorConfig config) const {
  ObjectiveSpec copy = *this;
  config.validate();
  copy.propagator_ = config;
  return copy;
}

ObjectiveSpec ObjectiveSpec::with_alpha(double alpha) const {
  if (!(alpha >= 0.0)) throw InputError("objective: alpha must be non-negative");
  ObjectiveSpec copy = *this;
  copy.alpha_ = alpha;
  return copy;
}

std::string to_string(GradientProvenance provenance) {
  switch (provenance) {
    case GradientProvenance::kAdjoint:
      return "adjoint";
    case GradientProvenance::kFiniteDifference:
      return "finite_difference";
    case GradientProvenance::kJordanSim:
      return "jordan_sim";
  }
  return "unknown";
}

double evaluate_j1(const ObjectiveSpec& spec, const ControlGrid& u) {
  spec.require_grid(u);
  const auto evo = evolve(spec.h0(), spec.mu(), u, spec.psi0().amplitudes(), spec.propagator());
  return expectation(spec.observable(), evo.final_state);
}

double evaluate_j2(const ObjectiveSpec& spec, const ControlGrid& u) {
  spec.require_grid(u);
  return quadrature_penalty(u, spec.alpha());
}

double evaluate(const ObjectiveSpec& spec, const ControlGrid& u) {
  return evaluate_j1(spec, u) - evaluate_j2(spec, u);
}

RealVector penalty_gradient(const ObjectiveSpec& spec, const ControlGrid& u) {
  spec.require_grid(u);
  const RealVector w = trapezoid_weights(u.steps());
  return 2.0 * spec.alpha() * u.delta() * (w.array() * u.values().array()).matrix();
}

ValueAndGradient value_and_gradient_j1(const ObjectiveSpec& spec, const ControlGrid& u) {
  spec.require_grid(u);
  const auto& config = spec.propagator();
  if (config.method != PropagatorMethod::kMidpointExpm) {
    throw InputError("adjoint gradient requires the midpoint_expm propagator");
  }
  const ControlledHamiltonian ham(spec.h0(), spec.mu());
  const auto evo = evolve(spec.h0(), spec.mu(), u, spec.psi0().amplitudes(), config);
  const auto& states = evo.trajectory.states;
  const auto fractions = midpoint_fractions(config.substeps_per_interval);
  const int substeps = config.substeps_per_interval;
  const double tau = u.delta() / substeps;
  const double tol = config.expm_tolerance;
  const auto& nodes = u.values();

  ValueAndGradient out;
  out.j1 = expectation(spec.observable(), evo.final_state);
  RealVector grad = RealVector::Zero(u.steps() + 1);

  ComplexVector costate = apply(spec.observable(), evo.final_state);
  std::vector<ComplexVector> derivative_terms(static_cast<std::size_t>(substeps));
  std::vector<double> controls(static_cast<std::size_t>(substeps));
  if (states.size() != static_cast<std::size_t>(u.steps()) + 1) {
    throw std::logic_error("adjoint: trajectory length does not match the grid");
  }
  for (int j = u.steps() - 1; j >= 0; --j) {
    // Recompute the sub-step states of interval j together with dU/dc applied to them.
    ComplexVector phi = states[static_cast<std::size_t>(j)];
    if (phi.size() != costate.size()) throw std::logic_error("adjoint: trajectory/costate dimension mismatch");
    for (int s = 0; s < substeps; ++s) {
      const double theta = fractions[static_cast<std::size_t>(s)];
      const double c = (1.0 - theta) * nodes(j) + theta * nodes(j + 1);
      controls[static_cast<std::size_t>(s)] = c;
      auto both = expm_apply_with_derivative(ham, c, phi, tau, tol);
      derivative_terms[static_cast<std::size_t>(s)] = std::move(both.derivative);
      phi = std::move(both.value);
    }
    for (int s = substeps - 1; s >= 0; --s) {
      const double theta = fractions[static_cast<std::size_t>(s)];
      // dJ1/dc = 2 Re <lambda_{s+1}| dU/dc |phi_s>
      const double dc = 2.0 * costate.dot(derivative_terms[static_cast<std::size_t>(s)]).real();
      grad(j) += (1.0 - theta) * dc;
      grad(j + 1) += theta * dc;
      const double c = controls[static_cast<std::size_t>(s)];
      auto adjoint_matvec = [&](const ComplexVector& x, ComplexVector& y) {
        ham.apply_into(c, x, y, Complex(0.0, tau));
      };
      costate = detail::taylor_expm_action(adjoint_matvec, costate, tau * ham.norm_bound(c), tol);
    }
  }
  out.value = out.j1;
  out.gradient.values = std::move(grad);
  out.gradient.provenance = GradientProvenance::kAdjoint;
  out.gradient.error_bound = 4.0 * tol * (u.steps() + 1) * substeps;
  return out;
}

ValueAndGradient value_and_gradient(const ObjectiveSpec& spec, const ControlGrid& u) {
  ValueAndGradient out = value_and_gradient_j1(spec, u);
  out.value = out.j1 - evaluate_j2(spec, u);
  out.gradient.values -= penalty_gradient(spec, u);
  return out;
}

GradientEstimate gradient_adjoint(const ObjectiveSpec& spec, const ControlGrid& u) {
  return value_and_gradient(spec, u).gradient;
}

GradientEstimate gradient_fd(const ObjectiveSpec& spec, const ControlGrid& u, double h) {
  if (!(h > 0.0)) throw InputError("gradient_fd: step h must be positive");
  spec.require_grid(u);
  GradientEstimate out;
  out.provenance = GradientProvenance::kFiniteDifference;
  out.values = RealVector::Zero(u.steps() + 1);
  RealVector probe = u.values();
  for (int j = 0; j <= u.steps(); ++j) {
    const double saved = probe(j);
    probe(j) = saved + h;
    const double plus = evaluate(spec, u.with_values(probe));
    probe(j) = saved - h;
    const double minus = evaluate(spec, u.with_values(probe));
    probe(j) = saved;
    out.values(j) = (plus - minus) / (2.0 * h);
  }
  // Central-difference truncation: h^2/6 times the third-derivative bound.
  out.error_bound = h * h / 6.0 * derivative_bound(3, spec.delta(), spec.mu_norm());
  return out;
}

HessianEstimate hessian_fd(const ObjectiveSpec& spec, const ControlGrid& u, double h) {
  if (!(h > 0.0)) throw InputError("hessian_fd: step h must be positive");
  spec.require_grid(u);
  if (u.steps() > 64) {
    throw InputError("hessian_fd: N > 64 is too costly; coarsen the grid or probe a sub-block");
  }
  const int n = u.steps() + 1;
  Eigen::MatrixXd raw(n, n);
  RealVector probe = u.values();
  for (int k = 0; k < n; ++k) {
    const double saved = probe(k);
    probe(k) = saved + h;
    const RealVector plus = gradient_adjoint(spec, u.with_values(probe)).values;
    probe(k) = saved - h;
    const RealVector minus = gradient_adjoint(spec, u.with_values(probe)).values;
    probe(k) = saved;
    raw.col(k) = (plus - minus) / (2.0 * h);
  }
  HessianEstimate out;
  out.max_asymmetry = (raw - raw.transpose()).cwiseAbs().maxCoeff();
  out.matrix = 0.5 * (raw + raw.transpose());
  return out;
}

double derivative_bound(int k, double delta, double mu_norm) {
  if (k < 1) throw InputError("derivative_bound: order k must be >= 1");
  if (k > 12) throw InputError("derivative_bound: order k > 12 overflows the factorial guard");
  double factorial = 1.0;
  for (int i = 2; i <= k + 1; ++i) factorial *= i;
  return factorial * std::pow(delta * mu_norm, k);
}

double lipschitz_bound(const ObjectiveSpec& spec) {
  const double mu = spec.mu_norm();
  return spec.horizon() * spec.delta() * mu * mu + 2.0 * spec.alpha() * spec.delta();
}

double default_hessian_lipschitz(const ObjectiveSpec& spec) {
  return derivative_bound(3, spec.delta(), spec.mu_norm()) / spec.delta();
}

}  // namespace qoc
