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

#include "qocgrad/optimizer.hpp"

#include <cmath>
#include <limits>
#include <ostream>
#include <random>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "qocgrad/csv.hpp"

namespace qoc {

std::vector<std::string> OptimizerConfig::validate(const ObjectiveSpec& spec) const {
  std::vector<std::string> warnings;
  if (!(eta > 0.0) || !std::isfinite(eta)) throw InputError("optimizer: eta must be positive");
  if (k_max < 0) throw InputError("optimizer: k_max must be non-negative");
  if (!(noise_std >= 0.0)) throw InputError("optimizer: noise_std must be non-negative");
  if (!(eps >= 0.0)) throw InputError("optimizer: eps must be non-negative");
  if (!(failure_probability > 0.0 && failure_probability < 1.0)) {
    throw InputError("optimizer: failure_probability must lie in (0, 1)");
  }
  const double L = lipschitz_bound(spec);
  if (L > 0.0 && eta >= 1.0 / L) {
    std::ostringstream msg;
    msg << "optimizer: eta = " << eta << " is not below 1/L = " << 1.0 / L;
    if (!allow_large_eta) throw InputError(msg.str() + " (set allow_large_eta to override)");
    warnings.push_back(msg.str());
  }
  return warnings;
}

GradientProvider make_adjoint_provider(const ObjectiveSpec& spec) {
  return [spec](const ControlGrid& u) {
    auto vg = value_and_gradient(spec, u);
    return ProviderResult{vg.value, std::move(vg.gradient)};
  };
}

GradientProvider make_fd_provider(const ObjectiveSpec& spec, double h) {
  if (!(h > 0.0)) throw InputError("fd provider: step must be positive");
  return [spec, h](const ControlGrid& u) { return ProviderResult{evaluate(spec, u), gradient_fd(spec, u, h)}; };
}

std::string to_string(Termination reason) {
  switch (reason) {
    case Termination::kFirstOrder:
      return "first-order";
    case Termination::kMaxIterations:
      return "max-iterations";
    case Termination::kDiverged:
      return "diverged";
  }
  return "unknown";
}

IterateTrace ascend(const ObjectiveSpec& spec, const ControlGrid& u0, const OptimizerConfig& config,
                    const GradientProvider& provider) {
  spec.require_grid(u0);
  if (!provider) throw InputError("ascend: no gradient provider");
  IterateTrace trace;
  trace.warnings = config.validate(spec);
  trace.eta = config.eta;

  std::mt19937_64 rng(config.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const double eta = config.eta;

  ControlGrid u = u0;
  double j0 = 0.0;
  double sum_grad_sq = 0.0;
  double sum_noise_sq = 0.0;
  double sum_error_sq = 0.0;

  for (int k = 0;; ++k) {
    ProviderResult result = provider(u);
    IterateRecord rec;
    rec.k = k;
    rec.u = u.values();
    rec.objective = result.value;
    rec.l1_norm = l1_norm(u);
    const bool finite = std::isfinite(result.value) && result.gradient.values.allFinite();
    if (!finite) {
      rec.grad_norm = std::numeric_limits<double>::quiet_NaN();
      trace.records.push_back(std::move(rec));
      trace.termination = Termination::kDiverged;
      break;
    }
    rec.grad_norm = result.gradient.values.norm();
    RealVector truth;
    if (result.gradient.provenance == GradientProvenance::kAdjoint) {
      truth = result.gradient.values;
    } else {
      truth = gradient_adjoint(spec, u).values;
    }
    rec.true_grad_norm = truth.norm();
    rec.error_norm = (result.gradient.values - truth).norm();
    if (k == 0) j0 = rec.objective;
    rec.ascent_slack = rec.objective - (j0 + 0.5 * eta * sum_grad_sq - eta * sum_noise_sq - eta * sum_error_sq);

    const bool stationary = check_first_order(result.gradient, config.eps);
    if (stationary || k >= config.k_max) {
      trace.records.push_back(std::move(rec));
      trace.termination = stationary ? Termination::kFirstOrder : Termination::kMaxIterations;
      break;
    }

    RealVector zeta = RealVector::Zero(u.steps() + 1);
    if (config.noise_std > 0.0) {
      for (Eigen::Index i = 0; i < zeta.size(); ++i) zeta(i) = config.noise_std * normal(rng);
    }
    rec.noise_norm = zeta.norm();
    sum_grad_sq += rec.true_grad_norm * rec.true_grad_norm;
    sum_noise_sq += rec.noise_norm * rec.noise_norm;
    sum_error_sq += *rec.error_norm * *rec.error_norm;
    trace.records.push_back(std::move(rec));

    RealVector next = u.values() + eta * (result.gradient.values + zeta);
    if (!next.allFinite()) {
      trace.termination = Termination::kDiverged;
      break;
    }
    u = u.with_values(std::move(next));
  }
  return trace;
}

bool check_first_order(const GradientEstimate& g, double eps) { return g.values.norm() < eps; }

SecondOrderCertificate check_second_order(const Eigen::MatrixXd& hessian, double rho, double eps) {
  if (hessian.rows() != hessian.cols()) throw InputError("check_second_order: Hessian is not square");
  if (hessian.rows() > 65) throw InputError("check_second_order: dense eigensolve limited to N <= 64");
  if (!(rho >= 0.0) || !(eps >= 0.0)) throw InputError("check_second_order: rho and eps must be non-negative");
  SecondOrderCertificate cert;
  cert.threshold = std::sqrt(rho * eps);
  if (hessian.size() == 0) {
    cert.satisfied = true;
    return cert;
  }
  const Eigen::MatrixXd sym = 0.5 * (hessian + hessian.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(sym, Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) throw ConvergenceError("check_second_order: eigensolver failed");
  cert.largest_eigenvalue = solver.eigenvalues().maxCoeff();
  cert.satisfied = cert.largest_eigenvalue <= cert.threshold;
  return cert;
}

AscentReport ascent_property_check(const IterateTrace& trace, double eta, double eps) {
  AscentReport report;
  if (trace.records.empty()) return report;
  const double j0 = trace.records.front().objective;
  double sum_grad_sq = 0.0, sum_noise_sq = 0.0, sum_error_sq = 0.0;
  for (const auto& rec : trace.records) {
    if (!rec.error_norm) {
      throw InputError("ascent_property_check: trace lacks gradient-error records");
    }
    const double slack = rec.objective - (j0 + 0.5 * eta * sum_grad_sq - eta * sum_noise_sq - eta * sum_error_sq);
    const double eps_slack = rec.objective - (j0 + 0.5 * eta * sum_grad_sq - rec.k * eta * eps * eps / 4.0);
    const bool ok = slack >= 0.0;
    report.slack.push_back(slack);
    report.eps_form_slack.push_back(eps_slack);
    report.holds.push_back(ok);
    if (!ok) ++report.violations;
    sum_grad_sq += rec.true_grad_norm * rec.true_grad_norm;
    sum_noise_sq += rec.noise_norm * rec.noise_norm;
    sum_error_sq += *rec.error_norm * *rec.error_norm;
  }
  return report;
}

long long iteration_bound(double lipschitz, double j_star, double j0, double eps, double nu) {
  if (!(j_star >= j0)) throw InputError("iteration_bound: J* must be >= J(u0)");
  if (!(eps > 0.0)) throw InputError("iteration_bound: eps must be positive");
  if (!(nu > 0.0 && nu < 1.0)) throw InputError("iteration_bound: nu must lie in (0, 1)");
  if (!(lipschitz >= 0.0)) throw InputError("iteration_bound: L must be non-negative");
  const double k = 4.0 * lipschitz * (j_star - j0) / (eps * eps) * std::log(1.0 / nu);
  return static_cast<long long>(std::ceil(k * (1.0 - 1e-12)));
}

void write_trace_csv(std::ostream& out, const IterateTrace& trace) {
  out << "k,J,grad_norm,noise_norm,ascent_slack\n";
  for (const auto& rec : trace.records) {
    out << rec.k << ',' << format_double(rec.objective) << ',' << format_double(rec.grad_norm) << ','
        << format_double(rec.noise_norm) << ',' << format_double(rec.ascent_slack) << '\n';
  }
}

}  // namespace qoc
