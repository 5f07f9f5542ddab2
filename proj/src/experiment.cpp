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

#include "qocgrad/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numbers>
#include <random>
#include <set>
#include <sstream>
#include <type_traits>

#include "json.hpp"

#include "qocgrad/csv.hpp"

namespace qoc {

using nlohmann::json;

namespace {

// Reads typed keys from one JSON section and rejects anything it did not read.
class SectionReader {
 public:
  SectionReader(const json& root, std::string name) : name_(std::move(name)) {
    if (!root.contains(name_)) return;
    node_ = &root.at(name_);
    if (!node_->is_object()) throw InputError("config: section '" + name_ + "' must be an object");
  }

  template <typename T>
  void read(const std::string& key, T& out) {
    seen_.insert(key);
    if (!node_ || !node_->contains(key)) return;
    const json& v = node_->at(key);
    try {
      if constexpr (std::is_same_v<T, bool>) {
        if (!v.is_boolean()) fail(key, "a boolean");
        out = v.get<bool>();
      } else if constexpr (std::is_integral_v<T>) {
        if (!v.is_number_integer()) fail(key, "an integer");
        if constexpr (std::is_unsigned_v<T>) {
          if (v.get<long long>() < 0) fail(key, "a non-negative integer");
        }
        out = v.get<T>();
      } else if constexpr (std::is_floating_point_v<T>) {
        if (!v.is_number()) fail(key, "a number");
        out = v.get<T>();
      } else if constexpr (std::is_same_v<T, std::string>) {
        if (!v.is_string()) fail(key, "a string");
        out = v.get<std::string>();
      } else {
        if (!v.is_array()) fail(key, "an array");
        out = v.get<T>();
      }
    } catch (const json::exception& e) {
      throw InputError("config: " + name_ + "." + key + ": " + e.what());
    }
  }

  /// Raw access for keys with more than one accepted type.
  const json* raw(const std::string& key) {
    seen_.insert(key);
    if (!node_ || !node_->contains(key)) return nullptr;
    return &node_->at(key);
  }

  void finish() const {
    if (!node_) return;
    for (const auto& item : node_->items()) {
      if (!seen_.count(item.key())) throw InputError("config: unknown key '" + name_ + "." + item.key() + "'");
    }
  }

 private:
  [[noreturn]] void fail(const std::string& key, const char* what) const {
    throw InputError("config: " + name_ + "." + key + " must be " + what);
  }

  std::string name_;
  const json* node_ = nullptr;
  std::set<std::string> seen_;
};

const std::set<std::string> kSections{"model",     "grid",    "objective", "propagator", "optimizer", "gradient",
                                      "jordan",    "gradcheck", "scaling", "qgrad",      "simulate",  "output"};

void require_choice(const std::string& value, std::initializer_list<const char*> choices, const char* key) {
  for (const char* c : choices) {
    if (value == c) return;
  }
  throw InputError(std::string("config: invalid value '") + value + "' for " + key);
}

std::filesystem::path prepare_output(const ExperimentConfig& config) {
  std::filesystem::path dir(config.output_directory);
  std::filesystem::create_directories(dir);
  return dir;
}

std::ofstream open_csv(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path.string());
  return out;
}

SparseHermitianOperator read_operator(const json& node, Eigen::Index dimension, const char* name) {
  // Entries [i, j, re] or [i, j, re, im]; the Hermitian partner is implied.
  if (!node.is_array()) throw InputError(std::string("operator file: '") + name + "' must be an entry list");
  ComplexMatrix dense = ComplexMatrix::Zero(dimension, dimension);
  for (const auto& entry : node) {
    if (!entry.is_array() || entry.size() < 3 || entry.size() > 4) {
      throw InputError(std::string("operator file: malformed entry in '") + name + "'");
    }
    const auto i = entry[0].get<Eigen::Index>();
    const auto j = entry[1].get<Eigen::Index>();
    if (i < 0 || j < 0 || i >= dimension || j >= dimension) {
      throw InputError(std::string("operator file: index out of range in '") + name + "'");
    }
    const Complex value(entry[2].get<double>(), entry.size() == 4 ? entry[3].get<double>() : 0.0);
    dense(i, j) = value;
    dense(j, i) = std::conj(value);
  }
  return SparseHermitianOperator::from_dense(dense);
}

struct LoadedModel {
  SparseHermitianOperator h0;
  SparseHermitianOperator mu;
  SparseHermitianOperator observable;
  std::vector<double> grid;
  std::optional<QuantumState> psi0;
};

LoadedModel load_model(const ModelSection& model) {
  if (model.kind == "example") {
    auto m = build_example_model(model.example);
    return {std::move(m.h0), std::move(m.mu), std::move(m.observable), model.example.grid(), std::nullopt};
  }
  if (model.kind == "random") {
    const auto d = model.random_dimension;
    if (d < 1) throw InputError("config: model.random_dimension must be positive");
    std::vector<double> grid(static_cast<std::size_t>(d));
    for (Eigen::Index i = 0; i < d; ++i) grid[static_cast<std::size_t>(i)] = static_cast<double>(i);
    return {random_hermitian(d, model.random_seed), random_hermitian(d, model.random_seed + 1),
            random_hermitian(d, model.random_seed + 2), grid, std::nullopt};
  }
  std::ifstream in(model.file);
  if (!in) throw InputError("config: cannot open model file '" + model.file + "'");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw InputError(std::string("model file: ") + e.what());
  }
  for (const auto& item : doc.items()) {
    if (item.key() != "dimension" && item.key() != "h0" && item.key() != "mu" && item.key() != "observable" &&
        item.key() != "psi0") {
      throw InputError("model file: unknown key '" + item.key() + "'");
    }
  }
  const auto d = doc.at("dimension").get<Eigen::Index>();
  if (d < 1) throw InputError("model file: dimension must be positive");
  LoadedModel out{read_operator(doc.at("h0"), d, "h0"), read_operator(doc.at("mu"), d, "mu"),
                  read_operator(doc.at("observable"), d, "observable"), {}, std::nullopt};
  for (Eigen::Index i = 0; i < d; ++i) out.grid.push_back(static_cast<double>(i));
  if (doc.contains("psi0")) {
    const auto& amps = doc.at("psi0");
    if (!amps.is_array() || static_cast<Eigen::Index>(amps.size()) != d) {
      throw InputError("model file: psi0 must list one [re, im] pair per basis state");
    }
    ComplexVector v(d);
    for (Eigen::Index i = 0; i < d; ++i) {
      v(i) = Complex(amps[static_cast<std::size_t>(i)].at(0).get<double>(),
                     amps[static_cast<std::size_t>(i)].at(1).get<double>());
    }
    out.psi0 = QuantumState::normalized(std::move(v));
  }
  return out;
}

QuantumState initial_state(const ModelSection& model, const LoadedModel& loaded) {
  const auto d = loaded.h0.dimension();
  if (model.initial_state == "gaussian") return gaussian_state(loaded.grid, model.initial_center, model.initial_width);
  if (model.initial_state == "basis") {
    if (model.initial_basis_index < 0 || model.initial_basis_index >= d) {
      throw InputError("config: model.initial_basis_index out of range");
    }
    return QuantumState::basis(d, model.initial_basis_index);
  }
  if (model.initial_state == "file") {
    if (!loaded.psi0) throw InputError("config: model file has no psi0");
    return *loaded.psi0;
  }
  return random_state(d, model.random_seed + 3);
}

GradientProvider make_provider(const ExperimentConfig& config, const ObjectiveSpec& spec,
                               std::shared_ptr<QueryCounter> counter) {
  if (config.gradient.provider == "adjoint") return make_adjoint_provider(spec);
  if (config.gradient.provider == "fd") return make_fd_provider(spec, config.gradient.fd_step);
  return make_jordan_provider(spec, config.jordan, std::move(counter));
}

double elapsed_seconds(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

}  // namespace

// ---------------------------------------------------------------------------
// Configuration

ExperimentConfig parse_config(const std::string& json_text) {
  json root;
  try {
    root = json::parse(json_text.empty() ? std::string("{}") : json_text);
  } catch (const json::exception& e) {
    throw InputError(std::string("config: ") + e.what());
  }
  if (!root.is_object()) throw InputError("config: top level must be an object");
  for (const auto& item : root.items()) {
    if (!kSections.count(item.key())) throw InputError("config: unknown section '" + item.key() + "'");
  }

  ExperimentConfig c;
  {
    SectionReader r(root, "model");
    r.read("kind", c.model.kind);
    long long dimension = c.model.example.dimension;
    r.read("dimension", dimension);
    c.model.example.dimension = dimension;
    r.read("laplacian_scale", c.model.example.laplacian_scale);
    r.read("r0", c.model.example.r0);
    r.read("gamma0", c.model.example.gamma0);
    r.read("coordinates", c.model.example.coordinates);
    r.read("normalize", c.model.example.normalize);
    long long random_dimension = c.model.random_dimension;
    r.read("random_dimension", random_dimension);
    c.model.random_dimension = random_dimension;
    r.read("random_seed", c.model.random_seed);
    r.read("file", c.model.file);
    r.read("initial_state", c.model.initial_state);
    r.read("initial_center", c.model.initial_center);
    r.read("initial_width", c.model.initial_width);
    long long basis = c.model.initial_basis_index;
    r.read("initial_basis_index", basis);
    c.model.initial_basis_index = basis;
    r.finish();
    require_choice(c.model.kind, {"example", "random", "file"}, "model.kind");
    require_choice(c.model.initial_state, {"gaussian", "basis", "random", "file"}, "model.initial_state");
    if (c.model.kind == "example") c.model.example.validate();
  }
  {
    SectionReader r(root, "grid");
    r.read("horizon", c.grid.horizon);
    r.read("steps", c.grid.steps);
    r.read("delta", c.grid.delta);
    r.read("eps", c.grid.eps);
    r.read("smooth", c.grid.smooth);
    r.read("step_constant", c.grid.step_constant);
    r.finish();
    resolve_steps(c.grid);
  }
  {
    SectionReader r(root, "objective");
    if (const json* a = r.raw("alpha"); a && !a->is_null()) {
      if (!a->is_number()) throw InputError("config: objective.alpha must be a number");
      c.objective.alpha = a->get<double>();
      if (!(*c.objective.alpha >= 0.0)) throw InputError("config: objective.alpha must be non-negative");
    }
    r.finish();
  }
  {
    SectionReader r(root, "propagator");
    std::string method = to_string(c.propagator.method);
    r.read("method", method);
    c.propagator.method = propagator_method_from_string(method);
    r.read("dyson_order", c.propagator.dyson_order);
    r.read("dyson_quadrature_points", c.propagator.dyson_quadrature_points);
    r.read("substeps_per_interval", c.propagator.substeps_per_interval);
    r.read("expm_tolerance", c.propagator.expm_tolerance);
    r.finish();
    c.propagator.validate();
  }
  {
    SectionReader r(root, "optimizer");
    if (const json* eta = r.raw("eta")) {
      if (eta->is_string() && eta->get<std::string>() == "auto") {
        c.eta_auto = true;
      } else if (eta->is_number()) {
        c.optimizer.eta = eta->get<double>();
      } else {
        throw InputError("config: optimizer.eta must be a number or \"auto\"");
      }
    }
    r.read("k_max", c.optimizer.k_max);
    r.read("noise_std", c.optimizer.noise_std);
    r.read("eps", c.optimizer.eps);
    r.read("seed", c.optimizer.seed);
    r.read("hessian_lipschitz", c.optimizer.hessian_lipschitz);
    r.read("failure_probability", c.optimizer.failure_probability);
    r.read("allow_large_eta", c.optimizer.allow_large_eta);
    r.finish();
  }
  {
    SectionReader r(root, "gradient");
    r.read("provider", c.gradient.provider);
    r.read("fd_step", c.gradient.fd_step);
    r.finish();
    require_choice(c.gradient.provider, {"adjoint", "fd", "jordan_sim"}, "gradient.provider");
  }
  {
    SectionReader r(root, "jordan");
    r.read("bits", c.jordan.bits);
    r.read("difference_order", c.jordan.difference_order);
    r.read("block_size", c.jordan.block_size);
    r.read("probe_radius", c.jordan.probe_radius);
    r.read("shots", c.jordan.shots);
    r.read("phase_eps", c.jordan.phase_eps);
    r.read("seed", c.jordan.seed);
    r.finish();
  }
  {
    SectionReader r(root, "gradcheck");
    long long dimension = c.gradcheck.dimension;
    r.read("dimension", dimension);
    c.gradcheck.dimension = dimension;
    r.read("steps", c.gradcheck.steps);
    r.read("horizon", c.gradcheck.horizon);
    r.read("alpha", c.gradcheck.alpha);
    r.read("samples", c.gradcheck.samples);
    r.read("h", c.gradcheck.h);
    r.read("control_scale", c.gradcheck.control_scale);
    r.read("seed", c.gradcheck.seed);
    r.read("zero_mu", c.gradcheck.zero_mu);
    r.read("inject_sign_flip", c.gradcheck.inject_sign_flip);
    r.finish();
  }
  {
    SectionReader r(root, "scaling");
    r.read("horizon", c.scaling.horizon);
    r.read("base_steps", c.scaling.base_steps);
    r.read("doublings", c.scaling.doublings);
    long long dimension = c.scaling.dimension;
    r.read("dimension", dimension);
    c.scaling.dimension = dimension;
    r.read("seed", c.scaling.seed);
    r.read("control_amplitude", c.scaling.control_amplitude);
    r.read("dyson_base_delta", c.scaling.dyson_base_delta);
    r.read("dyson_quadrature_points", c.scaling.dyson_quadrature_points);
    r.read("dyson_orders", c.scaling.dyson_orders);
    r.finish();
  }
  {
    SectionReader r(root, "qgrad");
    r.read("bits", c.qgrad.bits);
    r.read("difference_order", c.qgrad.difference_order);
    r.read("probe_radius", c.qgrad.probe_radius);
    r.read("shots", c.qgrad.shots);
    r.read("repeats", c.qgrad.repeats);
    r.read("phase_eps", c.qgrad.phase_eps);
    r.read("seed", c.qgrad.seed);
    long long dimension = c.qgrad.dimension;
    r.read("dimension", dimension);
    c.qgrad.dimension = dimension;
    r.read("steps", c.qgrad.steps);
    r.read("horizon", c.qgrad.horizon);
    r.read("control_amplitude", c.qgrad.control_amplitude);
    r.read("coordinates", c.qgrad.coordinates);
    r.read("linear_readings", c.qgrad.linear_readings);
    r.read("linear_threshold", c.qgrad.linear_threshold);
    r.read("qoc_threshold", c.qgrad.qoc_threshold);
    r.finish();
  }
  {
    SectionReader r(root, "simulate");
    r.read("control", c.simulate.control);
    r.read("amplitude", c.simulate.amplitude);
    r.read("frequency", c.simulate.frequency);
    r.finish();
    require_choice(c.simulate.control, {"zero", "constant", "sine"}, "simulate.control");
  }
  {
    SectionReader r(root, "output");
    r.read("directory", c.output_directory);
    r.finish();
    if (c.output_directory.empty()) throw InputError("config: output.directory must not be empty");
  }
  return c;
}

ExperimentConfig load_config(const std::string& path, const std::vector<std::string>& overrides) {
  json root = json::object();
  if (!path.empty()) {
    std::ifstream in(path);
    if (!in) throw InputError("config: cannot open '" + path + "'");
    try {
      root = json::parse(in);
    } catch (const json::exception& e) {
      throw InputError(std::string("config: ") + e.what());
    }
    if (!root.is_object()) throw InputError("config: top level must be an object");
  }
  for (const auto& item : overrides) {
    const auto eq = item.find('=');
    const auto dot = item.find('.');
    if (eq == std::string::npos || dot == std::string::npos || dot > eq || dot == 0 || dot + 1 == eq) {
      throw InputError("override '" + item + "' is not of the form section.key=value");
    }
    const std::string section = item.substr(0, dot);
    const std::string key = item.substr(dot + 1, eq - dot - 1);
    const std::string text = item.substr(eq + 1);
    json value;
    try {
      value = json::parse(text);
    } catch (const json::exception&) {
      value = text;
    }
    if (!root.contains(section)) root[section] = json::object();
    root[section][key] = value;
  }
  return parse_config(root.dump());
}

int resolve_steps(const GridSection& grid) {
  if (!(grid.horizon > 0.0) || !std::isfinite(grid.horizon)) throw InputError("config: grid.horizon must be positive");
  if (grid.steps > 0) return grid.steps;
  if (grid.steps < 0) throw InputError("config: grid.steps must be non-negative");
  if (grid.eps > 0.0) return choose_num_steps(grid.horizon, grid.eps, grid.smooth, grid.step_constant);
  if (!(grid.delta > 0.0)) throw InputError("config: grid needs steps, delta > 0 or eps > 0");
  const double n = std::ceil(grid.horizon / grid.delta * (1.0 - 1e-12));
  if (n > 1e8) throw InputError("config: grid.delta yields too many steps");
  return std::max(1, static_cast<int>(n));
}

ObjectiveSpec build_spec(const ExperimentConfig& config) {
  auto loaded = load_model(config.model);
  auto psi0 = initial_state(config.model, loaded);
  const double horizon = config.grid.horizon;
  const double alpha = config.objective.alpha.value_or(4.0 / horizon);
  return ObjectiveSpec(std::move(loaded.h0), std::move(loaded.mu), std::move(loaded.observable), alpha, horizon,
                       resolve_steps(config.grid), std::move(psi0), config.propagator);
}

// ---------------------------------------------------------------------------
// optimize

int cmd_optimize(const ExperimentConfig& config, std::ostream& log) {
  const auto start = std::chrono::steady_clock::now();
  const ObjectiveSpec spec = build_spec(config);
  OptimizerConfig opt = config.optimizer;
  if (config.eta_auto) opt.eta = 1.0 / (2.0 * lipschitz_bound(spec));
  if (!spec.alpha_meets_l1_condition()) {
    log << "warning: alpha = " << spec.alpha() << " is below 2/T; the a-priori L1 bound does not apply\n";
  }
  auto counter = std::make_shared<QueryCounter>();
  const auto trace = ascend(spec, spec.zero_control(), opt, make_provider(config, spec, counter));
  for (const auto& w : trace.warnings) log << "warning: " << w << '\n';

  const auto dir = prepare_output(config);
  {
    auto out = open_csv(dir / "loss.csv");
    write_trace_csv(out, trace);
  }
  if (!trace.records.empty()) {
    auto out = open_csv(dir / "control.csv");
    const auto& last = trace.records.back();
    if (last.u.allFinite()) write_control_csv(out, ControlGrid(spec.horizon(), spec.steps(), last.u));
  }
  if (config.gradient.provider == "jordan_sim") {
    auto out = open_csv(dir / "query_cost.csv");
    const double rho = opt.failure_probability;
    // Without a stationarity target, charge the provider's own resolution (two grid cells).
    const double resolution = 2.0 * spec.delta() * spec.mu_norm() / std::ldexp(1.0, config.jordan.bits - 2);
    const double target = opt.eps > 0.0 ? opt.eps : resolution;
    const double asymptotic = spec.horizon() * std::log((spec.steps() + 1) / rho) / target;
    write_query_cost_csv(out, {{"optimize", counter->oracle_calls, counter->phase_calls, asymptotic}});
  }

  const auto& last = trace.records.back();
  log << "termination: " << to_string(trace.termination) << '\n'
      << "iterations: " << last.k << '\n'
      << "final J: " << format_double(last.objective) << '\n'
      << "final |g|: " << format_double(last.grad_norm) << '\n'
      << "eta: " << format_double(trace.eta) << "  L: " << format_double(lipschitz_bound(spec)) << '\n'
      << "wall time: " << elapsed_seconds(start) << " s\n";
  return trace.termination == Termination::kDiverged ? kExitDiverged : kExitOk;
}

// ---------------------------------------------------------------------------
// gradcheck

int cmd_gradcheck(const ExperimentConfig& config, std::ostream& log) {
  const auto& gc = config.gradcheck;
  if (gc.samples < 1) throw InputError("config: gradcheck.samples must be positive");
  if (!(gc.h > 0.0)) throw InputError("config: gradcheck.h must be positive");
  const auto d = gc.dimension;
  if (d < 1) throw InputError("config: gradcheck.dimension must be positive");
  const auto mu = gc.zero_mu ? SparseHermitianOperator::zero(d) : random_hermitian(d, gc.seed + 1);
  const ObjectiveSpec spec(random_hermitian(d, gc.seed), mu, random_hermitian(d, gc.seed + 2), gc.alpha,
                           gc.horizon, gc.steps, random_state(d, gc.seed + 3), config.propagator);

  const double delta = spec.delta();
  const double fd_bound = std::max(1e-6, 10.0 * gc.h * gc.h);
  const double first_bound = derivative_bound(1, delta, spec.mu_norm());
  const double second_bound = derivative_bound(2, delta, spec.mu_norm());
  // The Hessian itself is a finite difference of adjoint gradients; its
  // rounding error is far below this allowance.
  const double hessian_allowance = 1e-8;
  const RealVector w = trapezoid_weights(spec.steps());

  std::mt19937_64 rng(gc.seed + 4);
  std::uniform_real_distribution<double> uniform(-gc.control_scale, gc.control_scale);
  const auto dir = prepare_output(config);
  auto out = open_csv(dir / "gradcheck.csv");
  out << "sample,check,value,bound,pass\n";
  int failures = 0;
  auto emit = [&](int sample, const char* check, double value, double bound) {
    const bool ok = value <= bound;
    if (!ok) ++failures;
    out << sample << ',' << check << ',' << format_double(value) << ',' << format_double(bound) << ','
        << (ok ? 1 : 0) << '\n';
  };

  for (int s = 0; s < gc.samples; ++s) {
    RealVector values(spec.steps() + 1);
    for (Eigen::Index j = 0; j < values.size(); ++j) values(j) = uniform(rng);
    const ControlGrid u(spec.horizon(), spec.steps(), values);

    RealVector adjoint = gradient_adjoint(spec, u).values;
    if (gc.inject_sign_flip) adjoint = -adjoint;
    const RealVector fd = gradient_fd(spec, u, gc.h).values;
    emit(s, "adjoint_vs_fd", (adjoint - fd).cwiseAbs().maxCoeff(), fd_bound);

    const RealVector j1 = value_and_gradient_j1(spec, u).gradient.values;
    emit(s, "first_derivative", j1.cwiseAbs().maxCoeff(), first_bound * (1.0 + 1e-12));

    if (spec.steps() <= 64) {
      Eigen::MatrixXd hess = hessian_fd(spec, u, gc.h).matrix;
      hess.diagonal() += (2.0 * spec.alpha() * delta * w.array()).matrix();
      emit(s, "second_derivative", hess.cwiseAbs().maxCoeff(), second_bound + hessian_allowance);
    }
  }
  log << "gradcheck: " << gc.samples << " samples, " << failures << " violations\n";
  return failures == 0 ? kExitOk : kExitCheckFailed;
}

// ---------------------------------------------------------------------------
// scaling

double loglog_slope(const std::vector<double>& delta, const std::vector<double>& error) {
  if (delta.size() != error.size() || delta.size() < 2) throw InputError("loglog_slope: need two or more points");
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  const double n = static_cast<double>(delta.size());
  for (std::size_t i = 0; i < delta.size(); ++i) {
    if (!(delta[i] > 0.0) || !(error[i] > 0.0)) throw InputError("loglog_slope: values must be positive");
    const double x = std::log(delta[i]);
    const double y = std::log(error[i]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

std::vector<ScalingStudy> run_scaling_studies(const ScalingSection& sc) {
  if (sc.base_steps < 1 || sc.doublings < 1) throw InputError("config: scaling needs base_steps >= 1, doublings >= 1");
  const double T = sc.horizon;
  const double A = sc.control_amplitude;
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<ScalingStudy> studies;

  auto sine = [A](double t) { return A * std::sin(t); };

  ScalingStudy interp{"interpolation", {}, {}, 0.0, 1.9, 2.1};
  ScalingStudy quad{"quadrature", {}, {}, 0.0, 1.9, 2.1};
  // Exact integral of A^2 sin^2 over [0, T].
  const double exact_quad = A * A * (T / 2.0 - std::sin(2.0 * T) / 4.0);
  for (int level = 0; level <= sc.doublings; ++level) {
    const int n = sc.base_steps << level;
    const auto grid = ControlGrid::sampled(T, n, sine);
    interp.delta.push_back(grid.delta());
    interp.error.push_back(interpolation_error_norm(sine, grid));
    quad.delta.push_back(grid.delta());
    quad.error.push_back(std::abs(quadrature_penalty(grid, 1.0) - exact_quad));
  }
  studies.push_back(interp);
  studies.push_back(quad);

  const auto d = sc.dimension;
  const auto h0 = random_hermitian(d, sc.seed);
  const auto mu = random_hermitian(d, sc.seed + 1);
  const auto psi0 = random_state(d, sc.seed + 2).amplitudes();

  ScalingStudy midpoint{"midpoint_global", {}, {}, 0.0, 1.9, inf};
  const int finest = sc.base_steps << sc.doublings;
  const auto reference =
      evolve(h0, mu, ControlGrid::sampled(T, 16 * finest, sine), psi0).final_state;
  for (int level = 0; level <= sc.doublings; ++level) {
    const auto grid = ControlGrid::sampled(T, sc.base_steps << level, sine);
    midpoint.delta.push_back(grid.delta());
    midpoint.error.push_back((evolve(h0, mu, grid, psi0).final_state - reference).norm());
  }
  studies.push_back(midpoint);

  PropagatorConfig fine;
  fine.substeps_per_interval = 4096;
  for (int order : sc.dyson_orders) {
    ScalingStudy dyson{"dyson_local_K" + std::to_string(order), {}, {}, 0.0, order + 0.9, inf};
    for (int level = 0; level <= sc.doublings; ++level) {
      const double delta = sc.dyson_base_delta / (1 << level);
      RealVector nodes(2);
      nodes << A * std::sin(1.0), A * std::sin(1.0 + delta);
      const ControlGrid one(delta, 1, nodes);
      const auto exact = step(h0, mu, one, 0, psi0, fine);
      const auto approx = dyson_series(h0, mu, one, 0, psi0, order, sc.dyson_quadrature_points);
      dyson.delta.push_back(delta);
      dyson.error.push_back((approx - exact).norm());
    }
    studies.push_back(dyson);
  }

  for (auto& s : studies) s.slope = loglog_slope(s.delta, s.error);
  return studies;
}

int cmd_scaling(const ExperimentConfig& config, std::ostream& log) {
  const auto studies = run_scaling_studies(config.scaling);
  const auto dir = prepare_output(config);
  auto table = open_csv(dir / "scaling.csv");
  table << "study,delta,error\n";
  auto slopes = open_csv(dir / "slopes.csv");
  slopes << "study,slope,min_slope,max_slope,pass\n";
  int failures = 0;
  for (const auto& s : studies) {
    for (std::size_t i = 0; i < s.delta.size(); ++i) {
      table << s.name << ',' << format_double(s.delta[i]) << ',' << format_double(s.error[i]) << '\n';
    }
    const bool ok = s.passed();
    if (!ok) ++failures;
    slopes << s.name << ',' << format_double(s.slope) << ',' << format_double(s.threshold_low) << ','
           << format_double(s.threshold_high) << ',' << (ok ? 1 : 0) << '\n';
    log << s.name << ": slope " << s.slope << (ok ? " ok" : " FAIL") << '\n';
  }
  return failures == 0 ? kExitOk : kExitCheckFailed;
}

// ---------------------------------------------------------------------------
// qgrad

std::vector<QgradStatistic> run_qgrad_suite(const QgradSection& q) {
  if (q.repeats < 1) throw InputError("config: qgrad.repeats must be positive");
  const auto scheme = central_difference_coefficients(q.difference_order);
  const long long conversion = phase_to_probability_cost_model(q.phase_eps);
  std::vector<QgradStatistic> stats;

  // Linear target with a gradient that sits exactly on the register lattice.
  {
    const int n = static_cast<int>(q.linear_readings.size());
    if (n < 1) throw InputError("config: qgrad.linear_readings must not be empty");
    const GridRegisterSpec grid{n, q.bits, q.probe_radius};
    const double bound = 1.0;
    const double scale = default_phase_scale(grid, bound);
    const double cell = std::numbers::pi / (scale * q.probe_radius);
    RealVector g(n);
    for (int i = 0; i < n; ++i) g(i) = q.linear_readings[static_cast<std::size_t>(i)] * cell;
    if (g.cwiseAbs().maxCoeff() > bound) throw InputError("config: qgrad.linear_readings exceed the register range");
    const auto f = [g](const RealVector& x) { return g.dot(x) + 0.375; };
    const JordanCircuit circuit(f, RealVector::Zero(n), grid, scheme, scale, bound);
    QgradStatistic s{"linear", q.repeats, 0, q.linear_threshold, cell, g.cwiseAbs().maxCoeff(), 0, 0};
    for (int r = 0; r < q.repeats; ++r) {
      const auto result = circuit.sample(q.shots, q.seed + static_cast<std::uint64_t>(r));
      if ((result.gradient.values - g).cwiseAbs().maxCoeff() <= 1e-9 * cell) ++s.successes;
      s.phase_calls += result.phase_oracle_calls;
    }
    s.oracle_calls = s.phase_calls * conversion;
    stats.push_back(s);
  }

  // Reduced QOC model: f = 1/2 - J1/2 restricted to a few nodal coordinates.
  {
    ExampleModelParams params;
    params.dimension = q.dimension;
    auto model = build_example_model(params);
    const auto psi0 = gaussian_state(params.grid(), 0.5 * static_cast<double>(q.dimension - 1), 1.0);
    const ObjectiveSpec spec(model.h0, model.mu, model.observable, 0.0, q.horizon, q.steps, psi0);
    std::mt19937_64 rng(q.seed);
    std::uniform_real_distribution<double> uniform(-q.control_amplitude, q.control_amplitude);
    RealVector values(q.steps + 1);
    for (Eigen::Index j = 0; j < values.size(); ++j) values(j) = uniform(rng);
    const ControlGrid u(q.horizon, q.steps, values);

    const int n = static_cast<int>(q.coordinates.size());
    if (n < 1) throw InputError("config: qgrad.coordinates must not be empty");
    RealVector point(n);
    for (int i = 0; i < n; ++i) {
      const int c = q.coordinates[static_cast<std::size_t>(i)];
      if (c < 0 || c > q.steps) throw InputError("config: qgrad.coordinates out of range");
      point(i) = values(c);
    }
    const HadamardTest test(spec.observable());
    const auto f = [&](const RealVector& v) {
      RealVector probe = values;
      for (int i = 0; i < n; ++i) probe(q.coordinates[static_cast<std::size_t>(i)]) = v(i);
      const auto evo = evolve(spec.h0(), spec.mu(), u.with_values(probe), spec.psi0().amplitudes());
      return test.probability_of_one(evo.final_state);
    };
    const RealVector adjoint = value_and_gradient_j1(spec, u).gradient.values;
    RealVector truth(n);
    for (int i = 0; i < n; ++i) truth(i) = -0.5 * adjoint(q.coordinates[static_cast<std::size_t>(i)]);

    const GridRegisterSpec grid{n, q.bits, q.probe_radius};
    const double bound = spec.delta() * spec.mu_norm();
    const double scale = default_phase_scale(grid, bound);
    const JordanCircuit circuit(f, point, grid, scheme, scale, bound);
    QgradStatistic s{"reduced_qoc", q.repeats, 0, q.qoc_threshold, circuit.cell_width(), truth.cwiseAbs().maxCoeff(), 0, 0};
    for (int r = 0; r < q.repeats; ++r) {
      const auto result = circuit.sample(q.shots, q.seed + 1000 + static_cast<std::uint64_t>(r));
      if ((result.gradient.values - truth).cwiseAbs().maxCoeff() <= circuit.cell_width()) ++s.successes;
      s.phase_calls += result.phase_oracle_calls;
    }
    s.oracle_calls = s.phase_calls * conversion;
    stats.push_back(s);
  }
  return stats;
}

int cmd_qgrad(const ExperimentConfig& config, std::ostream& log) {
  const auto& q = config.qgrad;
  const auto stats = run_qgrad_suite(q);
  const auto dir = prepare_output(config);
  auto table = open_csv(dir / "qgrad.csv");
  table << "test,repeats,successes,rate,threshold,cell_width,gradient_scale,pass\n";
  std::vector<QueryCostRow> rows;
  int failures = 0;
  for (const auto& s : stats) {
    const bool ok = s.passed();
    if (!ok) ++failures;
    table << s.test << ',' << s.repeats << ',' << s.successes << ',' << format_double(s.rate()) << ','
          << format_double(s.threshold) << ',' << format_double(s.cell_width) << ',' << format_double(s.gradient_scale) << ','
          << (ok ? 1 : 0) << '\n';
    // Gradient-estimation cost at the achieved resolution: T log(N_g / rho) / eps with rho = 1/3.
    const double horizon = s.test == "linear" ? 1.0 : q.horizon;
    const double coords = static_cast<double>(s.test == "linear" ? q.linear_readings.size() : q.coordinates.size());
    rows.push_back({s.test, s.oracle_calls, s.phase_calls, horizon * std::log(coords * 3.0) / s.cell_width});
    log << s.test << ": " << s.successes << "/" << s.repeats << " within one grid cell"
        << (ok ? " ok" : " FAIL") << '\n';
  }
  auto cost = open_csv(dir / "query_cost.csv");
  write_query_cost_csv(cost, rows);
  return failures == 0 ? kExitOk : kExitCheckFailed;
}

// ---------------------------------------------------------------------------
// simulate

int cmd_simulate(const ExperimentConfig& config, std::ostream& log) {
  const ObjectiveSpec spec = build_spec(config);
  const auto& s = config.simulate;
  std::function<double(double)> control = [](double) { return 0.0; };
  if (s.control == "constant") {
    control = [a = s.amplitude](double) { return a; };
  } else if (s.control == "sine") {
    control = [a = s.amplitude, w = s.frequency](double t) { return a * std::sin(w * t); };
  }
  const auto u = ControlGrid::sampled(spec.horizon(), spec.steps(), control);
  const auto evo = evolve(spec.h0(), spec.mu(), u, spec.psi0().amplitudes(), spec.propagator());
  const auto dir = prepare_output(config);
  {
    auto out = open_csv(dir / "trajectory.csv");
    write_trajectory_csv(out, u, evo.trajectory);
  }
  {
    auto out = open_csv(dir / "control.csv");
    write_control_csv(out, u);
  }
  log << "J1: " << format_double(expectation(spec.observable(), evo.final_state)) << '\n'
      << "J: " << format_double(evaluate(spec, u)) << '\n';
  return kExitOk;
}

}  // namespace qoc
