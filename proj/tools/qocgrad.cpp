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

#include <functional>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "qocgrad/experiment.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Quantum optimal control by gradient ascent, with a simulated quantum gradient estimator"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  std::vector<std::string> overrides;
  std::optional<std::uint64_t> seed;

  using Command = std::function<int(const qoc::ExperimentConfig&, std::ostream&)>;
  const std::vector<std::tuple<std::string, std::string, Command>> commands{
      {"optimize", "Run perturbed gradient ascent; writes loss.csv and control.csv", qoc::cmd_optimize},
      {"gradcheck", "Compare adjoint and finite-difference gradients and check derivative bounds",
       qoc::cmd_gradcheck},
      {"scaling", "Step-halving convergence studies; writes scaling.csv and slopes.csv", qoc::cmd_scaling},
      {"qgrad", "Jordan gradient-estimation statistics; writes qgrad.csv and query_cost.csv", qoc::cmd_qgrad},
      {"simulate", "Propagate one trajectory; writes trajectory.csv and control.csv", qoc::cmd_simulate},
  };
  std::map<CLI::App*, Command> handlers;
  for (const auto& [name, help, fn] : commands) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->add_option("--config", config_path, "JSON configuration file");
    sub->add_option("--out", out_dir, "Output directory (overrides output.directory)");
    sub->add_option("--seed", seed, "Seed for every random stream of the run");
    sub->add_option("--set", overrides, "Override a key: section.key=value")->take_all();
    handlers[sub] = fn;
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    // --help and --version exit 0; usage errors count as configuration errors.
    return app.exit(e) == 0 ? qoc::kExitOk : qoc::kExitConfigError;
  }

  try {
    if (!out_dir.empty()) overrides.push_back("output.directory=\"" + out_dir + "\"");
    if (seed) {
      for (const char* key : {"optimizer.seed", "jordan.seed", "gradcheck.seed", "qgrad.seed"}) {
        overrides.push_back(std::string(key) + "=" + std::to_string(*seed));
      }
    }
    const auto config = qoc::load_config(config_path, overrides);
    for (const auto& [sub, fn] : handlers) {
      if (sub->parsed()) return fn(config, std::cout);
    }
  } catch (const qoc::InputError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return qoc::kExitConfigError;
  } catch (const qoc::ConvergenceError& e) {
    std::cerr << "runtime divergence: " << e.what() << '\n';
    return qoc::kExitDiverged;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return qoc::kExitCheckFailed;
  }
  return qoc::kExitOk;
}
