// Copyright 2026 The dpadv Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <cstdio>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "dpadv/experiment.hpp"

namespace {

int run_command(const std::string& config_path) {
  const dpadv::ExperimentConfig config =
      dpadv::parse_config_file(config_path);
  const dpadv::ResultsBundle bundle = dpadv::run_experiment(config);
  std::cout << "wrote results to " << bundle.output_dir.string() << "\n";
  for (const dpadv::RegimeResult& result : bundle.per_regime) {
    const dpadv::EpochRecord& last = result.records.back();
    std::cout << "  " << dpadv::to_string(result.kind)
              << ": train_acc=" << last.train_acc
              << " test_acc=" << last.test_acc;
    if (last.adv_acc) std::cout << " adv_acc=" << *last.adv_acc;
    if (result.final_epsilon) std::cout << " epsilon=" << *result.final_epsilon;
    std::cout << " mia_acc=" << result.report.accuracy << "\n";
  }
  return 0;
}

int audit_command(const std::string& model_path,
                  const std::string& config_path) {
  const dpadv::ExperimentConfig config =
      dpadv::parse_config_file(config_path);
  const dpadv::Model model = dpadv::load_checkpoint(model_path);
  const auto [train_set, test_set] = dpadv::load_dataset(config);
  const dpadv::mia::MIAReport report = dpadv::mia::attack_individual(
      model, train_set, test_set, config.audit.n_audit,
      config.seed, config.audit.score_kind);
  std::cout << "individual: accuracy=" << report.accuracy
            << " precision=" << report.precision << " recall=" << report.recall
            << " f1=" << report.f1 << " threshold=" << report.threshold
            << "\n";
  if (config.audit.group_level) {
    const auto groups = dpadv::mia::attack_groups(
        model, train_set, test_set, std::nullopt, config.seed,
        config.audit.n_audit, config.audit.score_kind);
    for (const auto& [cls, acc] : groups) {
      std::cout << "group " << cls << ": accuracy=" << acc << "\n";
    }
  }
  if (config.audit.perturbed_groups) {
    const auto groups = dpadv::mia::attack_groups(
        model, train_set, test_set, config.attack, config.seed,
        config.audit.n_audit, config.audit.score_kind);
    for (const auto& [cls, acc] : groups) {
      std::cout << "perturbed group " << cls << ": accuracy=" << acc << "\n";
    }
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"differentially private adversarial training laboratory"};
  app.require_subcommand(1);

  std::string config_path;
  std::string model_path;
  CLI::App* run = app.add_subcommand("run", "train, account and audit a regime grid");
  run->add_option("config", config_path, "experiment config file")->required();

  CLI::App* audit = app.add_subcommand("audit", "membership-inference audit of a checkpoint");
  audit->add_option("model", model_path, "model checkpoint")->required();
  audit->add_option("config", config_path, "experiment config file")->required();

  double eps = 0.0;
  double delta = 1e-5;
  double q = 0.01;
  long steps = 1;
  CLI::App* calibrate =
      app.add_subcommand("calibrate", "solve for the noise multiplier hitting a target epsilon");
  calibrate->add_option("--eps", eps, "target epsilon")->required();
  calibrate->add_option("--delta", delta, "target delta");
  calibrate->add_option("--q", q, "Poisson sample rate");
  calibrate->add_option("--steps", steps, "number of iterations")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) return run_command(config_path);
    if (audit->parsed()) return audit_command(model_path, config_path);
    if (calibrate->parsed()) {
      const double sigma = dpadv::calibrate_sigma(eps, delta, q, steps);
      const dpadv::PrivacySpend spend = dpadv::account(q, sigma, steps, delta);
      std::printf("sigma=%.12g epsilon=%.12g delta=%g order=%g\n", sigma,
                  spend.epsilon, spend.delta, spend.achieving_order);
      return 0;
    }
  } catch (const dpadv::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const dpadv::CalibrationError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const dpadv::DivergenceError& e) {
    std::cerr << "training diverged: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
