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

#ifndef DPADV_TRAINER_HPP_
#define DPADV_TRAINER_HPP_

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "dpadv/attack.hpp"
#include "dpadv/data_io.hpp"
#include "dpadv/dp_optim.hpp"
#include "dpadv/nn.hpp"

namespace dpadv {

enum class RegimeKind { kNone, kAdv, kDp, kDpAdv };

// Plain-SGD hyperparameters for the non-private regimes.
struct SgdConfig {
  double learning_rate = 0.005;
  double weight_decay = 5e-4;
  std::size_t batch_size = 64;
};

// One of the four training strategies: no-defense, adversarial-only,
// DP-only, DP-Adv. adv and dp_adv require an attack config; dp and dp_adv a
// DP config.
struct Regime {
  RegimeKind kind = RegimeKind::kNone;
  std::optional<AttackConfig> attack;
  std::optional<DPConfig> dp;
  SgdConfig sgd;

  void validate() const;
};

struct EpochRecord {
  int epoch = 0;
  double train_acc = 0.0;
  double test_acc = 0.0;
  std::optional<double> adv_acc;
  double mean_train_loss = 0.0;
  double mean_test_loss = 0.0;
  std::optional<double> epsilon_so_far;
};

// Argmax accuracy and mean cross-entropy; ties resolve to the lowest class
// index. With an attack config the inputs are perturbed first.
std::pair<double, double> evaluate(
    const Model& model, const Dataset& dataset,
    const std::optional<AttackConfig>& attack = {});

// Per-epoch observer, e.g. for snapshotting the parameter trajectory.
using EpochObserver = std::function<void(int epoch, const Model& model)>;

// Runs one training regime for `epochs` epochs and returns the trained model
// plus one record per epoch.
//
// none/adv use shuffled-epoch batching and plain SGD steps; adv first
// replaces every batch example with its adversarial counterpart. dp/dp_adv
// use Poisson batching with round(1/q) iterations per epoch and the
// clip/noise/step pipeline; the accountant is charged once per iteration,
// including iterations whose Poisson batch came up empty.
//
// Derived seed streams: batching, DP noise and attack randomness are
// independent, so enabling the attacker never perturbs the DP noise.
std::pair<Model, std::vector<EpochRecord>> train(
    Model model, const Dataset& train_set, const Dataset& test_set,
    const Regime& regime, int epochs, std::uint64_t seed,
    const EpochObserver& observer = {});

RegimeKind regime_kind_from_string(const std::string& s);
std::string to_string(RegimeKind kind);

}  // namespace dpadv

#endif  // DPADV_TRAINER_HPP_
