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

#include "dpadv/trainer.hpp"

#include <algorithm>
#include <cmath>

#include "dpadv/accountant.hpp"

namespace dpadv {
namespace {

bool uses_dp(RegimeKind kind) {
  return kind == RegimeKind::kDp || kind == RegimeKind::kDpAdv;
}

bool uses_attack(RegimeKind kind) {
  return kind == RegimeKind::kAdv || kind == RegimeKind::kDpAdv;
}

}  // namespace

void Regime::validate() const {
  if (uses_attack(kind)) {
    if (!attack) throw ConfigError(to_string(kind) + " requires an attack config");
    attack->validate();
  }
  if (uses_dp(kind)) {
    if (!dp) throw ConfigError(to_string(kind) + " requires a DP config");
    dp->validate();
  } else {
    if (!(sgd.learning_rate > 0.0)) throw ConfigError("learning_rate must be > 0");
    if (sgd.weight_decay < 0.0) throw ConfigError("weight_decay must be >= 0");
    if (sgd.batch_size == 0) throw ConfigError("batch_size must be >= 1");
  }
}

std::pair<double, double> evaluate(const Model& model, const Dataset& dataset,
                                   const std::optional<AttackConfig>& attack) {
  if (dataset.size() == 0) throw DimensionError("empty dataset");
  constexpr std::size_t kEvalBatch = 256;
  std::size_t correct = 0;
  double loss_total = 0.0;
  for (std::size_t start = 0; start < dataset.size(); start += kEvalBatch) {
    const std::size_t stop = std::min(start + kEvalBatch, dataset.size());
    std::vector<std::size_t> idx(stop - start);
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = start + i;
    Batch batch = dataset.gather(idx);
    if (attack) {
      // Evaluation perturbs deterministically even if training used a
      // random start.
      AttackConfig eval_cfg = *attack;
      eval_cfg.random_start = false;
      batch.inputs = perturb(model, batch, eval_cfg);
    }
    const Tensor logits = forward(model, batch.inputs);
    const LossResult loss = loss_ce(logits, batch.labels);
    for (std::size_t r = 0; r < batch.size(); ++r) {
      const auto row = logits.row(r);
      const std::size_t pred =
          std::max_element(row.begin(), row.end()) - row.begin();
      if (pred == static_cast<std::size_t>(batch.labels[r])) ++correct;
      loss_total += loss.per_example[r];
    }
  }
  const double n = static_cast<double>(dataset.size());
  return {static_cast<double>(correct) / n, loss_total / n};
}

std::pair<Model, std::vector<EpochRecord>> train(
    Model model, const Dataset& train_set, const Dataset& test_set,
    const Regime& regime, int epochs, std::uint64_t seed,
    const EpochObserver& observer) {
  regime.validate();
  model.validate();
  if (epochs < 0) throw ConfigError("epochs must be >= 0");
  const std::size_t n = train_set.size();
  if (n == 0) throw DimensionError("empty training set");

  // Independent derived streams: enabling the attacker or changing batch
  // order never perturbs the DP noise sequence.
  NoiseSource root(seed);
  NoiseSource batch_rng = root.fork(1);
  NoiseSource noise_rng = root.fork(2);
  NoiseSource attack_rng = root.fork(3);

  const bool dp_path = uses_dp(regime.kind);
  const bool adv_path = uses_attack(regime.kind);

  std::vector<double> theta = model.flatten_parameters();
  std::vector<EpochRecord> records;
  long dp_steps_total = 0;

  // One "epoch" of the Poisson path is round(1/q) iterations, so epoch
  // counts line up with the shuffled-epoch regimes in expectation.
  const long dp_steps_per_epoch =
      dp_path ? std::max(1L, std::lround(1.0 / regime.dp->sample_rate)) : 0;

  const auto run_update = [&](const std::vector<std::size_t>& indices) {
    Batch batch = train_set.gather(indices);
    if (adv_path) {
      batch.inputs = perturb(model, batch, *regime.attack, &attack_rng);
    }
    PerSampleGrads grads = grads_per_sample(model, batch);
    for (double l : grads.per_example_loss) {
      if (!std::isfinite(l)) {
        throw DivergenceError("non-finite training loss; aborting");
      }
    }
    if (dp_path) {
      clip_rows(grads.grads, regime.dp->clip_norm);
      const std::vector<double> noisy =
          noisy_aggregate(grads.grads, regime.dp->clip_norm,
                          regime.dp->noise_multiplier, noise_rng);
      dp_step(theta, noisy, regime.dp->learning_rate, batch.size(),
              regime.dp->weight_decay);
    } else {
      const std::vector<double> total = sum_rows(grads.grads);
      dp_step(theta, total, regime.sgd.learning_rate, batch.size(),
              regime.sgd.weight_decay);
    }
    model.load_parameters(theta);
  };

  for (int epoch = 1; epoch <= epochs; ++epoch) {
    if (dp_path) {
      for (long t = 0; t < dp_steps_per_epoch; ++t) {
        const std::vector<std::size_t> indices =
            poisson_subsample(n, regime.dp->sample_rate, batch_rng);
        ++dp_steps_total;  // empty batches still compose
        if (!indices.empty()) run_update(indices);
      }
    } else {
      for (const auto& indices :
           shuffled_epoch_batches(n, regime.sgd.batch_size, batch_rng)) {
        run_update(indices);
      }
    }

    EpochRecord record;
    record.epoch = epoch;
    std::tie(record.train_acc, record.mean_train_loss) =
        evaluate(model, train_set);
    std::tie(record.test_acc, record.mean_test_loss) =
        evaluate(model, test_set);
    if (!std::isfinite(record.mean_train_loss) ||
        !std::isfinite(record.mean_test_loss)) {
      throw DivergenceError("NaN loss at epoch " + std::to_string(epoch));
    }
    if (regime.attack) {
      record.adv_acc = adversarial_accuracy(model, test_set, *regime.attack);
    }
    if (dp_path) {
      record.epsilon_so_far =
          account(regime.dp->sample_rate, regime.dp->noise_multiplier,
                  dp_steps_total, regime.dp->delta)
              .epsilon;
    }
    records.push_back(record);
    if (observer) observer(epoch, model);
  }
  return {std::move(model), std::move(records)};
}

RegimeKind regime_kind_from_string(const std::string& s) {
  if (s == "none") return RegimeKind::kNone;
  if (s == "adv") return RegimeKind::kAdv;
  if (s == "dp") return RegimeKind::kDp;
  if (s == "dp_adv") return RegimeKind::kDpAdv;
  throw ConfigError("unknown regime: " + s);
}

std::string to_string(RegimeKind kind) {
  switch (kind) {
    case RegimeKind::kNone:
      return "none";
    case RegimeKind::kAdv:
      return "adv";
    case RegimeKind::kDp:
      return "dp";
    case RegimeKind::kDpAdv:
      return "dp_adv";
  }
  return "none";
}

}  // namespace dpadv
