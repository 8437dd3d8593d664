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

#include "dpadv/attack.hpp"

#include <algorithm>
#include <cmath>

#include "dpadv/data_io.hpp"

namespace dpadv {
namespace {

double sign(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

// x + step * sign(grad), projected onto B_inf(origin, gamma) and [0, 1].
// gamma = 0 collapses the ball to the original point exactly.
void signed_step_project(Tensor& x, const Tensor& origin, const Tensor& grad,
                         double step, double gamma) {
  for (std::size_t i = 0; i < x.values.size(); ++i) {
    const double o = origin.values[i];
    double v = x.values[i] + step * sign(grad.values[i]);
    v = std::clamp(v, o - gamma, o + gamma);
    x.values[i] = std::clamp(v, 0.0, 1.0);
  }
}

}  // namespace

void AttackConfig::validate() const {
  if (gamma < 0.0) throw ConfigError("attack gamma must be >= 0");
  if (steps < 1) throw ConfigError("attack steps must be >= 1");
  if (kind == AttackKind::kPgd && gamma > 0.0) {
    if (step_size <= 0.0) {
      throw ConfigError("pgd step_size must be > 0");
    }
    if (steps > 1 && step_size > gamma) {
      throw ConfigError("pgd step_size must be <= gamma when steps > 1");
    }
  }
}

Tensor fgsm(const Model& model, const Batch& batch, const AttackConfig& cfg) {
  Tensor adv = batch.inputs;
  if (cfg.gamma == 0.0) return adv;
  const Tensor grad = grad_wrt_input(model, batch.inputs, batch.labels);
  signed_step_project(adv, batch.inputs, grad, cfg.gamma, cfg.gamma);
  return adv;
}

Tensor pgd(const Model& model, const Batch& batch, const AttackConfig& cfg,
           NoiseSource* rng) {
  Tensor adv = batch.inputs;
  if (cfg.gamma == 0.0) return adv;
  if (cfg.random_start) {
    if (rng == nullptr) {
      throw ConfigError("pgd random_start requires a noise source");
    }
    for (std::size_t i = 0; i < adv.values.size(); ++i) {
      const double o = batch.inputs.values[i];
      adv.values[i] =
          std::clamp(o + rng->uniform(-cfg.gamma, cfg.gamma), 0.0, 1.0);
    }
  }
  for (int s = 0; s < cfg.steps; ++s) {
    const Tensor grad = grad_wrt_input(model, adv, batch.labels);
    signed_step_project(adv, batch.inputs, grad, cfg.step_size, cfg.gamma);
  }
  return adv;
}

Tensor perturb(const Model& model, const Batch& batch, const AttackConfig& cfg,
               NoiseSource* rng) {
  return cfg.kind == AttackKind::kFgsm ? fgsm(model, batch, cfg)
                                       : pgd(model, batch, cfg, rng);
}

double adversarial_accuracy(const Model& model, const Dataset& dataset,
                            const AttackConfig& cfg) {
  if (dataset.size() == 0) throw DimensionError("empty dataset");
  AttackConfig eval_cfg = cfg;
  eval_cfg.random_start = false;  // evaluation is deterministic
  constexpr std::size_t kEvalBatch = 256;
  std::size_t correct = 0;
  for (std::size_t start = 0; start < dataset.size(); start += kEvalBatch) {
    const std::size_t stop = std::min(start + kEvalBatch, dataset.size());
    std::vector<std::size_t> idx(stop - start);
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = start + i;
    Batch batch = dataset.gather(idx);
    batch.inputs = perturb(model, batch, eval_cfg);
    const Tensor logits = forward(model, batch.inputs);
    for (std::size_t r = 0; r < batch.size(); ++r) {
      const auto row = logits.row(r);
      const std::size_t pred =
          std::max_element(row.begin(), row.end()) - row.begin();
      if (pred == static_cast<std::size_t>(batch.labels[r])) ++correct;
    }
  }
  return static_cast<double>(correct) / static_cast<double>(dataset.size());
}

AttackKind attack_kind_from_string(const std::string& s) {
  if (s == "fgsm") return AttackKind::kFgsm;
  if (s == "pgd") return AttackKind::kPgd;
  throw ConfigError("unknown attack kind: " + s);
}

std::string to_string(AttackKind kind) {
  return kind == AttackKind::kFgsm ? "fgsm" : "pgd";
}

}  // namespace dpadv
