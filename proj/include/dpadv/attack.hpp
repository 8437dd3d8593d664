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

#ifndef DPADV_ATTACK_HPP_
#define DPADV_ATTACK_HPP_

#include <string>

#include "dpadv/nn.hpp"
#include "dpadv/rng.hpp"

namespace dpadv {

struct Dataset;  // data_io.hpp

enum class AttackKind { kFgsm, kPgd };

// L-infinity attack parameters. gamma is the perturbation budget; inputs are
// always projected back into the gamma-ball around the original point and
// into [0, 1].
struct AttackConfig {
  AttackKind kind = AttackKind::kPgd;
  double gamma = 0.0;
  double step_size = 0.0;
  int steps = 1;
  bool random_start = false;

  void validate() const;
};

// Single-step signed-gradient attack:
//   x_adv = clamp_[0,1](x + gamma * sign(grad_x L)).
// Zero gradient coordinates stay unmoved (sign(0) = 0).
Tensor fgsm(const Model& model, const Batch& batch, const AttackConfig& cfg);

// Iterated signed-gradient ascent projected onto the intersection of the
// L-inf ball around the original input and [0, 1]. With steps = 1,
// step_size = gamma and no random start this reproduces fgsm bit-for-bit.
// rng is consumed only when cfg.random_start is set.
Tensor pgd(const Model& model, const Batch& batch, const AttackConfig& cfg,
           NoiseSource* rng = nullptr);

// Dispatches on cfg.kind.
Tensor perturb(const Model& model, const Batch& batch, const AttackConfig& cfg,
               NoiseSource* rng = nullptr);

// Fraction of adversarially perturbed examples still classified correctly.
double adversarial_accuracy(const Model& model, const Dataset& dataset,
                            const AttackConfig& cfg);

AttackKind attack_kind_from_string(const std::string& s);
std::string to_string(AttackKind kind);

}  // namespace dpadv

#endif  // DPADV_ATTACK_HPP_
