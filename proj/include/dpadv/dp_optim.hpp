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

#ifndef DPADV_DP_OPTIM_HPP_
#define DPADV_DP_OPTIM_HPP_

#include <cstddef>
#include <span>
#include <vector>

#include "dpadv/nn.hpp"
#include "dpadv/rng.hpp"

namespace dpadv {

// DP-SGD hyperparameters: clip norm C, noise multiplier sigma, Poisson
// sample rate q, learning rate, iteration count, delta, weight decay.
struct DPConfig {
  double clip_norm = 1.0;
  double noise_multiplier = 1.0;
  double sample_rate = 0.01;
  double learning_rate = 0.005;
  long iterations = 1;
  double delta = 1e-5;
  double weight_decay = 5e-4;

  void validate() const;
};

// Each index in [0, n) enters the batch independently with probability q.
// Returned indices are ascending. Empty batches are legal; the caller skips
// the update but still charges the accountant.
std::vector<std::size_t> poisson_subsample(std::size_t n, double q,
                                           NoiseSource& rng);

// g <- g * min(1, C / ||g||_2), in place. Rows already inside the ball are
// left bit-identical; the zero vector maps to itself.
void clip(std::span<double> g, double clip_norm);

// Clips every row of a per-sample gradient matrix.
void clip_rows(Tensor& rows, double clip_norm);

// Sum of (already clipped) rows plus sigma * C * N(0, I). sigma == 0 yields
// the exact row sum and consumes no noise; otherwise one fresh normal per
// coordinate is drawn from rng.
std::vector<double> noisy_aggregate(const Tensor& clipped_rows,
                                    double clip_norm, double noise_multiplier,
                                    NoiseSource& rng);

// theta <- theta - lr * (mean_grad + weight_decay * theta), elementwise.
// Decoupled decay keeps the per-sample sensitivity analysis intact.
void sgd_step(std::span<double> theta, std::span<const double> mean_grad,
              double learning_rate, double weight_decay);

// theta <- theta - (lr / |B|) * (g_sum + weight_decay * |B| * theta).
// Computed as the batch mean followed by sgd_step so that the private and
// non-private paths share one arithmetic kernel. batch_size must be >= 1.
void dp_step(std::span<double> theta, std::span<const double> noisy_grad_sum,
             double learning_rate, std::size_t batch_size,
             double weight_decay);

}  // namespace dpadv

#endif  // DPADV_DP_OPTIM_HPP_
