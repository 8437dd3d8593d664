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

#include "dpadv/dp_optim.hpp"

#include <cassert>
#include <cmath>

namespace dpadv {

void DPConfig::validate() const {
  if (!(clip_norm > 0.0)) throw ConfigError("clip_norm must be > 0");
  if (noise_multiplier < 0.0) {
    throw ConfigError("noise_multiplier must be >= 0");
  }
  if (noise_multiplier > 0.0 && !std::isfinite(clip_norm)) {
    throw ConfigError("finite clip_norm required when noise is added");
  }
  if (!(sample_rate > 0.0) || sample_rate > 1.0) {
    throw ConfigError("sample_rate must be in (0, 1]");
  }
  if (!(learning_rate > 0.0)) throw ConfigError("learning_rate must be > 0");
  if (iterations < 1) throw ConfigError("iterations must be >= 1");
  if (!(delta > 0.0) || delta >= 1.0) {
    throw ConfigError("delta must be in (0, 1)");
  }
  if (weight_decay < 0.0) throw ConfigError("weight_decay must be >= 0");
}

std::vector<std::size_t> poisson_subsample(std::size_t n, double q,
                                           NoiseSource& rng) {
  std::vector<std::size_t> indices;
  for (std::size_t i = 0; i < n; ++i) {
    if (rng.uniform() < q) indices.push_back(i);
  }
  return indices;
}

void clip(std::span<double> g, double clip_norm) {
  double sq = 0.0;
  for (double v : g) sq += v * v;
  const double norm = std::sqrt(sq);
  if (norm <= clip_norm || norm == 0.0) return;  // inside the ball: untouched
  const double scale = clip_norm / norm;
  for (double& v : g) v *= scale;
}

void clip_rows(Tensor& rows, double clip_norm) {
  for (std::size_t r = 0; r < rows.rows(); ++r) {
    clip(rows.row(r), clip_norm);
  }
}

std::vector<double> noisy_aggregate(const Tensor& clipped_rows,
                                    double clip_norm, double noise_multiplier,
                                    NoiseSource& rng) {
  std::vector<double> total = sum_rows(clipped_rows);
  if (noise_multiplier > 0.0) {
    const double scale = noise_multiplier * clip_norm;
    for (double& v : total) v += scale * rng.normal();
  }
  return total;
}

void sgd_step(std::span<double> theta, std::span<const double> mean_grad,
              double learning_rate, double weight_decay) {
  assert(theta.size() == mean_grad.size());
  for (std::size_t j = 0; j < theta.size(); ++j) {
    theta[j] -= learning_rate * (mean_grad[j] + weight_decay * theta[j]);
  }
}

void dp_step(std::span<double> theta, std::span<const double> noisy_grad_sum,
             double learning_rate, std::size_t batch_size,
             double weight_decay) {
  if (batch_size == 0) throw ConfigError("dp_step requires |B| >= 1");
  std::vector<double> mean(noisy_grad_sum.begin(), noisy_grad_sum.end());
  const double inv = 1.0 / static_cast<double>(batch_size);
  for (double& v : mean) v *= inv;
  sgd_step(theta, mean, learning_rate, weight_decay);
}

}  // namespace dpadv
