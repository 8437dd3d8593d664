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

#ifndef DPADV_NN_HPP_
#define DPADV_NN_HPP_

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "dpadv/error.hpp"

namespace dpadv {

// Dense row-major numeric array. 2-D tensors are (rows x cols).
struct Tensor {
  std::vector<std::size_t> shape;
  std::vector<double> values;

  Tensor() = default;
  Tensor(std::size_t rows, std::size_t cols)
      : shape{rows, cols}, values(rows * cols, 0.0) {}
  Tensor(std::vector<std::size_t> s, std::vector<double> v);

  std::size_t rows() const { return shape.empty() ? 0 : shape[0]; }
  std::size_t cols() const { return shape.size() < 2 ? 1 : shape[1]; }
  std::size_t size() const { return values.size(); }

  double& at(std::size_t r, std::size_t c) { return values[r * cols() + c]; }
  double at(std::size_t r, std::size_t c) const {
    return values[r * cols() + c];
  }
  std::span<double> row(std::size_t r) {
    return {values.data() + r * cols(), cols()};
  }
  std::span<const double> row(std::size_t r) const {
    return {values.data() + r * cols(), cols()};
  }
};

enum class Activation : std::uint8_t { kRelu = 0, kIdentity = 1 };

struct DenseLayer {
  std::size_t in_dim = 0;
  std::size_t out_dim = 0;
  Activation activation = Activation::kIdentity;
  std::vector<double> weights;  // in_dim x out_dim, row-major
  std::vector<double> bias;     // out_dim
};

// Stack of dense layers; the final layer produces K logits (no activation).
//
// The flattened parameter vector is laid out layer by layer, weights first
// (row-major) then bias. Checkpoints and per-sample gradient rows use the
// same layout.
class Model {
 public:
  std::vector<DenseLayer> layers;

  std::size_t parameter_count() const;
  std::size_t input_dim() const { return layers.front().in_dim; }
  std::size_t output_dim() const { return layers.back().out_dim; }

  std::vector<double> flatten_parameters() const;
  void load_parameters(std::span<const double> flat);

  // Throws DimensionError unless consecutive layer dimensions chain.
  void validate() const;
};

// One minibatch: inputs are (n x d) with values in [0, 1], labels in [0, K).
struct Batch {
  Tensor inputs;
  std::vector<int> labels;

  std::size_t size() const { return labels.size(); }
};

// Per-example flattened parameter gradients for one batch. Row i of grads is
// exactly the gradient of example i's loss alone.
struct PerSampleGrads {
  Tensor grads;  // n x parameter_count
  std::vector<double> per_example_loss;
};

struct LossResult {
  std::vector<double> per_example;
  double mean = 0.0;
};

// Glorot-uniform MLP: weights ~ U(-sqrt(6/(fan_in+fan_out)), +...), biases
// zero, ReLU on hidden layers, identity on the output layer. Fully
// deterministic per seed.
Model init_params(std::uint64_t seed, const std::vector<std::size_t>& dims);

// Logits (n x K) for a batch of inputs (n x d).
Tensor forward(const Model& model, const Tensor& inputs);

// Softmax cross-entropy, log-sum-exp stabilized; per-example losses plus
// their arithmetic mean.
LossResult loss_ce(const Tensor& logits, const std::vector<int>& labels);

// Per-example parameter gradients via reverse-mode differentiation.
PerSampleGrads grads_per_sample(const Model& model, const Batch& batch);

// Per-example gradients of the cross-entropy loss with respect to the
// inputs; row i depends on example i alone, so duplicating an example leaves
// its row unchanged.
Tensor grad_wrt_input(const Model& model, const Tensor& inputs,
                      const std::vector<int>& labels);

// Sum of per-sample gradient rows in ascending row order. Both the private
// and the non-private training paths reduce through this helper so that
// degenerate DP settings collapse onto plain SGD bit-for-bit.
std::vector<double> sum_rows(const Tensor& rows);

}  // namespace dpadv

#endif  // DPADV_NN_HPP_
