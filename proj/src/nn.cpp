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

#include "dpadv/nn.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "dpadv/rng.hpp"

namespace dpadv {
namespace {

// Activations of every layer for a single example: frames[0] is the input,
// frames[l + 1] the post-activation output of layer l. Pre-activation values
// are kept alongside for the ReLU derivative.
struct ForwardTrace {
  std::vector<std::vector<double>> post;  // layer count + 1 entries
  std::vector<std::vector<double>> pre;   // layer count entries
};

ForwardTrace forward_one(const Model& model, std::span<const double> x) {
  ForwardTrace trace;
  trace.post.reserve(model.layers.size() + 1);
  trace.pre.reserve(model.layers.size());
  trace.post.emplace_back(x.begin(), x.end());
  for (const DenseLayer& layer : model.layers) {
    const std::vector<double>& a = trace.post.back();
    std::vector<double> z(layer.out_dim, 0.0);
    for (std::size_t i = 0; i < layer.in_dim; ++i) {
      const double ai = a[i];
      const double* w = layer.weights.data() + i * layer.out_dim;
      for (std::size_t j = 0; j < layer.out_dim; ++j) {
        z[j] += ai * w[j];
      }
    }
    for (std::size_t j = 0; j < layer.out_dim; ++j) {
      z[j] += layer.bias[j];
    }
    trace.pre.push_back(z);
    if (layer.activation == Activation::kRelu) {
      for (double& v : z) v = v > 0.0 ? v : 0.0;
    }
    trace.post.push_back(std::move(z));
  }
  return trace;
}

// Stable softmax cross-entropy pieces for one logit row. Returns the
// log-sum-exp; fills probs (softmax) when non-null.
double log_sum_exp(std::span<const double> logits, std::vector<double>* probs) {
  const double m = *std::max_element(logits.begin(), logits.end());
  double sum = 0.0;
  for (double v : logits) sum += std::exp(v - m);
  const double lse = m + std::log(sum);
  if (probs != nullptr) {
    probs->resize(logits.size());
    for (std::size_t j = 0; j < logits.size(); ++j) {
      (*probs)[j] = std::exp(logits[j] - lse);
    }
  }
  return lse;
}

void check_label(int label, std::size_t k) {
  if (label < 0 || static_cast<std::size_t>(label) >= k) {
    throw DimensionError("label " + std::to_string(label) +
                         " out of range [0, " + std::to_string(k) + ")");
  }
}

// Backpropagates one example's cross-entropy loss. Writes the flattened
// parameter gradient when param_grad is non-null and the input gradient when
// input_grad is non-null. Returns the example loss.
double backward_one(const Model& model, const ForwardTrace& trace, int label,
                    double* param_grad, double* input_grad) {
  const std::vector<double>& logits = trace.post.back();
  check_label(label, logits.size());
  std::vector<double> delta;
  const double lse = log_sum_exp(logits, &delta);
  const double loss = lse - logits[static_cast<std::size_t>(label)];
  delta[static_cast<std::size_t>(label)] -= 1.0;  // softmax - onehot

  // Offsets of each layer's weights in the flattened layout.
  std::size_t offset = model.parameter_count();
  for (std::size_t li = model.layers.size(); li-- > 0;) {
    const DenseLayer& layer = model.layers[li];
    offset -= layer.in_dim * layer.out_dim + layer.out_dim;
    const std::vector<double>& a_prev = trace.post[li];
    if (param_grad != nullptr) {
      double* wg = param_grad + offset;
      for (std::size_t i = 0; i < layer.in_dim; ++i) {
        const double ai = a_prev[i];
        double* row = wg + i * layer.out_dim;
        for (std::size_t j = 0; j < layer.out_dim; ++j) {
          row[j] = ai * delta[j];
        }
      }
      double* bg = wg + layer.in_dim * layer.out_dim;
      for (std::size_t j = 0; j < layer.out_dim; ++j) {
        bg[j] = delta[j];
      }
    }
    const bool need_upstream = li > 0 || input_grad != nullptr;
    if (!need_upstream) break;
    std::vector<double> upstream(layer.in_dim, 0.0);
    for (std::size_t i = 0; i < layer.in_dim; ++i) {
      const double* w = layer.weights.data() + i * layer.out_dim;
      double acc = 0.0;
      for (std::size_t j = 0; j < layer.out_dim; ++j) {
        acc += w[j] * delta[j];
      }
      upstream[i] = acc;
    }
    if (li > 0) {
      const DenseLayer& below = model.layers[li - 1];
      if (below.activation == Activation::kRelu) {
        const std::vector<double>& pre = trace.pre[li - 1];
        for (std::size_t i = 0; i < upstream.size(); ++i) {
          if (pre[i] <= 0.0) upstream[i] = 0.0;
        }
      }
      delta = std::move(upstream);
    } else {
      std::copy(upstream.begin(), upstream.end(), input_grad);
    }
  }
  return loss;
}

}  // namespace

Tensor::Tensor(std::vector<std::size_t> s, std::vector<double> v)
    : shape(std::move(s)), values(std::move(v)) {
  std::size_t expected = 1;
  for (std::size_t d : shape) expected *= d;
  if (shape.empty()) expected = 0;
  if (expected != values.size()) {
    throw DimensionError("tensor shape/value mismatch: expected " +
                         std::to_string(expected) + " values, got " +
                         std::to_string(values.size()));
  }
}

std::size_t Model::parameter_count() const {
  std::size_t n = 0;
  for (const DenseLayer& layer : layers) {
    n += layer.in_dim * layer.out_dim + layer.out_dim;
  }
  return n;
}

std::vector<double> Model::flatten_parameters() const {
  std::vector<double> flat;
  flat.reserve(parameter_count());
  for (const DenseLayer& layer : layers) {
    flat.insert(flat.end(), layer.weights.begin(), layer.weights.end());
    flat.insert(flat.end(), layer.bias.begin(), layer.bias.end());
  }
  return flat;
}

void Model::load_parameters(std::span<const double> flat) {
  if (flat.size() != parameter_count()) {
    throw DimensionError("parameter vector length " +
                         std::to_string(flat.size()) + " != model size " +
                         std::to_string(parameter_count()));
  }
  std::size_t pos = 0;
  for (DenseLayer& layer : layers) {
    std::copy_n(flat.begin() + pos, layer.weights.size(),
                layer.weights.begin());
    pos += layer.weights.size();
    std::copy_n(flat.begin() + pos, layer.bias.size(), layer.bias.begin());
    pos += layer.bias.size();
  }
}

void Model::validate() const {
  if (layers.empty()) throw DimensionError("model has no layers");
  for (std::size_t li = 0; li < layers.size(); ++li) {
    const DenseLayer& layer = layers[li];
    if (layer.weights.size() != layer.in_dim * layer.out_dim ||
        layer.bias.size() != layer.out_dim) {
      throw DimensionError("layer " + std::to_string(li) +
                           " parameter storage does not match its dims");
    }
    if (li > 0 && layers[li - 1].out_dim != layer.in_dim) {
      throw DimensionError("layer " + std::to_string(li) + " input dim " +
                           std::to_string(layer.in_dim) +
                           " does not chain from previous output dim " +
                           std::to_string(layers[li - 1].out_dim));
    }
  }
}

Model init_params(std::uint64_t seed, const std::vector<std::size_t>& dims) {
  if (dims.size() < 2) {
    throw DimensionError("need at least input and output dims");
  }
  for (std::size_t d : dims) {
    if (d == 0) throw DimensionError("zero layer dimension");
  }
  NoiseSource rng(seed);
  Model model;
  for (std::size_t li = 0; li + 1 < dims.size(); ++li) {
    DenseLayer layer;
    layer.in_dim = dims[li];
    layer.out_dim = dims[li + 1];
    layer.activation =
        li + 2 < dims.size() ? Activation::kRelu : Activation::kIdentity;
    const double bound =
        std::sqrt(6.0 / static_cast<double>(layer.in_dim + layer.out_dim));
    layer.weights.resize(layer.in_dim * layer.out_dim);
    for (double& w : layer.weights) w = rng.uniform(-bound, bound);
    layer.bias.assign(layer.out_dim, 0.0);
    model.layers.push_back(std::move(layer));
  }
  return model;
}

Tensor forward(const Model& model, const Tensor& inputs) {
  model.validate();
  if (inputs.cols() != model.input_dim()) {
    throw DimensionError("input dim " + std::to_string(inputs.cols()) +
                         " != model input dim " +
                         std::to_string(model.input_dim()));
  }
  const std::size_t n = inputs.rows();
  Tensor logits(n, model.output_dim());
  for (std::size_t r = 0; r < n; ++r) {
    ForwardTrace trace = forward_one(model, inputs.row(r));
    const std::vector<double>& out = trace.post.back();
    std::copy(out.begin(), out.end(), logits.row(r).begin());
  }
  return logits;
}

LossResult loss_ce(const Tensor& logits, const std::vector<int>& labels) {
  if (logits.rows() != labels.size()) {
    throw DimensionError("logit rows " + std::to_string(logits.rows()) +
                         " != label count " + std::to_string(labels.size()));
  }
  LossResult result;
  result.per_example.resize(labels.size());
  double total = 0.0;
  for (std::size_t r = 0; r < labels.size(); ++r) {
    check_label(labels[r], logits.cols());
    const auto row = logits.row(r);
    const double lse = log_sum_exp(row, nullptr);
    const double loss = lse - row[static_cast<std::size_t>(labels[r])];
    result.per_example[r] = loss;
    total += loss;
  }
  result.mean = labels.empty() ? 0.0 : total / static_cast<double>(labels.size());
  return result;
}

PerSampleGrads grads_per_sample(const Model& model, const Batch& batch) {
  model.validate();
  if (batch.size() == 0) throw DimensionError("empty batch");
  if (batch.inputs.rows() != batch.labels.size()) {
    throw DimensionError("batch inputs/labels length mismatch");
  }
  if (batch.inputs.cols() != model.input_dim()) {
    throw DimensionError("batch input dim does not match model");
  }
  const std::size_t p = model.parameter_count();
  PerSampleGrads result;
  result.grads = Tensor(batch.size(), p);
  result.per_example_loss.resize(batch.size());
  for (std::size_t r = 0; r < batch.size(); ++r) {
    ForwardTrace trace = forward_one(model, batch.inputs.row(r));
    result.per_example_loss[r] = backward_one(
        model, trace, batch.labels[r], result.grads.row(r).data(), nullptr);
    const auto row = result.grads.row(r);
    for (std::size_t j = 0; j < row.size(); ++j) {
      if (!std::isfinite(row[j])) {
        // Map the offending flat index back to its layer.
        std::size_t layer_index = 0;
        std::size_t end = 0;
        for (std::size_t li = 0; li < model.layers.size(); ++li) {
          end += model.layers[li].in_dim * model.layers[li].out_dim +
                 model.layers[li].out_dim;
          if (j < end) {
            layer_index = li;
            break;
          }
        }
        throw DivergenceError("non-finite gradient in layer " +
                              std::to_string(layer_index) + " for example " +
                              std::to_string(r));
      }
    }
  }
  return result;
}

Tensor grad_wrt_input(const Model& model, const Tensor& inputs,
                      const std::vector<int>& labels) {
  model.validate();
  if (inputs.rows() != labels.size()) {
    throw DimensionError("inputs/labels length mismatch");
  }
  Tensor grad(inputs.rows(), inputs.cols());
  for (std::size_t r = 0; r < inputs.rows(); ++r) {
    ForwardTrace trace = forward_one(model, inputs.row(r));
    backward_one(model, trace, labels[r], nullptr, grad.row(r).data());
  }
  return grad;
}

std::vector<double> sum_rows(const Tensor& rows) {
  std::vector<double> sum(rows.cols(), 0.0);
  for (std::size_t r = 0; r < rows.rows(); ++r) {
    const auto row = rows.row(r);
    for (std::size_t j = 0; j < sum.size(); ++j) {
      sum[j] += row[j];
    }
  }
  return sum;
}

}  // namespace dpadv
