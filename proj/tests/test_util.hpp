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
//
// Test-only oracles, independent of the library implementation paths they
// check: finite differences for gradients, extended-precision evaluation for
// losses and accountant moments, and brute-force quadrature.

#ifndef DPADV_TESTS_TEST_UTIL_HPP_
#define DPADV_TESTS_TEST_UTIL_HPP_

#include <cmath>
#include <cstdint>
#include <vector>

#include "dpadv/nn.hpp"
#include "dpadv/rng.hpp"

namespace dpadv::testing {

// |a - b| <= tol * max(1, |a|, |b|).
inline bool close_rel(double a, double b, double tol) {
  const double scale = std::max({1.0, std::abs(a), std::abs(b)});
  return std::abs(a - b) <= tol * scale;
}

// Mean cross-entropy of a model/batch evaluated through the public API;
// the quantity finite differences are taken of.
inline double mean_loss(const Model& model, const Batch& batch) {
  return loss_ce(forward(model, batch.inputs), batch.labels).mean;
}

// Central finite differences of the batch-mean loss w.r.t. every parameter.
inline std::vector<double> fd_param_gradient(const Model& model,
                                             const Batch& batch,
                                             double h = 1e-5) {
  Model probe = model;
  std::vector<double> theta = model.flatten_parameters();
  std::vector<double> grad(theta.size());
  for (std::size_t i = 0; i < theta.size(); ++i) {
    const double saved = theta[i];
    theta[i] = saved + h;
    probe.load_parameters(theta);
    const double up = mean_loss(probe, batch);
    theta[i] = saved - h;
    probe.load_parameters(theta);
    const double down = mean_loss(probe, batch);
    theta[i] = saved;
    grad[i] = (up - down) / (2.0 * h);
  }
  probe.load_parameters(theta);
  return grad;
}

// Central finite differences of one example's loss w.r.t. its input.
inline std::vector<double> fd_input_gradient(const Model& model,
                                             std::span<const double> x,
                                             int label, double h = 1e-5) {
  std::vector<double> point(x.begin(), x.end());
  std::vector<double> grad(point.size());
  Batch batch;
  batch.labels = {label};
  for (std::size_t i = 0; i < point.size(); ++i) {
    const double saved = point[i];
    point[i] = saved + h;
    batch.inputs = Tensor({1, point.size()}, point);
    const double up = mean_loss(model, batch);
    point[i] = saved - h;
    batch.inputs = Tensor({1, point.size()}, point);
    const double down = mean_loss(model, batch);
    point[i] = saved;
    grad[i] = (up - down) / (2.0 * h);
  }
  return grad;
}

// Cross-entropy of one logit row in extended precision, straight from the
// definition.
inline double high_precision_ce(const std::vector<double>& logits, int label) {
  long double m = logits[0];
  for (double v : logits) m = std::max(m, static_cast<long double>(v));
  long double sum = 0.0L;
  for (double v : logits) sum += std::exp(static_cast<long double>(v) - m);
  const long double lse = m + std::log(sum);
  return static_cast<double>(lse - static_cast<long double>(logits[label]));
}

// Subsampled-Gaussian RDP moment sum for integer order, evaluated directly
// in extended precision (linear space, no log-domain tricks):
//   A = sum_i C(a, i) q^i (1-q)^(a-i) exp((i^2 - i) / (2 sigma^2)),
//   RDP = log(A) / (a - 1).
inline double moment_oracle_int(double q, double sigma, int order) {
  const long double lq = q;
  const long double ls = sigma;
  long double a = 0.0L;
  for (int i = 0; i <= order; ++i) {
    long double binom = 1.0L;
    for (int k = 0; k < i; ++k) {
      binom *= static_cast<long double>(order - k) / static_cast<long double>(k + 1);
    }
    a += binom * std::pow(lq, static_cast<long double>(i)) *
         std::pow(1.0L - lq, static_cast<long double>(order - i)) *
         std::exp(static_cast<long double>(i) * (i - 1) / (2.0L * ls * ls));
  }
  return static_cast<double>(std::log(a) / static_cast<long double>(order - 1));
}

// Same quantity through numerical quadrature of the defining integral
//   A = E_{z ~ N(0, sigma^2)} [ ((1-q) + q e^{(2z-1)/(2 sigma^2)})^order ],
// valid for fractional orders too. Composite Simpson over a wide bracket.
inline double moment_oracle_quadrature(double q, double sigma, double order) {
  const long double ls = sigma;
  const long double lo = -60.0L * ls;
  const long double hi = 60.0L * ls + static_cast<long double>(order) + 1.0L;
  const int n = 600000;  // even
  const long double step = (hi - lo) / n;
  const long double norm =
      1.0L / (ls * std::sqrt(2.0L * 3.14159265358979323846264338327950288L));
  auto integrand = [&](long double z) {
    const long double ratio =
        (1.0L - static_cast<long double>(q)) +
        static_cast<long double>(q) *
            std::exp((2.0L * z - 1.0L) / (2.0L * ls * ls));
    return std::pow(ratio, static_cast<long double>(order)) * norm *
           std::exp(-z * z / (2.0L * ls * ls));
  };
  long double sum = integrand(lo) + integrand(hi);
  for (int i = 1; i < n; ++i) {
    const long double z = lo + step * i;
    sum += integrand(z) * (i % 2 == 1 ? 4.0L : 2.0L);
  }
  const long double a = sum * step / 3.0L;
  return static_cast<double>(std::log(a) / (static_cast<long double>(order) - 1.0L));
}

// Random test fixtures.
inline Model random_model(std::uint64_t seed,
                          const std::vector<std::size_t>& dims) {
  return init_params(seed, dims);
}

inline Batch random_batch(std::uint64_t seed, std::size_t n, std::size_t dim,
                          int classes, double lo = 0.05, double hi = 0.95) {
  NoiseSource rng(seed);
  Batch batch;
  batch.inputs = Tensor(n, dim);
  for (double& v : batch.inputs.values) v = rng.uniform(lo, hi);
  batch.labels.resize(n);
  for (auto& label : batch.labels) {
    label = static_cast<int>(rng.below(static_cast<std::uint64_t>(classes)));
  }
  return batch;
}

}  // namespace dpadv::testing

#endif  // DPADV_TESTS_TEST_UTIL_HPP_
