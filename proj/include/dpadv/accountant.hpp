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

#ifndef DPADV_ACCOUNTANT_HPP_
#define DPADV_ACCOUNTANT_HPP_

#include <vector>

#include "dpadv/error.hpp"

namespace dpadv {

// Cumulative Renyi-DP over a fixed grid of orders. Composition is additive:
// curve(T steps) == T * curve(1 step).
struct RdpCurve {
  std::vector<double> orders;
  std::vector<double> eps_per_order;
};

struct PrivacySpend {
  double epsilon = 0.0;
  double delta = 0.0;
  double achieving_order = 0.0;
};

// Fixed order grid: {1.25, 1.5} plus integers 2..64 plus {128, 256}. The
// epsilon minimum is taken over this grid, not a continuous optimum.
const std::vector<double>& default_rdp_orders();

// RDP of one Poisson-subsampled Gaussian release at the given order.
// q == 0 touches no data and costs 0; q == 1 equals the analytic Gaussian
// value alpha / (2 sigma^2); otherwise the standard binomial-expansion bound
// (integer alpha) or its signed-series extension (fractional alpha) is
// evaluated in log-domain long double arithmetic. sigma == 0 signals an
// infinite cost explicitly by returning +infinity.
double rdp_single_step(double q, double sigma, double order);

// One-step curve over a whole order grid.
RdpCurve rdp_curve_single_step(double q, double sigma,
                               const std::vector<double>& orders =
                                   default_rdp_orders());

// Linear composition: every order multiplied by T (T >= 0).
RdpCurve compose(const RdpCurve& single_step, long steps);

// Classical RDP -> (epsilon, delta) conversion:
//   epsilon = min_alpha [ rdp(alpha) + log(1/delta) / (alpha - 1) ].
PrivacySpend to_epsilon(const RdpCurve& curve, double delta);

// Convenience: epsilon after `steps` releases at (q, sigma).
PrivacySpend account(double q, double sigma, long steps, double delta,
                     const std::vector<double>& orders = default_rdp_orders());

// Binary search for the noise multiplier whose accounted epsilon lands in
// [target_eps * (1 - 1e-3), target_eps]. Exploits monotonicity of epsilon in
// sigma. Throws CalibrationError when the target is unreachable on the order
// grid (epsilon has the floor log(1/delta)/(max_order - 1)).
double calibrate_sigma(double target_eps, double delta, double q, long steps,
                       const std::vector<double>& orders =
                           default_rdp_orders());

}  // namespace dpadv

#endif  // DPADV_ACCOUNTANT_HPP_
