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

#include "dpadv/accountant.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace dpadv {
namespace {

// Accountant internals run in long double with log-domain arithmetic so the
// moment sums stay finite at high orders.
using ld = long double;

constexpr ld kNegInf = -std::numeric_limits<ld>::infinity();

ld log_add(ld a, ld b) {
  if (a == kNegInf) return b;
  if (b == kNegInf) return a;
  const ld hi = std::max(a, b);
  const ld lo = std::min(a, b);
  return hi + std::log1p(std::exp(lo - hi));
}

// log(exp(a) - exp(b)) for a >= b; the signed moment series keeps partial
// sums positive, so a genuine underflow here means a numerics bug.
ld log_sub(ld a, ld b) {
  if (b == kNegInf) return a;
  if (b > a) {
    if (b - a < static_cast<ld>(1e-12)) return kNegInf;
    throw Error("accountant: log-domain subtraction went negative");
  }
  if (a == b) return kNegInf;
  return a + std::log(-std::expm1(b - a));
}

// log(erfc(x)); switches to the Laurent tail once erfc underflows.
ld log_erfc(ld x) {
  const ld r = std::erfc(x);
  if (r > static_cast<ld>(0)) return std::log(r);
  const ld x2 = x * x;
  return -std::log(static_cast<ld>(M_PI)) / 2 - std::log(x) - x2 -
         static_cast<ld>(0.5) / x2 + static_cast<ld>(0.625) / (x2 * x2) -
         static_cast<ld>(37.0 / 24.0) / (x2 * x2 * x2) +
         static_cast<ld>(353.0 / 64.0) / (x2 * x2 * x2 * x2);
}

ld log_binom(long n, long k) {
  return std::lgamma(static_cast<ld>(n + 1)) -
         std::lgamma(static_cast<ld>(k + 1)) -
         std::lgamma(static_cast<ld>(n - k + 1));
}

// log of the alpha-th moment of the subsampled-Gaussian privacy loss for
// integer alpha: the binomial expansion
//   A = sum_i C(alpha, i) q^i (1-q)^(alpha-i) exp((i^2 - i) / (2 sigma^2)).
ld log_moment_int(double q, double sigma, long alpha) {
  const ld log_q = std::log(static_cast<ld>(q));
  const ld log_1mq = std::log1p(static_cast<ld>(-q));
  const ld s2 = static_cast<ld>(sigma) * static_cast<ld>(sigma);
  ld log_a = kNegInf;
  for (long i = 0; i <= alpha; ++i) {
    const ld term = log_binom(alpha, i) + static_cast<ld>(i) * log_q +
                    static_cast<ld>(alpha - i) * log_1mq +
                    static_cast<ld>(i) * static_cast<ld>(i - 1) / (2 * s2);
    log_a = log_add(log_a, term);
  }
  return log_a;
}

// Fractional-order extension: the binomial series split at
// z0 = sigma^2 log(1/q - 1) + 1/2, each half weighted by a Gaussian tail.
// Binomial coefficients alternate in sign past i > alpha, so terms are
// accumulated with signed log arithmetic.
ld log_moment_frac(double q, double sigma, double alpha) {
  const ld a = static_cast<ld>(alpha);
  const ld log_q = std::log(static_cast<ld>(q));
  const ld log_1mq = std::log1p(static_cast<ld>(-q));
  const ld s = static_cast<ld>(sigma);
  const ld s2 = s * s;
  const ld z0 = s2 * static_cast<ld>(std::log(1.0 / q - 1.0)) +
                static_cast<ld>(0.5);
  const ld sqrt2s = std::sqrt(static_cast<ld>(2)) * s;
  const ld log_half = std::log(static_cast<ld>(0.5));

  ld log_a0 = kNegInf;
  ld log_a1 = kNegInf;
  ld coef = 1.0L;  // binom(alpha, i), tracked in linear space
  for (long i = 0;; ++i) {
    const ld fi = static_cast<ld>(i);
    const ld fj = a - fi;
    const ld log_coef = std::log(std::abs(coef));
    const ld log_t0 = log_coef + fi * log_q + fj * log_1mq;
    const ld log_t1 = log_coef + fj * log_q + fi * log_1mq;
    const ld log_e0 = log_half + log_erfc((fi - z0) / sqrt2s);
    const ld log_e1 = log_half + log_erfc((z0 - fj) / sqrt2s);
    const ld log_s0 = log_t0 + (fi * fi - fi) / (2 * s2) + log_e0;
    const ld log_s1 = log_t1 + (fj * fj - fj) / (2 * s2) + log_e1;
    if (coef > 0) {
      log_a0 = log_add(log_a0, log_s0);
      log_a1 = log_add(log_a1, log_s1);
    } else {
      log_a0 = log_sub(log_a0, log_s0);
      log_a1 = log_sub(log_a1, log_s1);
    }
    if (std::max(log_s0, log_s1) < static_cast<ld>(-45) || i > 10000) break;
    coef *= (a - fi) / (fi + 1);
  }
  return log_add(log_a0, log_a1);
}

}  // namespace

const std::vector<double>& default_rdp_orders() {
  static const std::vector<double> orders = [] {
    std::vector<double> o{1.25, 1.5};
    for (int a = 2; a <= 64; ++a) o.push_back(static_cast<double>(a));
    o.push_back(128.0);
    o.push_back(256.0);
    return o;
  }();
  return orders;
}

double rdp_single_step(double q, double sigma, double order) {
  if (q < 0.0 || q > 1.0) throw ConfigError("sample rate must be in [0, 1]");
  if (!(order > 1.0)) throw ConfigError("RDP order must be > 1");
  if (sigma < 0.0) throw ConfigError("sigma must be >= 0");
  if (q == 0.0) return 0.0;  // no data touched
  if (sigma == 0.0) return std::numeric_limits<double>::infinity();
  if (q == 1.0) return order / (2.0 * sigma * sigma);

  const bool integral =
      order == std::floor(order) && order <= 100000.0;
  const ld log_a = integral
                       ? log_moment_int(q, sigma, static_cast<long>(order))
                       : log_moment_frac(q, sigma, order);
  const double rdp =
      static_cast<double>(log_a / static_cast<ld>(order - 1.0));
  return std::max(rdp, 0.0);
}

RdpCurve rdp_curve_single_step(double q, double sigma,
                               const std::vector<double>& orders) {
  RdpCurve curve;
  curve.orders = orders;
  curve.eps_per_order.reserve(orders.size());
  for (double a : orders) {
    curve.eps_per_order.push_back(rdp_single_step(q, sigma, a));
  }
  return curve;
}

RdpCurve compose(const RdpCurve& single_step, long steps) {
  if (steps < 0) throw ConfigError("composition steps must be >= 0");
  RdpCurve out;
  out.orders = single_step.orders;
  out.eps_per_order.reserve(single_step.eps_per_order.size());
  for (double e : single_step.eps_per_order) {
    out.eps_per_order.push_back(steps == 0 ? 0.0
                                           : static_cast<double>(steps) * e);
  }
  return out;
}

PrivacySpend to_epsilon(const RdpCurve& curve, double delta) {
  if (!(delta > 0.0) || delta >= 1.0) {
    throw ConfigError("delta must be in (0, 1)");
  }
  if (curve.orders.empty() ||
      curve.orders.size() != curve.eps_per_order.size()) {
    throw ConfigError("malformed RDP curve");
  }
  PrivacySpend spend;
  spend.delta = delta;
  spend.epsilon = std::numeric_limits<double>::infinity();
  spend.achieving_order = curve.orders.front();
  const double log_inv_delta = std::log(1.0 / delta);
  for (std::size_t i = 0; i < curve.orders.size(); ++i) {
    const double candidate =
        curve.eps_per_order[i] + log_inv_delta / (curve.orders[i] - 1.0);
    if (candidate < spend.epsilon) {
      spend.epsilon = candidate;
      spend.achieving_order = curve.orders[i];
    }
  }
  return spend;
}

PrivacySpend account(double q, double sigma, long steps, double delta,
                     const std::vector<double>& orders) {
  return to_epsilon(compose(rdp_curve_single_step(q, sigma, orders), steps),
                    delta);
}

double calibrate_sigma(double target_eps, double delta, double q, long steps,
                       const std::vector<double>& orders) {
  if (!(target_eps > 0.0)) throw ConfigError("target epsilon must be > 0");
  const auto eps_at = [&](double sigma) {
    return account(q, sigma, steps, delta, orders).epsilon;
  };

  double lo = 1e-8;   // epsilon here must exceed the target
  double hi = 1e8;    // epsilon here must be at or below the target
  if (eps_at(hi) > target_eps) {
    throw CalibrationError(
        "target epsilon " + std::to_string(target_eps) +
        " is unreachable: the order grid floors epsilon at " +
        std::to_string(eps_at(hi)));
  }
  if (eps_at(lo) <= target_eps) {
    throw CalibrationError("target epsilon " + std::to_string(target_eps) +
                           " is met even with negligible noise");
  }

  const double lower_edge = target_eps * (1.0 - 1e-3);
  for (int iter = 0; iter < 500; ++iter) {
    const double eps_hi = eps_at(hi);
    if (eps_hi >= lower_edge && eps_hi <= target_eps) return hi;
    const double mid = 0.5 * (lo + hi);
    if (eps_at(mid) > target_eps) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  throw CalibrationError("sigma search did not converge");
}

}  // namespace dpadv
