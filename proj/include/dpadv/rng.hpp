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

#ifndef DPADV_RNG_HPP_
#define DPADV_RNG_HPP_

#include <cstdint>
#include <random>
#include <vector>

namespace dpadv {

// Seeded pseudorandom stream of uniform and standard normal variates.
//
// The generator algorithm is fixed so that runs reproduce bit-for-bit on any
// conforming platform:
//   * raw 64-bit words come from std::mt19937_64, whose output sequence is
//     pinned by the C++ standard;
//   * uniform() maps a word w to (w >> 11) * 2^-53, i.e. doubles in [0, 1);
//   * normal() uses Box-Muller on two words, with u1 = ((w >> 11) + 1) * 2^-53
//     in (0, 1] so the logarithm is always finite; the sine variate of each
//     pair is cached and returned on the next call.
//
// std::normal_distribution is deliberately not used: its output is
// implementation-defined and would break cross-platform reproducibility.
//
// A NoiseSource is single-consumer: one stream per training run, never shared
// across threads.
class NoiseSource {
 public:
  explicit NoiseSource(std::uint64_t seed) : seed_(seed), engine_(seed) {}

  // Uniform double in [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * kInv53; }

  // Uniform double in [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Standard normal variate.
  double normal();

  // n independent standard normal variates.
  std::vector<double> normal_vector(std::size_t n);

  // Uniform integer in [0, bound) by rejection, bias-free.
  std::uint64_t below(std::uint64_t bound);

  // In-place Fisher-Yates shuffle.
  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::swap(v[i - 1], v[below(i)]);
    }
  }

  // Derives an independent stream for a sub-purpose (attack noise, batching,
  // ...) so that enabling one consumer never perturbs another.
  NoiseSource fork(std::uint64_t stream_id) const;

 private:
  static constexpr double kInv53 = 1.0 / 9007199254740992.0;  // 2^-53

  std::uint64_t seed_ = 0;
  std::mt19937_64 engine_;
  bool has_cached_ = false;
  double cached_ = 0.0;
};

}  // namespace dpadv

#endif  // DPADV_RNG_HPP_
