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

#ifndef DPADV_MIA_HPP_
#define DPADV_MIA_HPP_

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "dpadv/attack.hpp"
#include "dpadv/data_io.hpp"
#include "dpadv/nn.hpp"

namespace dpadv {
namespace mia {

enum class ScoreKind { kConfidenceTrueClass, kNegativeLoss };

// Membership scores for the audited member / non-member populations. Higher
// scores are read as "more likely a training member".
struct ScoreSet {
  std::vector<double> member_scores;
  std::vector<double> nonmember_scores;
  ScoreKind score_kind = ScoreKind::kConfidenceTrueClass;
};

struct MIAReport {
  double accuracy = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  double threshold = 0.0;
  std::optional<std::map<int, double>> per_class;
};

// Per-example membership score: softmax probability of the true label, or
// the negated cross-entropy loss. The two are monotone transforms of each
// other, so either induces the same ranking.
std::vector<double> score(const Model& model, const Tensor& inputs,
                          const std::vector<int>& labels, ScoreKind kind);

// Threshold maximizing balanced accuracy over candidate cuts (midpoints of
// adjacent distinct pooled scores plus the two infinities). Ties break
// toward the smallest threshold. Predicting "member" means score >= tau.
double choose_threshold(const ScoreSet& scores);

// Confusion-matrix metrics at a fixed threshold, member = positive class.
MIAReport evaluate(const ScoreSet& scores, double threshold);

// Balanced audit of the whole dataset: sample n_audit members and n_audit
// non-members, score, pick the strongest threshold, evaluate. Fully
// deterministic per seed. Passing explicit_threshold recovers the
// fixed-threshold attack variant.
MIAReport attack_individual(const Model& model, const Dataset& train_set,
                            const Dataset& test_set, std::size_t n_audit,
                            std::uint64_t seed,
                            ScoreKind kind = ScoreKind::kConfidenceTrueClass,
                            std::optional<double> explicit_threshold = {});

// Class-wise audit: member/non-member pools restricted to one class at a
// time with an independently chosen threshold. When perturb is given, both
// pools are first replaced by their PGD counterparts (the attacker knows the
// perturbation budget). Classes with fewer than 2 members or 2 non-members
// in the audit sample are absent from the result, not reported as zero.
std::map<int, double> attack_groups(
    const Model& model, const Dataset& train_set, const Dataset& test_set,
    const std::optional<AttackConfig>& perturb, std::uint64_t seed,
    std::size_t n_audit = 1000,
    ScoreKind kind = ScoreKind::kConfidenceTrueClass);

ScoreKind score_kind_from_string(const std::string& s);
std::string to_string(ScoreKind kind);

}  // namespace mia
}  // namespace dpadv

#endif  // DPADV_MIA_HPP_
