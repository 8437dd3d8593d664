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

#include "dpadv/mia.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace dpadv {
namespace mia {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// 0.5 * (TPR + TNR) when predicting member iff score >= tau.
double balanced_accuracy(const ScoreSet& scores, double tau) {
  std::size_t tp = 0;
  for (double s : scores.member_scores) {
    if (s >= tau) ++tp;
  }
  std::size_t tn = 0;
  for (double s : scores.nonmember_scores) {
    if (s < tau) ++tn;
  }
  const double tpr =
      static_cast<double>(tp) / static_cast<double>(scores.member_scores.size());
  const double tnr = static_cast<double>(tn) /
                     static_cast<double>(scores.nonmember_scores.size());
  return 0.5 * (tpr + tnr);
}

void check_nonempty(const ScoreSet& scores) {
  if (scores.member_scores.empty() || scores.nonmember_scores.empty()) {
    throw DimensionError("both score populations must be non-empty");
  }
}

// Seeded sample of n distinct indices from [0, pool).
std::vector<std::size_t> sample_indices(std::size_t pool, std::size_t n,
                                        NoiseSource rng) {
  std::vector<std::size_t> idx(pool);
  for (std::size_t i = 0; i < pool; ++i) idx[i] = i;
  rng.shuffle(idx);
  idx.resize(n);
  return idx;
}

}  // namespace

std::vector<double> score(const Model& model, const Tensor& inputs,
                          const std::vector<int>& labels, ScoreKind kind) {
  const Tensor logits = forward(model, inputs);
  const LossResult loss = loss_ce(logits, labels);
  std::vector<double> out(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    // negative loss = log softmax probability of the true class
    out[i] = kind == ScoreKind::kNegativeLoss ? -loss.per_example[i]
                                              : std::exp(-loss.per_example[i]);
  }
  return out;
}

double choose_threshold(const ScoreSet& scores) {
  check_nonempty(scores);
  std::vector<double> pooled;
  pooled.reserve(scores.member_scores.size() + scores.nonmember_scores.size());
  pooled.insert(pooled.end(), scores.member_scores.begin(),
                scores.member_scores.end());
  pooled.insert(pooled.end(), scores.nonmember_scores.begin(),
                scores.nonmember_scores.end());
  std::sort(pooled.begin(), pooled.end());
  pooled.erase(std::unique(pooled.begin(), pooled.end()), pooled.end());

  std::vector<double> candidates{-kInf};
  for (std::size_t i = 0; i + 1 < pooled.size(); ++i) {
    candidates.push_back(0.5 * (pooled[i] + pooled[i + 1]));
  }
  candidates.push_back(kInf);

  double best_tau = -kInf;
  double best_acc = -1.0;
  for (double tau : candidates) {
    const double acc = balanced_accuracy(scores, tau);
    if (acc > best_acc) {  // ties keep the smallest threshold
      best_acc = acc;
      best_tau = tau;
    }
  }
  return best_tau;
}

MIAReport evaluate(const ScoreSet& scores, double threshold) {
  check_nonempty(scores);
  std::size_t tp = 0;
  std::size_t fn = 0;
  for (double s : scores.member_scores) {
    s >= threshold ? ++tp : ++fn;
  }
  std::size_t fp = 0;
  std::size_t tn = 0;
  for (double s : scores.nonmember_scores) {
    s >= threshold ? ++fp : ++tn;
  }
  MIAReport report;
  report.threshold = threshold;
  report.accuracy = static_cast<double>(tp + tn) /
                    static_cast<double>(tp + tn + fp + fn);
  report.precision =
      tp + fp == 0 ? 0.0
                   : static_cast<double>(tp) / static_cast<double>(tp + fp);
  report.recall = static_cast<double>(tp) / static_cast<double>(tp + fn);
  report.f1 = report.precision + report.recall == 0.0
                  ? 0.0
                  : 2.0 * report.precision * report.recall /
                        (report.precision + report.recall);
  return report;
}

MIAReport attack_individual(const Model& model, const Dataset& train_set,
                            const Dataset& test_set, std::size_t n_audit,
                            std::uint64_t seed, ScoreKind kind,
                            std::optional<double> explicit_threshold) {
  const std::size_t n =
      std::min({n_audit, train_set.size(), test_set.size()});
  if (n == 0) throw DimensionError("audit sample is empty");
  NoiseSource rng(seed);
  const Batch members = train_set.gather(sample_indices(train_set.size(), n,
                                                        rng.fork(1)));
  const Batch nonmembers = test_set.gather(sample_indices(test_set.size(), n,
                                                          rng.fork(2)));
  ScoreSet scores;
  scores.score_kind = kind;
  scores.member_scores = score(model, members.inputs, members.labels, kind);
  scores.nonmember_scores =
      score(model, nonmembers.inputs, nonmembers.labels, kind);
  const double tau =
      explicit_threshold ? *explicit_threshold : choose_threshold(scores);
  return evaluate(scores, tau);
}

std::map<int, double> attack_groups(const Model& model,
                                    const Dataset& train_set,
                                    const Dataset& test_set,
                                    const std::optional<AttackConfig>& perturb,
                                    std::uint64_t seed, std::size_t n_audit,
                                    ScoreKind kind) {
  const std::size_t n =
      std::min({n_audit, train_set.size(), test_set.size()});
  if (n == 0) throw DimensionError("audit sample is empty");
  NoiseSource rng(seed);
  Batch members = train_set.gather(sample_indices(train_set.size(), n,
                                                  rng.fork(1)));
  Batch nonmembers = test_set.gather(sample_indices(test_set.size(), n,
                                                    rng.fork(2)));
  if (perturb) {
    // The attacker knows the training-time budget and perturbs both pools.
    NoiseSource attack_rng = rng.fork(3);
    members.inputs = dpadv::perturb(model, members, *perturb, &attack_rng);
    nonmembers.inputs =
        dpadv::perturb(model, nonmembers, *perturb, &attack_rng);
  }
  const std::vector<double> member_scores =
      score(model, members.inputs, members.labels, kind);
  const std::vector<double> nonmember_scores =
      score(model, nonmembers.inputs, nonmembers.labels, kind);

  const int k = std::max(train_set.class_count, test_set.class_count);
  std::map<int, double> per_class;
  for (int c = 0; c < k; ++c) {
    ScoreSet scores;
    scores.score_kind = kind;
    for (std::size_t i = 0; i < member_scores.size(); ++i) {
      if (members.labels[i] == c) {
        scores.member_scores.push_back(member_scores[i]);
      }
    }
    for (std::size_t i = 0; i < nonmember_scores.size(); ++i) {
      if (nonmembers.labels[i] == c) {
        scores.nonmember_scores.push_back(nonmember_scores[i]);
      }
    }
    if (scores.member_scores.size() < 2 || scores.nonmember_scores.size() < 2) {
      continue;  // insufficient samples: class absent, not zero
    }
    per_class[c] = balanced_accuracy(scores, choose_threshold(scores));
  }
  return per_class;
}

ScoreKind score_kind_from_string(const std::string& s) {
  if (s == "confidence" || s == "confidence_true_class") {
    return ScoreKind::kConfidenceTrueClass;
  }
  if (s == "negative_loss") return ScoreKind::kNegativeLoss;
  throw ConfigError("unknown score kind: " + s);
}

std::string to_string(ScoreKind kind) {
  return kind == ScoreKind::kConfidenceTrueClass ? "confidence_true_class"
                                                 : "negative_loss";
}

}  // namespace mia
}  // namespace dpadv
