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

#ifndef DPADV_EXPERIMENT_HPP_
#define DPADV_EXPERIMENT_HPP_

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "dpadv/accountant.hpp"
#include "dpadv/mia.hpp"
#include "dpadv/trainer.hpp"

namespace dpadv {

struct SynthSpec {
  int classes = 4;
  int dim = 12;
  int per_class = 500;
  double separation = 0.6;
  double noise_std = 0.08;
};

struct IdxSpec {
  std::string train_images;
  std::string train_labels;
  std::string test_images;
  std::string test_labels;
  std::size_t limit = 0;  // 0 = all
};

struct AuditSpec {
  std::size_t n_audit = 1000;
  mia::ScoreKind score_kind = mia::ScoreKind::kConfidenceTrueClass;
  bool group_level = false;
  bool perturbed_groups = false;
};

struct DpSpec {
  double target_epsilon = 1.0;     // > 0: calibrate sigma for this target
  double noise_multiplier = 0.0;   // > 0: use this sigma as given
  double clip_norm = 1.0;
  double sample_rate = 0.01;
  double delta = 1e-5;
};

// Whole-experiment configuration, parsed from a flat key = value file with
// dotted sections (grammar documented in the README). Defaults mirror the
// reference hyperparameters: 200 epochs, learning rate 0.005, weight decay
// 5e-4, and per-dataset attack settings keyed by dataset name.
struct ExperimentConfig {
  std::string dataset_kind = "synth";  // "synth" | "idx"
  std::string dataset_name = "synth";
  SynthSpec synth;
  IdxSpec idx;

  std::vector<std::size_t> hidden_dims{256, 128};

  std::vector<RegimeKind> regimes{RegimeKind::kNone, RegimeKind::kAdv,
                                  RegimeKind::kDp, RegimeKind::kDpAdv};
  int epochs = 200;
  std::uint64_t seed = 1;
  SgdConfig sgd;
  AttackConfig attack;
  DpSpec dp;
  AuditSpec audit;

  std::filesystem::path output_dir = "results";
  bool parallel_regimes = false;

  void validate() const;
};

struct RegimeResult {
  RegimeKind kind = RegimeKind::kNone;
  std::vector<EpochRecord> records;
  mia::MIAReport report;
  std::optional<std::map<int, double>> group_accuracy;
  std::optional<std::map<int, double>> perturbed_group_accuracy;
  std::optional<double> final_epsilon;
  Model final_model;
};

struct ResultsBundle {
  std::vector<RegimeResult> per_regime;
  std::filesystem::path output_dir;
  std::string manifest;
};

// Parses `key = value` lines; '#' starts a comment; unknown keys are errors.
ExperimentConfig parse_config_text(const std::string& text);
ExperimentConfig parse_config_file(const std::filesystem::path& path);

// Canonical echo of a config; rerunning from it reproduces every output byte.
std::string render_manifest(const ExperimentConfig& config);

// Trains every requested regime, audits each final model, and writes per-
// regime epoch CSVs (raw + window-10 smoothed), MIA reports, checkpoints and
// the run manifest under config.output_dir (overridable with the
// DPADV_OUTPUT_DIR environment variable).
ResultsBundle run_experiment(const ExperimentConfig& config);

// Trailing running mean; the first window-1 points average the available
// prefix. window = 1 is the identity.
std::vector<double> smooth(const std::vector<double>& series, int window = 10);

// Versioned little-endian checkpoint: header, layer dims, f64 parameters.
void save_checkpoint(const std::filesystem::path& path, const Model& model);
Model load_checkpoint(const std::filesystem::path& path);

// CSV schema {epoch, regime, train_acc, test_acc, adv_acc, train_loss,
// test_loss, epsilon}; absent values are written as empty fields.
std::string epoch_records_csv(const std::vector<EpochRecord>& records,
                              RegimeKind kind, bool smoothed = false);
std::string mia_report_csv(const RegimeResult& result);

// Resolves the dataset named by the config (synthetic or IDX pair).
std::pair<Dataset, Dataset> load_dataset(const ExperimentConfig& config);

// Materializes the Regime struct for one regime kind, calibrating sigma from
// dp.target_epsilon when no explicit noise multiplier is given.
Regime make_regime(const ExperimentConfig& config, RegimeKind kind);

}  // namespace dpadv

#endif  // DPADV_EXPERIMENT_HPP_
