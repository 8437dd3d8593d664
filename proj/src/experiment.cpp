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

#include "dpadv/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <exception>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <thread>

namespace dpadv {
namespace {

constexpr char kCheckpointMagic[8] = {'D', 'P', 'A', 'D', 'V', 'C', 'K', 'P'};
constexpr std::uint32_t kCheckpointVersion = 1;

// Fixed seed offsets: regime seeds, audit seeds and the dataset seed are all
// derived from the experiment seed by constant displacements, so sequential
// and parallel execution agree byte for byte.
constexpr std::uint64_t kRegimeSeedStride = 7919;
constexpr std::uint64_t kAuditSeedOffset = 104729;
constexpr std::uint64_t kDatasetSeedOffset = 500009;

std::uint64_t regime_seed(const ExperimentConfig& config, RegimeKind kind) {
  return config.seed + kRegimeSeedStride * (static_cast<std::uint64_t>(kind) + 1);
}

std::string fmt_double(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

std::string fmt_opt(const std::optional<double>& v) {
  return v ? fmt_double(*v) : std::string();
}

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r\n");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r\n");
  return s.substr(begin, end - begin + 1);
}

bool parse_bool(const std::string& v, const std::string& key) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw ConfigError("expected boolean for " + key + ", got '" + v + "'");
}

double parse_double(const std::string& v, const std::string& key) {
  try {
    std::size_t pos = 0;
    const double d = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw ConfigError("expected number for " + key + ", got '" + v + "'");
  }
}

long parse_long(const std::string& v, const std::string& key) {
  try {
    std::size_t pos = 0;
    const long l = std::stol(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return l;
  } catch (const std::exception&) {
    throw ConfigError("expected integer for " + key + ", got '" + v + "'");
  }
}

std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> parts;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) parts.push_back(item);
  }
  return parts;
}

void put_u32_le(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_f64_le(std::string& out, double v) {
  std::uint64_t bits;
  std::memcpy(&bits, &v, sizeof(bits));
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((bits >> (8 * i)) & 0xff));
}

std::uint32_t get_u32_le(const std::vector<unsigned char>& b, std::size_t& off,
                         const std::string& path) {
  if (off + 4 > b.size()) throw DataFormatError(path + ": truncated checkpoint", off);
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= std::uint32_t{b[off + i]} << (8 * i);
  off += 4;
  return v;
}

double get_f64_le(const std::vector<unsigned char>& b, std::size_t& off,
                  const std::string& path) {
  if (off + 8 > b.size()) throw DataFormatError(path + ": truncated checkpoint", off);
  std::uint64_t bits = 0;
  for (int i = 0; i < 8; ++i) bits |= std::uint64_t{b[off + i]} << (8 * i);
  off += 8;
  double v;
  std::memcpy(&v, &bits, sizeof(v));
  return v;
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
}

// Hyperparameters of the reference experiments, applied when the config does
// not set the corresponding key itself.
struct DatasetDefaults {
  int attack_steps;
  double attack_step_size;
  double attack_gamma;
  double dp_target_epsilon;
};

const std::map<std::string, DatasetDefaults>& dataset_defaults() {
  static const std::map<std::string, DatasetDefaults> table{
      {"mnist", {25, 0.02, 0.25, 1.0}},
      {"fmnist", {15, 0.02, 0.15, 1.0}},
      {"fashion-mnist", {15, 0.02, 0.15, 1.0}},
      {"cifar10", {10, 2.0 / 255.0, 8.0 / 255.0, 3.0}},
  };
  return table;
}

}  // namespace

void ExperimentConfig::validate() const {
  if (dataset_kind != "synth" && dataset_kind != "idx") {
    throw ConfigError("dataset.kind must be 'synth' or 'idx'");
  }
  if (dataset_kind == "idx") {
    if (idx.train_images.empty() || idx.train_labels.empty() ||
        idx.test_images.empty() || idx.test_labels.empty()) {
      throw ConfigError("dataset.kind=idx requires all four dataset.idx paths");
    }
  }
  if (regimes.empty()) throw ConfigError("at least one regime required");
  if (epochs < 1) throw ConfigError("train.epochs must be >= 1");
  if (audit.n_audit == 0) throw ConfigError("audit.n_audit must be >= 1");
  bool any_dp = false;
  bool any_attack = audit.perturbed_groups;
  for (RegimeKind kind : regimes) {
    any_dp |= kind == RegimeKind::kDp || kind == RegimeKind::kDpAdv;
    any_attack |= kind == RegimeKind::kAdv || kind == RegimeKind::kDpAdv;
  }
  if (any_dp && dp.noise_multiplier <= 0.0 && dp.target_epsilon <= 0.0) {
    throw ConfigError(
        "dp regimes need dp.noise_multiplier or dp.target_epsilon");
  }
  if (any_attack) attack.validate();
}

ExperimentConfig parse_config_text(const std::string& text) {
  std::map<std::string, std::string> kv;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config line " + std::to_string(line_no) +
                        ": expected 'key = value'");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) {
      throw ConfigError("config line " + std::to_string(line_no) +
                        ": empty key");
    }
    if (kv.count(key) != 0) {
      throw ConfigError("duplicate config key: " + key);
    }
    kv[key] = value;
  }

  ExperimentConfig config;
  std::set<std::string> seen;
  const auto get = [&](const std::string& key) -> std::optional<std::string> {
    auto it = kv.find(key);
    if (it == kv.end()) return {};
    seen.insert(key);
    return it->second;
  };

  if (auto v = get("dataset.kind")) config.dataset_kind = *v;
  if (auto v = get("dataset.name")) config.dataset_name = *v;
  if (auto v = get("dataset.synth.classes")) {
    config.synth.classes = static_cast<int>(parse_long(*v, "dataset.synth.classes"));
  }
  if (auto v = get("dataset.synth.dim")) {
    config.synth.dim = static_cast<int>(parse_long(*v, "dataset.synth.dim"));
  }
  if (auto v = get("dataset.synth.per_class")) {
    config.synth.per_class =
        static_cast<int>(parse_long(*v, "dataset.synth.per_class"));
  }
  if (auto v = get("dataset.synth.separation")) {
    config.synth.separation = parse_double(*v, "dataset.synth.separation");
  }
  if (auto v = get("dataset.synth.noise_std")) {
    config.synth.noise_std = parse_double(*v, "dataset.synth.noise_std");
  }
  if (auto v = get("dataset.idx.train_images")) config.idx.train_images = *v;
  if (auto v = get("dataset.idx.train_labels")) config.idx.train_labels = *v;
  if (auto v = get("dataset.idx.test_images")) config.idx.test_images = *v;
  if (auto v = get("dataset.idx.test_labels")) config.idx.test_labels = *v;
  if (auto v = get("dataset.idx.limit")) {
    config.idx.limit = static_cast<std::size_t>(parse_long(*v, "dataset.idx.limit"));
  }
  if (auto v = get("model.hidden")) {
    config.hidden_dims.clear();
    for (const std::string& part : split_list(*v)) {
      config.hidden_dims.push_back(
          static_cast<std::size_t>(parse_long(part, "model.hidden")));
    }
  }
  if (auto v = get("regimes")) {
    config.regimes.clear();
    for (const std::string& part : split_list(*v)) {
      config.regimes.push_back(regime_kind_from_string(part));
    }
  }
  if (auto v = get("train.epochs")) {
    config.epochs = static_cast<int>(parse_long(*v, "train.epochs"));
  }
  if (auto v = get("train.seed")) {
    config.seed = static_cast<std::uint64_t>(parse_long(*v, "train.seed"));
  }
  if (auto v = get("train.lr")) {
    config.sgd.learning_rate = parse_double(*v, "train.lr");
  }
  if (auto v = get("train.weight_decay")) {
    config.sgd.weight_decay = parse_double(*v, "train.weight_decay");
  }
  if (auto v = get("train.batch_size")) {
    config.sgd.batch_size =
        static_cast<std::size_t>(parse_long(*v, "train.batch_size"));
  }
  if (auto v = get("attack.kind")) {
    config.attack.kind = attack_kind_from_string(*v);
  }
  const bool gamma_set = kv.count("attack.gamma") != 0;
  if (auto v = get("attack.gamma")) {
    config.attack.gamma = parse_double(*v, "attack.gamma");
  }
  const bool step_set = kv.count("attack.step_size") != 0;
  if (auto v = get("attack.step_size")) {
    config.attack.step_size = parse_double(*v, "attack.step_size");
  }
  const bool steps_set = kv.count("attack.steps") != 0;
  if (auto v = get("attack.steps")) {
    config.attack.steps = static_cast<int>(parse_long(*v, "attack.steps"));
  }
  if (auto v = get("attack.random_start")) {
    config.attack.random_start = parse_bool(*v, "attack.random_start");
  }
  const bool eps_set = kv.count("dp.target_epsilon") != 0;
  if (auto v = get("dp.target_epsilon")) {
    config.dp.target_epsilon = parse_double(*v, "dp.target_epsilon");
  }
  if (auto v = get("dp.noise_multiplier")) {
    config.dp.noise_multiplier = parse_double(*v, "dp.noise_multiplier");
  }
  if (auto v = get("dp.clip_norm")) {
    config.dp.clip_norm = parse_double(*v, "dp.clip_norm");
  }
  if (auto v = get("dp.sample_rate")) {
    config.dp.sample_rate = parse_double(*v, "dp.sample_rate");
  }
  if (auto v = get("dp.delta")) {
    config.dp.delta = parse_double(*v, "dp.delta");
  }
  if (auto v = get("audit.n_audit")) {
    config.audit.n_audit =
        static_cast<std::size_t>(parse_long(*v, "audit.n_audit"));
  }
  if (auto v = get("audit.score_kind")) {
    config.audit.score_kind = mia::score_kind_from_string(*v);
  }
  if (auto v = get("audit.group_level")) {
    config.audit.group_level = parse_bool(*v, "audit.group_level");
  }
  if (auto v = get("audit.perturbed_groups")) {
    config.audit.perturbed_groups = parse_bool(*v, "audit.perturbed_groups");
  }
  if (auto v = get("output.dir")) config.output_dir = *v;
  if (auto v = get("run.parallel")) {
    config.parallel_regimes = parse_bool(*v, "run.parallel");
  }

  for (const auto& [key, value] : kv) {
    if (seen.count(key) == 0) throw ConfigError("unknown config key: " + key);
  }

  // Reference hyperparameters for the named datasets fill any attack / DP
  // fields the config left unset.
  auto it = dataset_defaults().find(config.dataset_name);
  if (it != dataset_defaults().end()) {
    if (!steps_set) config.attack.steps = it->second.attack_steps;
    if (!step_set) config.attack.step_size = it->second.attack_step_size;
    if (!gamma_set) config.attack.gamma = it->second.attack_gamma;
    if (!eps_set && config.dp.noise_multiplier <= 0.0) {
      config.dp.target_epsilon = it->second.dp_target_epsilon;
    }
  }

  config.validate();
  return config;
}

ExperimentConfig parse_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config: " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str());
}

std::string render_manifest(const ExperimentConfig& config) {
  std::ostringstream out;
  out << "# dpadv run manifest (valid config; rerun with `dpadv run <this file>`)\n";
  out << "# code version: dpadv 1.0\n";
  out << "dataset.kind = " << config.dataset_kind << "\n";
  out << "dataset.name = " << config.dataset_name << "\n";
  if (config.dataset_kind == "synth") {
    out << "dataset.synth.classes = " << config.synth.classes << "\n";
    out << "dataset.synth.dim = " << config.synth.dim << "\n";
    out << "dataset.synth.per_class = " << config.synth.per_class << "\n";
    out << "dataset.synth.separation = " << fmt_double(config.synth.separation) << "\n";
    out << "dataset.synth.noise_std = " << fmt_double(config.synth.noise_std) << "\n";
  } else {
    out << "dataset.idx.train_images = " << config.idx.train_images << "\n";
    out << "dataset.idx.train_labels = " << config.idx.train_labels << "\n";
    out << "dataset.idx.test_images = " << config.idx.test_images << "\n";
    out << "dataset.idx.test_labels = " << config.idx.test_labels << "\n";
    out << "dataset.idx.limit = " << config.idx.limit << "\n";
  }
  out << "model.hidden = ";
  for (std::size_t i = 0; i < config.hidden_dims.size(); ++i) {
    if (i) out << ",";
    out << config.hidden_dims[i];
  }
  out << "\n";
  out << "regimes = ";
  for (std::size_t i = 0; i < config.regimes.size(); ++i) {
    if (i) out << ",";
    out << to_string(config.regimes[i]);
  }
  out << "\n";
  out << "train.epochs = " << config.epochs << "\n";
  out << "train.seed = " << config.seed << "\n";
  out << "train.lr = " << fmt_double(config.sgd.learning_rate) << "\n";
  out << "train.weight_decay = " << fmt_double(config.sgd.weight_decay) << "\n";
  out << "train.batch_size = " << config.sgd.batch_size << "\n";
  out << "attack.kind = " << to_string(config.attack.kind) << "\n";
  out << "attack.gamma = " << fmt_double(config.attack.gamma) << "\n";
  out << "attack.step_size = " << fmt_double(config.attack.step_size) << "\n";
  out << "attack.steps = " << config.attack.steps << "\n";
  out << "attack.random_start = "
      << (config.attack.random_start ? "true" : "false") << "\n";
  out << "dp.target_epsilon = " << fmt_double(config.dp.target_epsilon) << "\n";
  out << "dp.noise_multiplier = " << fmt_double(config.dp.noise_multiplier) << "\n";
  out << "dp.clip_norm = " << fmt_double(config.dp.clip_norm) << "\n";
  out << "dp.sample_rate = " << fmt_double(config.dp.sample_rate) << "\n";
  out << "dp.delta = " << fmt_double(config.dp.delta) << "\n";
  out << "audit.n_audit = " << config.audit.n_audit << "\n";
  out << "audit.score_kind = " << mia::to_string(config.audit.score_kind) << "\n";
  out << "audit.group_level = " << (config.audit.group_level ? "true" : "false") << "\n";
  out << "audit.perturbed_groups = "
      << (config.audit.perturbed_groups ? "true" : "false") << "\n";
  out << "run.parallel = " << (config.parallel_regimes ? "true" : "false") << "\n";
  return out.str();
}

std::vector<double> smooth(const std::vector<double>& series, int window) {
  if (window < 1) throw ConfigError("smoothing window must be >= 1");
  std::vector<double> out(series.size());
  for (std::size_t i = 0; i < series.size(); ++i) {
    const std::size_t begin =
        i + 1 >= static_cast<std::size_t>(window) ? i + 1 - window : 0;
    double sum = 0.0;
    for (std::size_t j = begin; j <= i; ++j) sum += series[j];
    out[i] = sum / static_cast<double>(i - begin + 1);
  }
  return out;
}

void save_checkpoint(const std::filesystem::path& path, const Model& model) {
  model.validate();
  std::string out(kCheckpointMagic, sizeof(kCheckpointMagic));
  put_u32_le(out, kCheckpointVersion);
  put_u32_le(out, static_cast<std::uint32_t>(model.layers.size()));
  for (const DenseLayer& layer : model.layers) {
    put_u32_le(out, static_cast<std::uint32_t>(layer.in_dim));
    put_u32_le(out, static_cast<std::uint32_t>(layer.out_dim));
    out.push_back(static_cast<char>(layer.activation));
  }
  for (double v : model.flatten_parameters()) put_f64_le(out, v);
  write_text_file(path, out);
}

Model load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open checkpoint: " + path.string());
  std::vector<unsigned char> bytes{std::istreambuf_iterator<char>(in),
                                   std::istreambuf_iterator<char>()};
  const std::string p = path.string();
  if (bytes.size() < sizeof(kCheckpointMagic) ||
      std::memcmp(bytes.data(), kCheckpointMagic, sizeof(kCheckpointMagic)) != 0) {
    throw DataFormatError(p + ": bad checkpoint magic", 0);
  }
  std::size_t off = sizeof(kCheckpointMagic);
  const std::uint32_t version = get_u32_le(bytes, off, p);
  if (version != kCheckpointVersion) {
    throw DataFormatError(p + ": unsupported checkpoint version " +
                              std::to_string(version),
                          off - 4);
  }
  const std::uint32_t n_layers = get_u32_le(bytes, off, p);
  Model model;
  for (std::uint32_t i = 0; i < n_layers; ++i) {
    DenseLayer layer;
    layer.in_dim = get_u32_le(bytes, off, p);
    layer.out_dim = get_u32_le(bytes, off, p);
    if (off >= bytes.size()) throw DataFormatError(p + ": truncated checkpoint", off);
    const unsigned char act = bytes[off++];
    if (act > 1) throw DataFormatError(p + ": bad activation tag", off - 1);
    layer.activation = static_cast<Activation>(act);
    layer.weights.resize(layer.in_dim * layer.out_dim);
    layer.bias.resize(layer.out_dim);
    model.layers.push_back(std::move(layer));
  }
  std::vector<double> flat(model.parameter_count());
  for (double& v : flat) v = get_f64_le(bytes, off, p);
  if (off != bytes.size()) {
    throw DataFormatError(p + ": trailing bytes after parameters", off);
  }
  model.load_parameters(flat);
  model.validate();
  return model;
}

std::string epoch_records_csv(const std::vector<EpochRecord>& records,
                              RegimeKind kind, bool smoothed) {
  const std::string regime = to_string(kind);
  std::ostringstream out;
  out << "epoch,regime,train_acc,test_acc,adv_acc,train_loss,test_loss,epsilon\n";

  const auto emit = [&](std::size_t i, double train_acc, double test_acc,
                        const std::optional<double>& adv_acc, double train_loss,
                        double test_loss) {
    out << records[i].epoch << ',' << regime << ',' << fmt_double(train_acc)
        << ',' << fmt_double(test_acc) << ',' << fmt_opt(adv_acc) << ','
        << fmt_double(train_loss) << ',' << fmt_double(test_loss) << ','
        << fmt_opt(records[i].epsilon_so_far) << '\n';
  };

  if (!smoothed) {
    for (std::size_t i = 0; i < records.size(); ++i) {
      emit(i, records[i].train_acc, records[i].test_acc, records[i].adv_acc,
           records[i].mean_train_loss, records[i].mean_test_loss);
    }
    return out.str();
  }

  // Smoothing is an output-time transform; the raw file is always written
  // alongside. Epsilon is never smoothed.
  std::vector<double> train_acc(records.size());
  std::vector<double> test_acc(records.size());
  std::vector<double> train_loss(records.size());
  std::vector<double> test_loss(records.size());
  std::vector<double> adv(records.size(), 0.0);
  bool has_adv = !records.empty() && records.front().adv_acc.has_value();
  for (std::size_t i = 0; i < records.size(); ++i) {
    train_acc[i] = records[i].train_acc;
    test_acc[i] = records[i].test_acc;
    train_loss[i] = records[i].mean_train_loss;
    test_loss[i] = records[i].mean_test_loss;
    if (has_adv) adv[i] = *records[i].adv_acc;
  }
  train_acc = smooth(train_acc);
  test_acc = smooth(test_acc);
  train_loss = smooth(train_loss);
  test_loss = smooth(test_loss);
  if (has_adv) adv = smooth(adv);
  for (std::size_t i = 0; i < records.size(); ++i) {
    emit(i, train_acc[i], test_acc[i],
         has_adv ? std::optional<double>(adv[i]) : std::nullopt, train_loss[i],
         test_loss[i]);
  }
  return out.str();
}

std::string mia_report_csv(const RegimeResult& result) {
  const std::string regime = to_string(result.kind);
  std::ostringstream out;
  out << "regime,scope,class,accuracy,precision,recall,f1,threshold\n";
  out << regime << ",individual,," << fmt_double(result.report.accuracy) << ','
      << fmt_double(result.report.precision) << ','
      << fmt_double(result.report.recall) << ',' << fmt_double(result.report.f1)
      << ',' << fmt_double(result.report.threshold) << '\n';
  const auto emit_groups = [&](const std::map<int, double>& groups,
                               const std::string& scope) {
    for (const auto& [cls, acc] : groups) {
      out << regime << ',' << scope << ',' << cls << ',' << fmt_double(acc)
          << ",,,,\n";
    }
  };
  if (result.group_accuracy) emit_groups(*result.group_accuracy, "group_clean");
  if (result.perturbed_group_accuracy) {
    emit_groups(*result.perturbed_group_accuracy, "group_perturbed");
  }
  return out.str();
}

std::pair<Dataset, Dataset> load_dataset(const ExperimentConfig& config) {
  if (config.dataset_kind == "idx") {
    Dataset train = load_idx(config.idx.train_images, config.idx.train_labels,
                             config.idx.limit);
    Dataset test = load_idx(config.idx.test_images, config.idx.test_labels,
                            config.idx.limit);
    train.name = config.dataset_name;
    test.name = config.dataset_name;
    return {std::move(train), std::move(test)};
  }
  return synth_blobs(config.synth.classes, config.synth.dim,
                     config.synth.per_class, config.synth.separation,
                     config.synth.noise_std, config.seed + kDatasetSeedOffset);
}

Regime make_regime(const ExperimentConfig& config, RegimeKind kind) {
  Regime regime;
  regime.kind = kind;
  regime.sgd = config.sgd;
  if (kind == RegimeKind::kAdv || kind == RegimeKind::kDpAdv) {
    regime.attack = config.attack;
  }
  if (kind == RegimeKind::kDp || kind == RegimeKind::kDpAdv) {
    DPConfig dp;
    dp.clip_norm = config.dp.clip_norm;
    dp.sample_rate = config.dp.sample_rate;
    dp.delta = config.dp.delta;
    dp.learning_rate = config.sgd.learning_rate;
    dp.weight_decay = config.sgd.weight_decay;
    const long steps_per_epoch = std::max(1L, std::lround(1.0 / dp.sample_rate));
    dp.iterations = steps_per_epoch * config.epochs;
    dp.noise_multiplier =
        config.dp.noise_multiplier > 0.0
            ? config.dp.noise_multiplier
            : calibrate_sigma(config.dp.target_epsilon, dp.delta,
                              dp.sample_rate, dp.iterations);
    regime.dp = dp;
  }
  regime.validate();
  return regime;
}

ResultsBundle run_experiment(const ExperimentConfig& config) {
  config.validate();

  std::filesystem::path out_dir = config.output_dir;
  if (const char* env = std::getenv("DPADV_OUTPUT_DIR")) {
    if (*env != '\0') out_dir = env;
  }
  std::filesystem::create_directories(out_dir);

  const auto [train_set, test_set] = load_dataset(config);
  train_set.validate();
  test_set.validate();

  ResultsBundle bundle;
  bundle.output_dir = out_dir;
  bundle.manifest = render_manifest(config);
  write_text_file(out_dir / "manifest.txt", bundle.manifest);

  // Regimes (and any sigma calibration) are materialized up front, in config
  // order, so parallel execution cannot reorder anything observable.
  std::vector<Regime> regimes;
  regimes.reserve(config.regimes.size());
  for (RegimeKind kind : config.regimes) {
    regimes.push_back(make_regime(config, kind));
  }

  const std::vector<std::size_t> dims = [&] {
    std::vector<std::size_t> d{train_set.dim()};
    d.insert(d.end(), config.hidden_dims.begin(), config.hidden_dims.end());
    d.push_back(static_cast<std::size_t>(train_set.class_count));
    return d;
  }();

  bundle.per_regime.resize(regimes.size());
  std::vector<std::exception_ptr> errors(regimes.size());

  const auto run_one = [&](std::size_t i) {
    try {
      const Regime& regime = regimes[i];
      const std::uint64_t seed = regime_seed(config, regime.kind);
      Model model = init_params(seed, dims);
      RegimeResult& result = bundle.per_regime[i];
      result.kind = regime.kind;
      std::tie(model, result.records) =
          train(std::move(model), train_set, test_set, regime, config.epochs,
                seed);
      if (!result.records.empty()) {
        result.final_epsilon = result.records.back().epsilon_so_far;
      }
      result.report = mia::attack_individual(
          model, train_set, test_set, config.audit.n_audit,
          seed + kAuditSeedOffset, config.audit.score_kind);
      if (config.audit.group_level) {
        result.group_accuracy = mia::attack_groups(
            model, train_set, test_set, std::nullopt, seed + kAuditSeedOffset,
            config.audit.n_audit, config.audit.score_kind);
        result.report.per_class = result.group_accuracy;
      }
      if (config.audit.perturbed_groups) {
        result.perturbed_group_accuracy = mia::attack_groups(
            model, train_set, test_set, config.attack, seed + kAuditSeedOffset,
            config.audit.n_audit, config.audit.score_kind);
      }
      result.final_model = model;

      const std::string name = to_string(regime.kind);
      write_text_file(out_dir / (name + "_epochs.csv"),
                      epoch_records_csv(result.records, regime.kind, false));
      write_text_file(out_dir / (name + "_epochs_smoothed.csv"),
                      epoch_records_csv(result.records, regime.kind, true));
      write_text_file(out_dir / (name + "_mia.csv"), mia_report_csv(result));
      save_checkpoint(out_dir / (name + "_model.bin"), model);

      if (regime.dp && config.dp.noise_multiplier <= 0.0 &&
          config.dp.target_epsilon > 0.0 && result.final_epsilon &&
          *result.final_epsilon > config.dp.target_epsilon * (1.0 + 1e-9)) {
        std::cerr << "warning: regime " << name << " spent epsilon "
                  << *result.final_epsilon << " above target "
                  << config.dp.target_epsilon << "\n";
      }
    } catch (...) {
      errors[i] = std::current_exception();
    }
  };

  if (config.parallel_regimes) {
    std::vector<std::thread> workers;
    workers.reserve(regimes.size());
    for (std::size_t i = 0; i < regimes.size(); ++i) {
      workers.emplace_back(run_one, i);
    }
    for (auto& w : workers) w.join();
  } else {
    for (std::size_t i = 0; i < regimes.size(); ++i) run_one(i);
  }
  for (const auto& err : errors) {
    if (err) std::rethrow_exception(err);  // partial results stay on disk
  }

  // Table-style summary: final accuracies, adversarial accuracy under the
  // experiment's attack, privacy spend and the MIA headline numbers.
  std::ostringstream summary;
  summary << "regime,train_acc,test_acc,adv_acc,epsilon,mia_accuracy,"
             "mia_precision,mia_recall,mia_f1\n";
  for (const RegimeResult& result : bundle.per_regime) {
    const EpochRecord& last = result.records.back();
    std::optional<double> adv_acc;
    if (config.attack.gamma > 0.0) {
      adv_acc = adversarial_accuracy(result.final_model, test_set, config.attack);
    }
    summary << to_string(result.kind) << ',' << fmt_double(last.train_acc)
            << ',' << fmt_double(last.test_acc) << ',' << fmt_opt(adv_acc)
            << ',' << fmt_opt(result.final_epsilon) << ','
            << fmt_double(result.report.accuracy) << ','
            << fmt_double(result.report.precision) << ','
            << fmt_double(result.report.recall) << ','
            << fmt_double(result.report.f1) << '\n';
  }
  write_text_file(out_dir / "summary.csv", summary.str());
  return bundle;
}

}  // namespace dpadv
