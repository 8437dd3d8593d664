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

#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "dpadv/experiment.hpp"
#include "test_util.hpp"

using namespace dpadv;
using namespace dpadv::testing;

namespace {

namespace fs = std::filesystem;

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

const char* kSmallConfig = R"(
# small smoke grid
dataset.kind = synth
dataset.synth.classes = 3
dataset.synth.dim = 6
dataset.synth.per_class = 50
dataset.synth.separation = 0.6
dataset.synth.noise_std = 0.08
model.hidden = 8
regimes = none
train.epochs = 5
train.seed = 3
train.lr = 0.2
train.weight_decay = 0
train.batch_size = 20
audit.n_audit = 30
)";

int count_lines(const std::string& text) {
  int lines = 0;
  for (char c : text) lines += c == '\n' ? 1 : 0;
  return lines;
}

}  // namespace

TEST_SUITE("experiment") {

TEST_CASE("smoothing is a trailing running mean") {
  const std::vector<double> identity = smooth({1.0, 5.0, -2.0}, 1);
  CHECK(identity == std::vector<double>{1.0, 5.0, -2.0});

  const std::vector<double> constant = smooth({0.25, 0.25, 0.25, 0.25}, 10);
  for (double v : constant) CHECK(v == doctest::Approx(0.25).epsilon(1e-15));

  std::vector<double> ramp(20);
  for (int i = 0; i < 20; ++i) ramp[i] = static_cast<double>(i + 1);
  const std::vector<double> smoothed = smooth(ramp, 10);
  CHECK(smoothed.back() == doctest::Approx(15.5).epsilon(1e-15));
  // prefix averages the available points
  CHECK(smoothed[0] == 1.0);
  CHECK(smoothed[2] == doctest::Approx(2.0).epsilon(1e-15));
  CHECK_THROWS_AS(smooth(ramp, 0), ConfigError);
}

TEST_CASE("config defaults mirror the reference hyperparameters") {
  const ExperimentConfig config = parse_config_text("dataset.kind = synth\n");
  CHECK(config.epochs == 200);
  CHECK(config.sgd.learning_rate == 0.005);
  CHECK(config.sgd.weight_decay == 5e-4);
  CHECK(config.regimes.size() == 4);
}

TEST_CASE("named datasets pull their attack and epsilon defaults") {
  const ExperimentConfig mnist = parse_config_text(
      "dataset.kind = synth\ndataset.name = mnist\n");
  CHECK(mnist.attack.steps == 25);
  CHECK(mnist.attack.step_size == 0.02);
  CHECK(mnist.attack.gamma == 0.25);
  CHECK(mnist.dp.target_epsilon == 1.0);

  const ExperimentConfig cifar = parse_config_text(
      "dataset.kind = synth\ndataset.name = cifar10\n");
  CHECK(cifar.attack.steps == 10);
  CHECK(cifar.attack.gamma == doctest::Approx(8.0 / 255.0));
  CHECK(cifar.dp.target_epsilon == 3.0);

  // explicit settings win over the name table
  const ExperimentConfig custom = parse_config_text(
      "dataset.kind = synth\ndataset.name = mnist\nattack.gamma = 0.5\n");
  CHECK(custom.attack.gamma == 0.5);
}

TEST_CASE("config rejections") {
  CHECK_THROWS_AS(parse_config_text("bogus.key = 1\n"), ConfigError);
  CHECK_THROWS_AS(parse_config_text("train.epochs = -3\n"), ConfigError);
  CHECK_THROWS_AS(parse_config_text("train.epochs\n"), ConfigError);
  CHECK_THROWS_AS(parse_config_text("train.epochs = 5\ntrain.epochs = 6\n"),
                  ConfigError);
  CHECK_THROWS_AS(parse_config_text("dataset.kind = idx\n"), ConfigError);
  CHECK_THROWS_AS(parse_config_text("train.lr = abc\n"), ConfigError);
}

TEST_CASE("the manifest is a valid config that reproduces itself") {
  const ExperimentConfig config = parse_config_text(kSmallConfig);
  const std::string manifest = render_manifest(config);
  const ExperimentConfig reparsed = parse_config_text(manifest);
  CHECK(render_manifest(reparsed) == manifest);
  CHECK(reparsed.epochs == config.epochs);
  CHECK(reparsed.seed == config.seed);
  CHECK(reparsed.sgd.learning_rate == config.sgd.learning_rate);
}

TEST_CASE("a single-regime run writes the full bundle") {
  ExperimentConfig config = parse_config_text(kSmallConfig);
  const fs::path dir = fs::temp_directory_path() / "dpadv_run_small";
  fs::remove_all(dir);
  config.output_dir = dir;
  const ResultsBundle bundle = run_experiment(config);

  REQUIRE(bundle.per_regime.size() == 1);
  CHECK(bundle.per_regime[0].records.size() == 5);

  const std::string csv = slurp(dir / "none_epochs.csv");
  CHECK(count_lines(csv) == 6);  // header + 5 epochs
  std::istringstream lines(csv);
  std::string header;
  std::getline(lines, header);
  CHECK(header ==
        "epoch,regime,train_acc,test_acc,adv_acc,train_loss,test_loss,epsilon");
  std::string row;
  std::getline(lines, row);
  // no attack, no dp: adv_acc and epsilon are empty fields, never zeros
  CHECK(row.find(",,") != std::string::npos);
  CHECK(row.back() != '0');

  CHECK(fs::exists(dir / "none_epochs_smoothed.csv"));
  CHECK(fs::exists(dir / "none_mia.csv"));
  CHECK(fs::exists(dir / "none_model.bin"));
  CHECK(fs::exists(dir / "manifest.txt"));
  CHECK(fs::exists(dir / "summary.csv"));
  fs::remove_all(dir);
}

TEST_CASE("reruns from the manifest are byte-identical") {
  ExperimentConfig config = parse_config_text(kSmallConfig);
  const fs::path dir_a = fs::temp_directory_path() / "dpadv_rerun_a";
  const fs::path dir_b = fs::temp_directory_path() / "dpadv_rerun_b";
  fs::remove_all(dir_a);
  fs::remove_all(dir_b);

  config.output_dir = dir_a;
  run_experiment(config);
  const ExperimentConfig from_manifest =
      parse_config_text(slurp(dir_a / "manifest.txt"));
  ExperimentConfig second = from_manifest;
  second.output_dir = dir_b;
  run_experiment(second);

  for (const char* name :
       {"none_epochs.csv", "none_epochs_smoothed.csv", "none_mia.csv",
        "summary.csv"}) {
    CHECK(slurp(dir_a / name) == slurp(dir_b / name));
  }
  CHECK(slurp(dir_a / "none_model.bin") == slurp(dir_b / "none_model.bin"));
  fs::remove_all(dir_a);
  fs::remove_all(dir_b);
}

TEST_CASE("parallel regime execution changes no output bytes") {
  ExperimentConfig config = parse_config_text(kSmallConfig);
  config.regimes = {RegimeKind::kNone, RegimeKind::kAdv};
  config.attack.kind = AttackKind::kPgd;
  config.attack.gamma = 0.1;
  config.attack.step_size = 0.025;
  config.attack.steps = 3;
  const fs::path dir_seq = fs::temp_directory_path() / "dpadv_seq";
  const fs::path dir_par = fs::temp_directory_path() / "dpadv_par";
  fs::remove_all(dir_seq);
  fs::remove_all(dir_par);

  config.output_dir = dir_seq;
  config.parallel_regimes = false;
  run_experiment(config);
  config.output_dir = dir_par;
  config.parallel_regimes = true;
  run_experiment(config);

  for (const char* name :
       {"none_epochs.csv", "adv_epochs.csv", "none_mia.csv", "adv_mia.csv",
        "summary.csv"}) {
    CHECK(slurp(dir_seq / name) == slurp(dir_par / name));
  }
  fs::remove_all(dir_seq);
  fs::remove_all(dir_par);
}

TEST_CASE("checkpoints round-trip bitwise") {
  const Model model = random_model(44, {5, 7, 3});
  const fs::path path = fs::temp_directory_path() / "dpadv_ckpt.bin";
  save_checkpoint(path, model);
  const Model loaded = load_checkpoint(path);
  CHECK(loaded.flatten_parameters() == model.flatten_parameters());
  REQUIRE(loaded.layers.size() == model.layers.size());
  for (std::size_t i = 0; i < loaded.layers.size(); ++i) {
    CHECK(loaded.layers[i].in_dim == model.layers[i].in_dim);
    CHECK(loaded.layers[i].out_dim == model.layers[i].out_dim);
    CHECK(loaded.layers[i].activation == model.layers[i].activation);
  }
  fs::remove(path);
}

TEST_CASE("corrupt checkpoints are rejected") {
  const fs::path path = fs::temp_directory_path() / "dpadv_ckpt_bad.bin";
  {
    std::ofstream out(path, std::ios::binary);
    out << "NOTACKPT";
  }
  CHECK_THROWS_AS(load_checkpoint(path), DataFormatError);
  const Model model = random_model(45, {3, 2});
  save_checkpoint(path, model);
  // truncate
  fs::resize_file(path, fs::file_size(path) - 5);
  CHECK_THROWS_AS(load_checkpoint(path), DataFormatError);
  fs::remove(path);
}

TEST_CASE("sigma calibration feeds the dp regimes") {
  ExperimentConfig config = parse_config_text(kSmallConfig);
  config.regimes = {RegimeKind::kDp};
  config.dp.target_epsilon = 2.0;
  config.dp.sample_rate = 0.2;
  config.epochs = 4;
  const Regime regime = make_regime(config, RegimeKind::kDp);
  REQUIRE(regime.dp.has_value());
  CHECK(regime.dp->noise_multiplier > 0.0);
  const long steps = std::lround(1.0 / 0.2) * 4;
  const double eps =
      account(0.2, regime.dp->noise_multiplier, steps, config.dp.delta).epsilon;
  CHECK(eps <= 2.0);
  CHECK(eps >= 2.0 * (1.0 - 1e-3));
}

TEST_CASE("an idx-backed experiment runs end to end") {
  // Render blobs into IDX byte files and drive the full idx config path.
  const auto [blob_train, blob_test] = synth_blobs(3, 36, 60, 0.6, 0.1, 55);
  const auto write_idx_pair = [](const Dataset& d, const fs::path& img_path,
                                 const fs::path& lab_path) {
    std::string img;
    const auto be32 = [](std::string& out, std::uint32_t v) {
      out.push_back(static_cast<char>(v >> 24));
      out.push_back(static_cast<char>(v >> 16));
      out.push_back(static_cast<char>(v >> 8));
      out.push_back(static_cast<char>(v));
    };
    be32(img, 2051);
    be32(img, static_cast<std::uint32_t>(d.size()));
    be32(img, 6);
    be32(img, 6);
    for (double v : d.inputs.values) {
      img.push_back(static_cast<char>(std::lround(v * 255.0)));
    }
    std::string lab;
    be32(lab, 2049);
    be32(lab, static_cast<std::uint32_t>(d.size()));
    for (int l : d.labels) lab.push_back(static_cast<char>(l));
    std::ofstream(img_path, std::ios::binary) << img;
    std::ofstream(lab_path, std::ios::binary) << lab;
  };
  const fs::path base = fs::temp_directory_path();
  write_idx_pair(blob_train, base / "dpadv_itrain.idx3", base / "dpadv_itrain.idx1");
  write_idx_pair(blob_test, base / "dpadv_itest.idx3", base / "dpadv_itest.idx1");

  std::ostringstream cfg;
  cfg << "dataset.kind = idx\n"
      << "dataset.idx.train_images = " << (base / "dpadv_itrain.idx3").string() << "\n"
      << "dataset.idx.train_labels = " << (base / "dpadv_itrain.idx1").string() << "\n"
      << "dataset.idx.test_images = " << (base / "dpadv_itest.idx3").string() << "\n"
      << "dataset.idx.test_labels = " << (base / "dpadv_itest.idx1").string() << "\n"
      << "dataset.idx.limit = 120\n"
      << "model.hidden = 10\n"
      << "regimes = none,dp\n"
      << "train.epochs = 2\n"
      << "train.lr = 0.2\n"
      << "train.batch_size = 30\n"
      << "dp.noise_multiplier = 1.2\n"
      << "dp.sample_rate = 0.1\n"
      << "audit.n_audit = 30\n";
  ExperimentConfig config = parse_config_text(cfg.str());
  const fs::path dir = fs::temp_directory_path() / "dpadv_idx_run";
  fs::remove_all(dir);
  config.output_dir = dir;
  const ResultsBundle bundle = run_experiment(config);
  REQUIRE(bundle.per_regime.size() == 2);
  CHECK(bundle.per_regime[0].records.size() == 2);
  CHECK(bundle.per_regime[1].final_epsilon.has_value());
  CHECK(fs::exists(dir / "dp_model.bin"));
  // the loaded checkpoint audits like the in-memory model
  const Model reloaded = load_checkpoint(dir / "dp_model.bin");
  CHECK(reloaded.flatten_parameters() ==
        bundle.per_regime[1].final_model.flatten_parameters());
  fs::remove_all(dir);
}

TEST_CASE("environment variable overrides the output directory") {
  ExperimentConfig config = parse_config_text(kSmallConfig);
  config.epochs = 1;
  const fs::path dir = fs::temp_directory_path() / "dpadv_env_override";
  fs::remove_all(dir);
  ::setenv("DPADV_OUTPUT_DIR", dir.c_str(), 1);
  run_experiment(config);
  ::unsetenv("DPADV_OUTPUT_DIR");
  CHECK(fs::exists(dir / "manifest.txt"));
  fs::remove_all(dir);
}

}  // TEST_SUITE
