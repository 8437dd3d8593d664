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

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "dpadv/experiment.hpp"

namespace py = pybind11;
using namespace dpadv;

PYBIND11_MODULE(_core, m) {
  m.doc() = "differentially private adversarial training laboratory";

  py::register_exception<Error>(m, "DpadvError", PyExc_RuntimeError);

  py::class_<Tensor>(m, "Tensor")
      .def(py::init<>())
      .def(py::init([](std::vector<std::size_t> shape,
                       std::vector<double> values) {
             return Tensor(std::move(shape), std::move(values));
           }),
           py::arg("shape"), py::arg("values"))
      .def_readonly("shape", &Tensor::shape)
      .def_readonly("values", &Tensor::values)
      .def("rows", &Tensor::rows)
      .def("cols", &Tensor::cols);

  py::class_<Batch>(m, "Batch")
      .def(py::init([](Tensor inputs, std::vector<int> labels) {
             Batch b;
             b.inputs = std::move(inputs);
             b.labels = std::move(labels);
             return b;
           }),
           py::arg("inputs"), py::arg("labels"))
      .def_readonly("inputs", &Batch::inputs)
      .def_readonly("labels", &Batch::labels);

  py::class_<Model>(m, "Model")
      .def("parameter_count", &Model::parameter_count)
      .def("input_dim", &Model::input_dim)
      .def("output_dim", &Model::output_dim)
      .def("flatten_parameters", &Model::flatten_parameters);

  py::class_<PerSampleGrads>(m, "PerSampleGrads")
      .def_readonly("grads", &PerSampleGrads::grads)
      .def_readonly("per_example_loss", &PerSampleGrads::per_example_loss);

  py::class_<Dataset>(m, "Dataset")
      .def_readonly("inputs", &Dataset::inputs)
      .def_readonly("labels", &Dataset::labels)
      .def_readonly("class_count", &Dataset::class_count)
      .def_readonly("name", &Dataset::name)
      .def("__len__", &Dataset::size)
      .def("dim", &Dataset::dim);

  py::class_<NoiseSource>(m, "NoiseSource")
      .def(py::init<std::uint64_t>(), py::arg("seed"))
      .def("uniform", py::overload_cast<>(&NoiseSource::uniform))
      .def("normal", &NoiseSource::normal);

  py::class_<AttackConfig>(m, "AttackConfig")
      .def(py::init([](const std::string& kind, double gamma, double step_size,
                       int steps, bool random_start) {
             AttackConfig cfg;
             cfg.kind = attack_kind_from_string(kind);
             cfg.gamma = gamma;
             cfg.step_size = step_size;
             cfg.steps = steps;
             cfg.random_start = random_start;
             cfg.validate();
             return cfg;
           }),
           py::arg("kind") = "pgd", py::arg("gamma") = 0.1,
           py::arg("step_size") = 0.025, py::arg("steps") = 5,
           py::arg("random_start") = false)
      .def_readwrite("gamma", &AttackConfig::gamma)
      .def_readwrite("step_size", &AttackConfig::step_size)
      .def_readwrite("steps", &AttackConfig::steps)
      .def_readwrite("random_start", &AttackConfig::random_start);

  py::class_<DPConfig>(m, "DPConfig")
      .def(py::init([](double clip_norm, double noise_multiplier,
                       double sample_rate, double learning_rate,
                       long iterations, double delta, double weight_decay) {
             DPConfig cfg;
             cfg.clip_norm = clip_norm;
             cfg.noise_multiplier = noise_multiplier;
             cfg.sample_rate = sample_rate;
             cfg.learning_rate = learning_rate;
             cfg.iterations = iterations;
             cfg.delta = delta;
             cfg.weight_decay = weight_decay;
             cfg.validate();
             return cfg;
           }),
           py::arg("clip_norm") = 1.0, py::arg("noise_multiplier") = 1.0,
           py::arg("sample_rate") = 0.01, py::arg("learning_rate") = 0.005,
           py::arg("iterations") = 1, py::arg("delta") = 1e-5,
           py::arg("weight_decay") = 5e-4)
      .def_readwrite("clip_norm", &DPConfig::clip_norm)
      .def_readwrite("noise_multiplier", &DPConfig::noise_multiplier)
      .def_readwrite("sample_rate", &DPConfig::sample_rate)
      .def_readwrite("learning_rate", &DPConfig::learning_rate)
      .def_readwrite("delta", &DPConfig::delta)
      .def_readwrite("weight_decay", &DPConfig::weight_decay);

  py::class_<SgdConfig>(m, "SgdConfig")
      .def(py::init([](double learning_rate, double weight_decay,
                       std::size_t batch_size) {
             SgdConfig cfg;
             cfg.learning_rate = learning_rate;
             cfg.weight_decay = weight_decay;
             cfg.batch_size = batch_size;
             return cfg;
           }),
           py::arg("learning_rate") = 0.005, py::arg("weight_decay") = 5e-4,
           py::arg("batch_size") = 64)
      .def_readwrite("learning_rate", &SgdConfig::learning_rate)
      .def_readwrite("weight_decay", &SgdConfig::weight_decay)
      .def_readwrite("batch_size", &SgdConfig::batch_size);

  py::class_<Regime>(m, "Regime")
      .def(py::init([](const std::string& kind,
                       std::optional<AttackConfig> attack,
                       std::optional<DPConfig> dp, std::optional<SgdConfig> sgd) {
             Regime regime;
             regime.kind = regime_kind_from_string(kind);
             regime.attack = std::move(attack);
             regime.dp = std::move(dp);
             if (sgd) regime.sgd = *sgd;
             regime.validate();
             return regime;
           }),
           py::arg("kind"), py::arg("attack") = std::nullopt,
           py::arg("dp") = std::nullopt, py::arg("sgd") = std::nullopt);

  py::class_<EpochRecord>(m, "EpochRecord")
      .def_readonly("epoch", &EpochRecord::epoch)
      .def_readonly("train_acc", &EpochRecord::train_acc)
      .def_readonly("test_acc", &EpochRecord::test_acc)
      .def_readonly("adv_acc", &EpochRecord::adv_acc)
      .def_readonly("mean_train_loss", &EpochRecord::mean_train_loss)
      .def_readonly("mean_test_loss", &EpochRecord::mean_test_loss)
      .def_readonly("epsilon_so_far", &EpochRecord::epsilon_so_far);

  py::class_<RdpCurve>(m, "RdpCurve")
      .def_readonly("orders", &RdpCurve::orders)
      .def_readonly("eps_per_order", &RdpCurve::eps_per_order);

  py::class_<PrivacySpend>(m, "PrivacySpend")
      .def_readonly("epsilon", &PrivacySpend::epsilon)
      .def_readonly("delta", &PrivacySpend::delta)
      .def_readonly("achieving_order", &PrivacySpend::achieving_order);

  py::class_<mia::MIAReport>(m, "MIAReport")
      .def_readonly("accuracy", &mia::MIAReport::accuracy)
      .def_readonly("precision", &mia::MIAReport::precision)
      .def_readonly("recall", &mia::MIAReport::recall)
      .def_readonly("f1", &mia::MIAReport::f1)
      .def_readonly("threshold", &mia::MIAReport::threshold)
      .def_readonly("per_class", &mia::MIAReport::per_class);

  // nn-core
  m.def("init_params", &init_params, py::arg("seed"), py::arg("dims"));
  m.def("forward", &forward, py::arg("model"), py::arg("inputs"));
  m.def(
      "loss_ce",
      [](const Tensor& logits, const std::vector<int>& labels) {
        const LossResult r = loss_ce(logits, labels);
        return py::make_tuple(r.per_example, r.mean);
      },
      py::arg("logits"), py::arg("labels"));
  m.def("grads_per_sample", &grads_per_sample, py::arg("model"),
        py::arg("batch"));
  m.def("grad_wrt_input", &grad_wrt_input, py::arg("model"), py::arg("inputs"),
        py::arg("labels"));

  // attacks
  m.def("fgsm", &fgsm, py::arg("model"), py::arg("batch"), py::arg("config"));
  m.def(
      "pgd",
      [](const Model& model, const Batch& batch, const AttackConfig& cfg,
         std::optional<std::uint64_t> seed) {
        if (seed) {
          NoiseSource rng(*seed);
          return pgd(model, batch, cfg, &rng);
        }
        return pgd(model, batch, cfg);
      },
      py::arg("model"), py::arg("batch"), py::arg("config"),
      py::arg("seed") = std::nullopt);
  m.def("adversarial_accuracy", &adversarial_accuracy, py::arg("model"),
        py::arg("dataset"), py::arg("config"));

  // dp-optim
  m.def(
      "clip",
      [](std::vector<double> g, double clip_norm) {
        clip(g, clip_norm);
        return g;
      },
      py::arg("gradient"), py::arg("clip_norm"));
  m.def(
      "poisson_subsample",
      [](std::size_t n, double q, std::uint64_t seed) {
        NoiseSource rng(seed);
        return poisson_subsample(n, q, rng);
      },
      py::arg("n"), py::arg("q"), py::arg("seed"));

  // accountant
  m.def("default_rdp_orders", &default_rdp_orders);
  m.def("rdp_single_step", &rdp_single_step, py::arg("q"), py::arg("sigma"),
        py::arg("order"));
  m.def(
      "account",
      [](double q, double sigma, long steps, double delta) {
        return account(q, sigma, steps, delta);
      },
      py::arg("q"), py::arg("sigma"), py::arg("steps"), py::arg("delta"));
  m.def(
      "calibrate_sigma",
      [](double target_eps, double delta, double q, long steps) {
        return calibrate_sigma(target_eps, delta, q, steps);
      },
      py::arg("target_eps"), py::arg("delta"), py::arg("q"), py::arg("steps"));

  // data
  m.def("synth_blobs", &synth_blobs, py::arg("classes"), py::arg("dim"),
        py::arg("n_per_class"), py::arg("separation"), py::arg("noise_std"),
        py::arg("seed"));
  m.def("load_idx", &load_idx, py::arg("images_path"), py::arg("labels_path"),
        py::arg("limit") = 0);
  m.def("take", &take, py::arg("dataset"), py::arg("n"));

  // trainer
  m.def(
      "train",
      [](const Model& model, const Dataset& train_set, const Dataset& test_set,
         const Regime& regime, int epochs, std::uint64_t seed) {
        auto [trained, records] =
            train(model, train_set, test_set, regime, epochs, seed);
        return py::make_tuple(std::move(trained), std::move(records));
      },
      py::arg("model"), py::arg("train_set"), py::arg("test_set"),
      py::arg("regime"), py::arg("epochs"), py::arg("seed"));
  m.def(
      "evaluate",
      [](const Model& model, const Dataset& dataset,
         std::optional<AttackConfig> attack) {
        const auto [acc, loss] = evaluate(model, dataset, attack);
        return py::make_tuple(acc, loss);
      },
      py::arg("model"), py::arg("dataset"), py::arg("attack") = std::nullopt);

  // mia
  m.def(
      "attack_individual",
      [](const Model& model, const Dataset& train_set, const Dataset& test_set,
         std::size_t n_audit, std::uint64_t seed, const std::string& kind,
         std::optional<double> threshold) {
        return mia::attack_individual(model, train_set, test_set, n_audit,
                                      seed, mia::score_kind_from_string(kind),
                                      threshold);
      },
      py::arg("model"), py::arg("train_set"), py::arg("test_set"),
      py::arg("n_audit"), py::arg("seed"), py::arg("kind") = "confidence",
      py::arg("threshold") = std::nullopt);
  m.def(
      "attack_groups",
      [](const Model& model, const Dataset& train_set, const Dataset& test_set,
         std::optional<AttackConfig> perturb, std::uint64_t seed,
         std::size_t n_audit, const std::string& kind) {
        return mia::attack_groups(model, train_set, test_set, perturb, seed,
                                  n_audit, mia::score_kind_from_string(kind));
      },
      py::arg("model"), py::arg("train_set"), py::arg("test_set"),
      py::arg("perturb") = std::nullopt, py::arg("seed") = 0,
      py::arg("n_audit") = 1000, py::arg("kind") = "confidence");

  // experiment helpers
  m.def("smooth", &smooth, py::arg("series"), py::arg("window") = 10);
  m.def("save_checkpoint", &save_checkpoint, py::arg("path"), py::arg("model"));
  m.def("load_checkpoint", &load_checkpoint, py::arg("path"));
  m.def(
      "run_experiment_config",
      [](const std::string& config_text) {
        const ResultsBundle bundle =
            run_experiment(parse_config_text(config_text));
        return bundle.output_dir;
      },
      py::arg("config_text"),
      "Parses a config, runs every regime, writes the bundle and returns "
      "the output directory.");

  m.attr("__version__") = "1.0.0";
}
