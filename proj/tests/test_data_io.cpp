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

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <set>

#include "doctest.h"
#include "dpadv/data_io.hpp"
#include "dpadv/trainer.hpp"
#include "test_util.hpp"

using namespace dpadv;
using namespace dpadv::testing;

namespace {

namespace fs = std::filesystem;

fs::path write_bytes(const std::string& name, const std::vector<std::uint8_t>& bytes) {
  const fs::path path = fs::temp_directory_path() / name;
  std::ofstream out(path, std::ios::binary);
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  return path;
}

void push_be32(std::vector<std::uint8_t>& v, std::uint32_t x) {
  v.push_back(static_cast<std::uint8_t>(x >> 24));
  v.push_back(static_cast<std::uint8_t>(x >> 16));
  v.push_back(static_cast<std::uint8_t>(x >> 8));
  v.push_back(static_cast<std::uint8_t>(x));
}

std::vector<std::uint8_t> image_fixture(std::uint32_t count,
                                        const std::vector<std::uint8_t>& pixels,
                                        std::uint32_t magic = 2051) {
  std::vector<std::uint8_t> bytes;
  push_be32(bytes, magic);
  push_be32(bytes, count);
  push_be32(bytes, 2);
  push_be32(bytes, 2);
  bytes.insert(bytes.end(), pixels.begin(), pixels.end());
  return bytes;
}

std::vector<std::uint8_t> label_fixture(const std::vector<std::uint8_t>& labels,
                                        std::uint32_t magic = 2049) {
  std::vector<std::uint8_t> bytes;
  push_be32(bytes, magic);
  push_be32(bytes, static_cast<std::uint32_t>(labels.size()));
  bytes.insert(bytes.end(), labels.begin(), labels.end());
  return bytes;
}

}  // namespace

TEST_SUITE("data_io") {

TEST_CASE("a two-image IDX pair parses with scaled pixels") {
  const auto img = write_bytes(
      "dpadv_img2.idx", image_fixture(2, {0, 255, 128, 17, 255, 0, 1, 254}));
  const auto lab = write_bytes("dpadv_lab2.idx", label_fixture({3, 9}));
  const Dataset data = load_idx(img.string(), lab.string());
  REQUIRE(data.size() == 2);
  CHECK(data.dim() == 4);
  CHECK(data.inputs.at(0, 0) == 0.0);
  CHECK(data.inputs.at(0, 1) == 1.0);
  CHECK(data.inputs.at(0, 2) == doctest::Approx(128.0 / 255.0));
  CHECK(data.labels == std::vector<int>{3, 9});
  CHECK(data.class_count == 10);
  data.validate();
}

TEST_CASE("a known three-image fixture round-trips bitwise") {
  const std::vector<std::uint8_t> pixels{
      10, 20, 30, 40, 50, 60, 70, 80, 90, 100, 110, 120};
  const auto img = write_bytes("dpadv_img3.idx", image_fixture(3, pixels));
  const auto lab = write_bytes("dpadv_lab3.idx", label_fixture({0, 1, 2}));
  const Dataset data = load_idx(img.string(), lab.string());
  REQUIRE(data.size() == 3);
  for (std::size_t i = 0; i < pixels.size(); ++i) {
    CHECK(data.inputs.values[i] == static_cast<double>(pixels[i]) / 255.0);
  }
  // limit keeps a prefix
  const Dataset limited = load_idx(img.string(), lab.string(), 2);
  CHECK(limited.size() == 2);
  CHECK(limited.labels == std::vector<int>{0, 1});
}

TEST_CASE("the malformed-file corpus is rejected with byte offsets") {
  const std::vector<std::uint8_t> pixels(8, 7);
  const auto good_img = write_bytes("dpadv_ok.idx", image_fixture(2, pixels));
  const auto good_lab = write_bytes("dpadv_okl.idx", label_fixture({1, 2}));

  SUBCASE("wrong image magic") {
    const auto bad = write_bytes("dpadv_badmagic.idx",
                                 image_fixture(2, pixels, 2052));
    try {
      load_idx(bad.string(), good_lab.string());
      FAIL("expected DataFormatError");
    } catch (const DataFormatError& e) {
      CHECK(e.byte_offset() == 0);
    }
  }
  SUBCASE("wrong label magic") {
    const auto bad = write_bytes("dpadv_badlmagic.idx",
                                 label_fixture({1, 2}, 2050));
    CHECK_THROWS_AS(load_idx(good_img.string(), bad.string()),
                    DataFormatError);
  }
  SUBCASE("truncated image header") {
    const auto bad = write_bytes("dpadv_trunchdr.idx", {0, 0, 8});
    CHECK_THROWS_AS(load_idx(bad.string(), good_lab.string()),
                    DataFormatError);
  }
  SUBCASE("truncated pixel data") {
    auto bytes = image_fixture(2, pixels);
    bytes.resize(bytes.size() - 3);
    const auto bad = write_bytes("dpadv_truncpix.idx", bytes);
    CHECK_THROWS_AS(load_idx(bad.string(), good_lab.string()),
                    DataFormatError);
  }
  SUBCASE("label/image count mismatch") {
    const auto bad = write_bytes("dpadv_mismatch.idx",
                                 label_fixture({1, 2, 3}));
    try {
      load_idx(good_img.string(), bad.string());
      FAIL("expected DataFormatError");
    } catch (const DataFormatError& e) {
      CHECK(e.byte_offset() == 4);
    }
  }
  SUBCASE("truncated labels") {
    std::vector<std::uint8_t> bytes;
    push_be32(bytes, 2049);
    push_be32(bytes, 2);
    bytes.push_back(1);
    const auto bad = write_bytes("dpadv_trunclab.idx", bytes);
    CHECK_THROWS_AS(load_idx(good_img.string(), bad.string()),
                    DataFormatError);
  }
  SUBCASE("missing file") {
    CHECK_THROWS_AS(load_idx("/nonexistent/images.idx", good_lab.string()),
                    Error);
  }
}

TEST_CASE("well separated blobs are learnable to 99 percent") {
  const auto [train_set, test_set] = synth_blobs(3, 8, 150, 0.9, 0.02, 31);
  train_set.validate();
  test_set.validate();
  Regime regime;
  regime.kind = RegimeKind::kNone;
  regime.sgd.learning_rate = 0.5;
  regime.sgd.weight_decay = 0.0;
  regime.sgd.batch_size = 32;
  // linear model suffices
  auto [model, records] = train(init_params(32, {8, 3}), train_set, test_set,
                                regime, 30, 33);
  CHECK(records.back().test_acc >= 0.99);
}

TEST_CASE("zero separation is unlearnable beyond chance") {
  const auto [train_set, test_set] = synth_blobs(3, 8, 150, 0.0, 0.05, 34);
  Regime regime;
  regime.kind = RegimeKind::kNone;
  regime.sgd.learning_rate = 0.5;
  regime.sgd.weight_decay = 0.0;
  regime.sgd.batch_size = 32;
  auto [model, records] = train(init_params(35, {8, 3}), train_set, test_set,
                                regime, 20, 36);
  CHECK(records.back().test_acc <= 1.0 / 3.0 + 0.12);
}

TEST_CASE("empirical class means sit on the configured centers") {
  const int per_class = 1000;
  const double noise = 0.05;
  const double sep = 0.6;
  const auto [train_set, test_set] = synth_blobs(3, 4, per_class, sep, noise, 37);
  const double base = (1.0 - sep) / 2.0;

  for (int c = 0; c < 3; ++c) {
    std::vector<double> mean(4, 0.0);
    int count = 0;
    const auto accumulate = [&](const Dataset& d) {
      for (std::size_t i = 0; i < d.size(); ++i) {
        if (d.labels[i] != c) continue;
        ++count;
        for (int j = 0; j < 4; ++j) mean[j] += d.inputs.at(i, j);
      }
    };
    accumulate(train_set);
    accumulate(test_set);
    REQUIRE(count == per_class);
    const double tol = 3.0 * noise / std::sqrt(static_cast<double>(count));
    for (int j = 0; j < 4; ++j) {
      const double center = base + (j == c % 4 ? sep : 0.0);
      CHECK(std::abs(mean[j] / count - center) <= tol);
    }
  }
}

TEST_CASE("train and test splits are disjoint and sized 80/20") {
  const auto [train_set, test_set] = synth_blobs(4, 6, 100, 0.5, 0.08, 38);
  CHECK(train_set.size() == 4 * 80);
  CHECK(test_set.size() == 4 * 20);
  // no row of test appears in train (continuous noise makes collisions
  // impossible unless splits overlap)
  std::set<std::vector<double>> train_rows;
  for (std::size_t i = 0; i < train_set.size(); ++i) {
    const auto row = train_set.inputs.row(i);
    train_rows.insert(std::vector<double>(row.begin(), row.end()));
  }
  for (std::size_t i = 0; i < test_set.size(); ++i) {
    const auto row = test_set.inputs.row(i);
    CHECK(train_rows.count(std::vector<double>(row.begin(), row.end())) == 0);
  }
}

TEST_CASE("shuffled epochs partition the dataset") {
  NoiseSource rng(39);
  const auto batches = shuffled_epoch_batches(10, 3, rng);
  REQUIRE(batches.size() == 4);
  CHECK(batches[0].size() == 3);
  CHECK(batches[1].size() == 3);
  CHECK(batches[2].size() == 3);
  CHECK(batches[3].size() == 1);
  std::set<std::size_t> seen;
  for (const auto& batch : batches) {
    for (std::size_t i : batch) seen.insert(i);
    CHECK(std::is_sorted(batch.begin(), batch.end()));
  }
  CHECK(seen.size() == 10);

  NoiseSource rng_a(40);
  NoiseSource rng_b(40);
  CHECK(shuffled_epoch_batches(10, 3, rng_a) ==
        shuffled_epoch_batches(10, 3, rng_b));
}

TEST_CASE("gather copies rows and labels") {
  const auto [train_set, test_set] = synth_blobs(2, 4, 10, 0.5, 0.05, 41);
  const Batch batch = train_set.gather({0, 3, 5});
  REQUIRE(batch.size() == 3);
  CHECK(batch.labels[1] == train_set.labels[3]);
  for (int j = 0; j < 4; ++j) {
    CHECK(batch.inputs.at(2, j) == train_set.inputs.at(5, j));
  }
}

}  // TEST_SUITE
