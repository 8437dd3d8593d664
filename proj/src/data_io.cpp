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

#include "dpadv/data_io.hpp"

#include <algorithm>
#include <cstring>
#include <fstream>

namespace dpadv {
namespace {

constexpr std::uint32_t kImageMagic = 2051;  // 0x00000803
constexpr std::uint32_t kLabelMagic = 2049;  // 0x00000801

std::vector<unsigned char> read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open file: " + path);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// Big-endian u32 at `offset`, which is advanced past the field.
std::uint32_t read_be32(const std::vector<unsigned char>& bytes,
                        std::size_t& offset, const std::string& path) {
  if (offset + 4 > bytes.size()) {
    throw DataFormatError(path + ": truncated header", offset);
  }
  const std::uint32_t v = (std::uint32_t{bytes[offset]} << 24) |
                          (std::uint32_t{bytes[offset + 1]} << 16) |
                          (std::uint32_t{bytes[offset + 2]} << 8) |
                          std::uint32_t{bytes[offset + 3]};
  offset += 4;
  return v;
}

}  // namespace

Batch Dataset::gather(const std::vector<std::size_t>& indices) const {
  Batch batch;
  batch.inputs = Tensor(indices.size(), inputs.cols());
  batch.labels.resize(indices.size());
  for (std::size_t i = 0; i < indices.size(); ++i) {
    const auto src = inputs.row(indices[i]);
    std::copy(src.begin(), src.end(), batch.inputs.row(i).begin());
    batch.labels[i] = labels[indices[i]];
  }
  return batch;
}

void Dataset::validate() const {
  if (inputs.rows() != labels.size()) {
    throw DimensionError("dataset inputs/labels length mismatch");
  }
  if (class_count < 2) throw DimensionError("dataset needs >= 2 classes");
  for (int label : labels) {
    if (label < 0 || label >= class_count) {
      throw DimensionError("dataset label out of range");
    }
  }
  for (double v : inputs.values) {
    if (!(v >= 0.0 && v <= 1.0)) {
      throw DimensionError("dataset inputs must lie in [0, 1]");
    }
  }
}

Dataset load_idx(const std::string& images_path,
                 const std::string& labels_path, std::size_t limit) {
  const std::vector<unsigned char> img = read_file(images_path);
  const std::vector<unsigned char> lab = read_file(labels_path);

  std::size_t off = 0;
  const std::uint32_t img_magic = read_be32(img, off, images_path);
  if (img_magic != kImageMagic) {
    throw DataFormatError(images_path + ": bad image magic " +
                              std::to_string(img_magic) + ", expected " +
                              std::to_string(kImageMagic),
                          0);
  }
  const std::uint32_t n_images = read_be32(img, off, images_path);
  const std::uint32_t rows = read_be32(img, off, images_path);
  const std::uint32_t cols = read_be32(img, off, images_path);
  const std::size_t pixels =
      static_cast<std::size_t>(n_images) * rows * cols;
  if (img.size() - off < pixels) {
    throw DataFormatError(images_path + ": truncated pixel data, need " +
                              std::to_string(pixels) + " bytes",
                          img.size());
  }

  std::size_t loff = 0;
  const std::uint32_t lab_magic = read_be32(lab, loff, labels_path);
  if (lab_magic != kLabelMagic) {
    throw DataFormatError(labels_path + ": bad label magic " +
                              std::to_string(lab_magic) + ", expected " +
                              std::to_string(kLabelMagic),
                          0);
  }
  const std::uint32_t n_labels = read_be32(lab, loff, labels_path);
  if (n_labels != n_images) {
    throw DataFormatError(labels_path + ": label count " +
                              std::to_string(n_labels) +
                              " != image count " + std::to_string(n_images),
                          4);
  }
  if (lab.size() - loff < n_labels) {
    throw DataFormatError(labels_path + ": truncated label data", lab.size());
  }

  std::size_t n = n_images;
  if (limit > 0) n = std::min<std::size_t>(n, limit);
  const std::size_t dim = static_cast<std::size_t>(rows) * cols;

  Dataset data;
  data.name = images_path;
  data.inputs = Tensor(n, dim);
  data.labels.resize(n);
  int max_label = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const unsigned char* src = img.data() + off + i * dim;
    auto dst = data.inputs.row(i);
    for (std::size_t j = 0; j < dim; ++j) {
      dst[j] = static_cast<double>(src[j]) / 255.0;
    }
    data.labels[i] = static_cast<int>(lab[loff + i]);
    max_label = std::max(max_label, data.labels[i]);
  }
  data.class_count = max_label + 1;
  return data;
}

Dataset take(const Dataset& data, std::size_t n) {
  if (n >= data.size()) return data;
  Dataset out;
  out.name = data.name;
  out.class_count = data.class_count;
  out.labels.assign(data.labels.begin(), data.labels.begin() + n);
  out.inputs = Tensor(n, data.inputs.cols());
  std::copy_n(data.inputs.values.begin(), n * data.inputs.cols(),
              out.inputs.values.begin());
  return out;
}

std::pair<Dataset, Dataset> synth_blobs(int classes, int dim, int n_per_class,
                                        double separation, double noise_std,
                                        std::uint64_t seed) {
  if (classes < 2) throw ConfigError("synth_blobs needs >= 2 classes");
  if (dim < 2) throw ConfigError("synth_blobs needs dim >= 2");
  if (n_per_class < 2) throw ConfigError("synth_blobs needs >= 2 per class");
  if (noise_std < 0.0) throw ConfigError("noise_std must be >= 0");

  // Centers sit at offset s * e_(c mod d) from a common base point placed so
  // every center is interior to [0, 1]^d; otherwise clamping would bias the
  // blob means.
  const double s = std::clamp(separation, 0.0, 1.0);
  const double base = (1.0 - s) / 2.0;

  NoiseSource rng(seed);
  const auto make = [&](int n_rows) {
    Dataset d;
    d.class_count = classes;
    d.name = "synth_blobs";
    d.inputs = Tensor(static_cast<std::size_t>(n_rows) * classes, dim);
    d.labels.resize(static_cast<std::size_t>(n_rows) * classes);
    return d;
  };

  const int n_train = (n_per_class * 4) / 5;
  const int n_test = n_per_class - n_train;
  Dataset train = make(n_train);
  Dataset test = make(n_test);

  std::size_t ti = 0;
  std::size_t si = 0;
  for (int c = 0; c < classes; ++c) {
    const int active = c % dim;
    for (int k = 0; k < n_per_class; ++k) {
      const bool to_train = k < n_train;
      Dataset& dst = to_train ? train : test;
      const std::size_t row = to_train ? ti++ : si++;
      auto x = dst.inputs.row(row);
      for (int j = 0; j < dim; ++j) {
        const double center = base + (j == active ? s : 0.0);
        x[j] = std::clamp(center + noise_std * rng.normal(), 0.0, 1.0);
      }
      dst.labels[row] = c;
    }
  }

  // Shuffle each split so prefixes are class-balanced.
  const auto shuffle_rows = [](Dataset& d, NoiseSource shuffle_rng) {
    std::vector<std::size_t> perm(d.size());
    for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = i;
    shuffle_rng.shuffle(perm);
    Batch reordered = d.gather(perm);
    d.inputs = std::move(reordered.inputs);
    d.labels = std::move(reordered.labels);
  };
  shuffle_rows(train, rng.fork(1));
  shuffle_rows(test, rng.fork(2));
  return {std::move(train), std::move(test)};
}

std::vector<std::vector<std::size_t>> shuffled_epoch_batches(
    std::size_t n, std::size_t batch_size, NoiseSource& rng) {
  if (batch_size == 0) throw ConfigError("batch_size must be >= 1");
  std::vector<std::size_t> perm(n);
  for (std::size_t i = 0; i < n; ++i) perm[i] = i;
  rng.shuffle(perm);
  std::vector<std::vector<std::size_t>> batches;
  for (std::size_t start = 0; start < n; start += batch_size) {
    const std::size_t stop = std::min(start + batch_size, n);
    std::vector<std::size_t> batch(perm.begin() + start, perm.begin() + stop);
    std::sort(batch.begin(), batch.end());  // fixed reduction order
    batches.push_back(std::move(batch));
  }
  return batches;
}

}  // namespace dpadv
