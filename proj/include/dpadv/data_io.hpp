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

#ifndef DPADV_DATA_IO_HPP_
#define DPADV_DATA_IO_HPP_

#include <cstddef>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "dpadv/nn.hpp"
#include "dpadv/rng.hpp"

namespace dpadv {

// Immutable labeled dataset; inputs (n x d) in [0, 1], labels in [0, K).
struct Dataset {
  Tensor inputs;
  std::vector<int> labels;
  int class_count = 0;
  std::string name;

  std::size_t size() const { return labels.size(); }
  std::size_t dim() const { return inputs.cols(); }

  // Gathers the given rows into a batch.
  Batch gather(const std::vector<std::size_t>& indices) const;

  void validate() const;
};

// Loads an IDX image/label file pair (the MNIST/FMNIST distribution format).
// Big-endian headers: magic 2051 with 3 dims for images, 2049 with 1 dim for
// labels. Pixel bytes are scaled by 1/255 into [0, 1] and images flattened
// row-major. Malformed files raise DataFormatError naming the byte offset.
Dataset load_idx(const std::string& images_path,
                 const std::string& labels_path,
                 std::size_t limit = 0);

// Truncates a dataset to its first n examples (no-op if n >= size).
Dataset take(const Dataset& data, std::size_t n);

// Axis-aligned Gaussian blobs inside the unit cube, split 80/20 into
// disjoint train/test. Class c sits at offset separation * e_(c mod d) from
// a common base point chosen so every center is interior to [0, 1]^d; noise
// is N(0, noise_std^2 I) and samples are clamped to [0, 1] afterwards.
std::pair<Dataset, Dataset> synth_blobs(int classes, int dim, int n_per_class,
                                        double separation, double noise_std,
                                        std::uint64_t seed);

// One epoch of shuffled minibatch index sets: every example appears exactly
// once, batches are batch_size long except possibly the last, and indices
// within a batch are ascending so reductions have a fixed order.
std::vector<std::vector<std::size_t>> shuffled_epoch_batches(
    std::size_t n, std::size_t batch_size, NoiseSource& rng);

}  // namespace dpadv

#endif  // DPADV_DATA_IO_HPP_
