// Copyright 2026, The ReListen Authors
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef RELISTEN_CODEBOOK_HPP_
#define RELISTEN_CODEBOOK_HPP_

#include <cstdint>
#include <vector>

#include "relisten/fusion.hpp"

namespace relisten {

/// K code vectors, one per row.
struct Codebook {
  RowMatrix entries;

  std::size_t size() const { return static_cast<std::size_t>(entries.rows()); }
  std::size_t dim() const { return static_cast<std::size_t>(entries.cols()); }
};

/// Nearest entry by Euclidean distance; ties resolve to the lowest index.
std::size_t quantize(std::span<const float> x, const Codebook& cb);

struct TrainResult {
  Codebook codebook;
  std::vector<double> errors;  ///< total squared error after each assignment pass
  int iterations = 0;
  bool converged = false;      ///< assignments stopped changing before max_iters
};

/// Lloyd k-means with seeded k-means++ initialisation. `data` is N x d, N >= K.
TrainResult train_codebook(const RowMatrix& data, std::size_t K, int max_iters, std::uint64_t seed);

}  // namespace relisten

#endif  // RELISTEN_CODEBOOK_HPP_
