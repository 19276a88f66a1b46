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

#ifndef RELISTEN_PREDICTOR_HPP_
#define RELISTEN_PREDICTOR_HPP_

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "relisten/codebook.hpp"
#include "relisten/config.hpp"
#include "relisten/fusion.hpp"
#include "relisten/rng.hpp"

namespace relisten {

struct PredictorDims {
  std::uint32_t expr_dim = 100;
  std::uint32_t l = 128;
  std::uint32_t K = 200;
  std::uint32_t code_dim = 64;
  std::uint32_t w_out = 8;

  std::uint32_t frame_dim() const { return expr_dim + 6; }
  std::uint32_t chunk_dim() const { return w_out * frame_dim(); }
  static PredictorDims from_config(const PipelineConfig& cfg);
  bool operator==(const PredictorDims&) const = default;
};

/// Linear stand-in for the listener predictor. Fused context is the
/// concatenation of projected mean FLAME, projected mean mel and the mean
/// embedding of the codes of past listener chunks.
struct PredictorModel {
  PredictorDims dims;
  double temperature = 1.0;
  bool greedy = false;

  // Parameter blocks, in weight-file order.
  RowMatrix encoder;     ///< code_dim x chunk_dim
  RowMatrix w_flame;     ///< code_dim x frame_dim
  RowMatrix w_mel;       ///< code_dim x l
  RowMatrix embed;       ///< K x code_dim
  RowMatrix w_logits;    ///< K x 3 code_dim
  RowMatrix b_logits;    ///< 1 x K
  RowMatrix decoder;     ///< chunk_dim x code_dim
  Codebook codebook;     ///< K x code_dim

  /// Deterministic in (dims, seed).
  static PredictorModel seeded(const PredictorDims& dims, std::uint64_t seed);
  static PredictorModel from_config(const PipelineConfig& cfg);

  /// Throws Error(contract) when the model does not fit `cfg`.
  void check_config(const PipelineConfig& cfg) const;
  /// Code index of one w_out x frame_dim chunk of motion.
  std::size_t encode_chunk(std::span<const float> chunk) const;
};

struct StepResult {
  std::size_t code_index = 0;
  RowMatrix frames;             ///< w_out x frame_dim
  std::vector<double> logits;   ///< K
  std::vector<double> probs;    ///< softmax(logits / temperature)
};

/// Greedy mode takes the argmax and draws nothing from `rng`.
StepResult predict_step(const PredictorModel& model, const FusionWindow& window, Rng& rng);

/// Runs up to n_steps windows, feeding each prediction back into the stream.
/// Returns the concatenated frames (fewer when the stream ends early).
RowMatrix generate(const PredictorModel& model, WindowStream& stream, std::size_t n_steps, Rng& rng);

/// Sum over frames of squared Euclidean distance, divided by frame count.
double l2_loss(const RowMatrix& pred, const RowMatrix& gt);

// Weight file: "L2L1", u32 expr_dim, l, K, code_dim, w_out, then the f32
// parameter blocks row-major in declaration order.
std::vector<std::uint8_t> encode_model(const PredictorModel& model);
PredictorModel decode_model(std::span<const std::uint8_t> bytes);
void save_model(const PredictorModel& model, const std::string& path);
PredictorModel load_model(const std::string& path);

/// Sliding w_out-frame chunks of a motion sequence (rows are frames), stride 1.
RowMatrix motion_chunks(const RowMatrix& motion, std::size_t w_out);

}  // namespace relisten

#endif  // RELISTEN_PREDICTOR_HPP_
