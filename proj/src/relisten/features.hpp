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

#ifndef RELISTEN_FEATURES_HPP_
#define RELISTEN_FEATURES_HPP_

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "relisten/types.hpp"

namespace relisten {

class Publisher;

struct FlameSequence {
  std::vector<FlameFrame> frames;
  std::uint32_t fps = 30;
  std::uint32_t expr_dim = 100;
  bool has_shape = false;

  double duration_s() const { return static_cast<double>(frames.size()) / fps; }
  bool operator==(const FlameSequence&) const = default;
};

// FLAME file: "FLM1", u32 fps, u32 frame count, u32 expr_dim, u8 has_shape,
// then per frame f32 expr[expr_dim], f32 jaw_aa[3], f32 head_aa[3] and, when
// has_shape, f32 shape[300]. Timestamps are implied by index / fps.
FlameSequence parse_flame(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> encode_flame(const FlameSequence& seq);
FlameSequence read_flame(const std::string& path);
void write_flame(const std::string& path, const FlameSequence& seq);

/// Smooth deterministic sequence: each dimension is a sum of three
/// low-frequency sinusoids, |expr| <= 2, axis-angle norms <= 0.5 rad.
FlameSequence synth_flame(double duration_s, std::uint32_t fps, std::uint64_t seed,
                          std::uint32_t expr_dim = 100);

/// Frame count per batch: ceil(fps x T_video_s).
std::size_t flame_batch_size(std::uint32_t fps, double T_video_s);
/// Consecutive batches covering the sequence; the last may be short.
std::vector<std::span<const FlameFrame>> partition_batches(const FlameSequence& seq, double T_video_s);

enum class Pacing { live, fast };

struct BatchPublished {
  std::size_t index = 0;
  std::size_t frames = 0;
  std::uint64_t capture_ts_us = 0;  ///< when the batch was complete
  std::uint64_t processed_ts_us = 0;
  std::uint64_t publish_ts_us = 0;
};

/// Publishes one envelope per batch. Live pacing sleeps until
/// start_us + (b + 1) x T_video_s before batch b, so the first batch leaves
/// one batch length after start; fast pacing publishes back to back.
std::size_t publish_batches(const FlameSequence& seq, double T_video_s, Publisher& pub, Pacing pacing,
                            std::uint64_t start_us,
                            const std::function<void(const BatchPublished&)>& observer = {});

}  // namespace relisten

#endif  // RELISTEN_FEATURES_HPP_
