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

#ifndef RELISTEN_TYPES_HPP_
#define RELISTEN_TYPES_HPP_

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace relisten {

inline constexpr std::size_t kArkitCount = 52;
inline constexpr std::size_t kShapeDim = 300;
/// jaw_aa + head_aa appended after the expression coefficients.
inline constexpr std::size_t kPoseDim = 6;

enum class PayloadKind : std::uint8_t { flame = 0, mel = 1, arkit = 2, vad = 3, metrics = 4 };

const char* payload_kind_name(PayloadKind kind) noexcept;

/// Wrapper for every inter-stage message.
struct TimedEnvelope {
  std::string topic;
  std::uint64_t seq = 0;
  std::uint64_t capture_ts_us = 0;
  std::uint64_t publish_ts_us = 0;
  PayloadKind kind = PayloadKind::flame;
  std::vector<std::uint8_t> payload;

  bool operator==(const TimedEnvelope&) const = default;
};

/// One FLAME parameter frame. capture_ts_us is media time from stream start.
struct FlameFrame {
  std::vector<float> expr;
  std::array<float, 3> jaw_aa{};
  std::array<float, 3> head_aa{};
  std::optional<std::vector<float>> shape;
  std::uint64_t capture_ts_us = 0;

  /// expr followed by jaw_aa and head_aa (the predicted "motion" vector).
  std::vector<float> motion() const;
  static FlameFrame from_motion(std::span<const float> motion, std::size_t expr_dim,
                                std::uint64_t ts_us);

  bool operator==(const FlameFrame&) const = default;
};

struct MelFrame {
  std::vector<float> coeffs;
  std::uint64_t capture_ts_us = 0;

  bool operator==(const MelFrame&) const = default;
};

struct ArkitFrame {
  std::array<double, kArkitCount> weights{};
  std::array<double, 3> jaw_euler{};
  std::array<double, 3> head_euler{};
  std::uint64_t seq = 0;
  std::uint64_t t_ms = 0;

  bool operator==(const ArkitFrame&) const = default;
};

/// Canonical ARKit blendshape ordering. Every module indexes by position.
const std::array<const char*, kArkitCount>& arkit_names() noexcept;
/// Position of `name` in arkit_names(), or -1.
int arkit_index(std::string_view name) noexcept;

/// Media timestamp of frame `index` at `fps` frames per second.
std::uint64_t frame_ts_us(std::uint64_t index, double fps) noexcept;

}  // namespace relisten

#endif  // RELISTEN_TYPES_HPP_
