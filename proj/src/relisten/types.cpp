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

#include <algorithm>
#include <cmath>

#include "relisten/types.hpp"

namespace relisten {
namespace {

// Order of ARFaceAnchor.BlendShapeLocation as exported by Live Link Face.
constexpr std::array<const char*, kArkitCount> kNames = {
    "eyeBlinkLeft",     "eyeLookDownLeft",  "eyeLookInLeft",      "eyeLookOutLeft",
    "eyeLookUpLeft",    "eyeSquintLeft",    "eyeWideLeft",        "eyeBlinkRight",
    "eyeLookDownRight", "eyeLookInRight",   "eyeLookOutRight",    "eyeLookUpRight",
    "eyeSquintRight",   "eyeWideRight",     "jawForward",         "jawLeft",
    "jawRight",         "jawOpen",          "mouthClose",         "mouthFunnel",
    "mouthPucker",      "mouthLeft",        "mouthRight",         "mouthSmileLeft",
    "mouthSmileRight",  "mouthFrownLeft",   "mouthFrownRight",    "mouthDimpleLeft",
    "mouthDimpleRight", "mouthStretchLeft", "mouthStretchRight",  "mouthRollLower",
    "mouthRollUpper",   "mouthShrugLower",  "mouthShrugUpper",    "mouthPressLeft",
    "mouthPressRight",  "mouthLowerDownLeft", "mouthLowerDownRight", "mouthUpperUpLeft",
    "mouthUpperUpRight", "browDownLeft",    "browDownRight",      "browInnerUp",
    "browOuterUpLeft",  "browOuterUpRight", "cheekPuff",          "cheekSquintLeft",
    "cheekSquintRight", "noseSneerLeft",    "noseSneerRight",     "tongueOut",
};

}  // namespace

const std::array<const char*, kArkitCount>& arkit_names() noexcept { return kNames; }

int arkit_index(std::string_view name) noexcept {
  for (std::size_t i = 0; i < kNames.size(); ++i) {
    if (name == kNames[i]) return static_cast<int>(i);
  }
  return -1;
}

const char* payload_kind_name(PayloadKind kind) noexcept {
  switch (kind) {
    case PayloadKind::flame: return "flame";
    case PayloadKind::mel: return "mel";
    case PayloadKind::arkit: return "arkit";
    case PayloadKind::vad: return "vad";
    case PayloadKind::metrics: return "metrics";
  }
  return "?";
}

std::uint64_t frame_ts_us(std::uint64_t index, double fps) noexcept {
  return static_cast<std::uint64_t>(std::llround(static_cast<double>(index) * 1e6 / fps));
}

std::vector<float> FlameFrame::motion() const {
  std::vector<float> v;
  v.reserve(expr.size() + kPoseDim);
  v.insert(v.end(), expr.begin(), expr.end());
  v.insert(v.end(), jaw_aa.begin(), jaw_aa.end());
  v.insert(v.end(), head_aa.begin(), head_aa.end());
  return v;
}

FlameFrame FlameFrame::from_motion(std::span<const float> motion, std::size_t expr_dim,
                                   std::uint64_t ts_us) {
  FlameFrame f;
  f.expr.assign(motion.begin(), motion.begin() + static_cast<std::ptrdiff_t>(expr_dim));
  std::copy_n(motion.begin() + static_cast<std::ptrdiff_t>(expr_dim), 3, f.jaw_aa.begin());
  std::copy_n(motion.begin() + static_cast<std::ptrdiff_t>(expr_dim) + 3, 3, f.head_aa.begin());
  f.capture_ts_us = ts_us;
  return f;
}

}  // namespace relisten
