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

#ifndef RELISTEN_VAD_HPP_
#define RELISTEN_VAD_HPP_

#include <cstdint>
#include <span>
#include <vector>

namespace relisten {

enum class SpeechKind : std::uint8_t { no_speech = 0, backchanneling = 1, short_speech = 2, long_speech = 3 };

const char* speech_kind_name(SpeechKind kind) noexcept;

struct SpeechSegment {
  double start_s = 0;
  double end_s = 0;
  SpeechKind kind = SpeechKind::no_speech;

  double duration() const { return end_s - start_s; }
  bool operator==(const SpeechSegment&) const = default;
};

/// Duration taxonomy for a speech run: [0.5, 2] backchanneling, (2, 3] short,
/// > 3 long. Runs under 0.5 s count as no_speech.
SpeechKind classify_speech_duration(double duration_s) noexcept;

/// Energy VAD with hysteresis. Levels are frame RMS in full-scale units.
struct VadParams {
  double frame_s = 0.02;
  double floor_percentile = 0.10;
  double start_ratio = 4.0;    ///< speech starts above floor x start_ratio
  double release_ratio = 2.0;  ///< and is held while above floor x release_ratio
  double hangover_s = 0.2;
  double min_speech_s = 0.5;
  double min_floor = 1e-4;     ///< lower bound on the estimated floor (digital silence)
};

/// Time-ordered segments partitioning [0, duration]. Adjacent segments never
/// share a kind. Empty input gives an empty list.
std::vector<SpeechSegment> detect_voice(std::span<const std::int16_t> samples, int sample_rate_hz,
                                        const VadParams& params = {});

// VAD payload: u32 count, then per segment f64 start_s, f64 end_s, u8 kind.
std::vector<std::uint8_t> encode_segments(std::span<const SpeechSegment> segs);
std::vector<SpeechSegment> decode_segments(std::span<const std::uint8_t> bytes);

}  // namespace relisten

#endif  // RELISTEN_VAD_HPP_
