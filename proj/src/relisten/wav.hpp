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

#ifndef RELISTEN_WAV_HPP_
#define RELISTEN_WAV_HPP_

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace relisten {

struct WavData {
  std::vector<std::int16_t> samples;  ///< first channel only
  int sample_rate_hz = 0;
  int channels = 1;                   ///< channel count in the source file
};

/// RIFF/WAVE PCM16 reader. Non-PCM encodings, other bit depths and missing
/// or truncated chunks raise Error(format).
WavData parse_wav(std::span<const std::uint8_t> bytes);
WavData read_wav(const std::string& path);

/// Interleaved PCM16 writer; `channels` > 1 expects interleaved samples.
std::vector<std::uint8_t> encode_wav(std::span<const std::int16_t> samples, int sample_rate_hz,
                                     int channels = 1);
void write_wav(const std::string& path, std::span<const std::int16_t> samples,
               int sample_rate_hz, int channels = 1);

/// Seeded speech-like test signal: low noise floor with amplitude-modulated
/// harmonic bursts of varied length (backchannel, short and long runs).
std::vector<std::int16_t> synth_speech(double duration_s, int sample_rate_hz, std::uint64_t seed);

}  // namespace relisten

#endif  // RELISTEN_WAV_HPP_
