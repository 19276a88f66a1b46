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

#ifndef RELISTEN_MEL_HPP_
#define RELISTEN_MEL_HPP_

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "relisten/types.hpp"

namespace relisten {

/// Front-end recipe: pre-emphasis, periodic Hann window, 512-point FFT
/// magnitude, HTK-scale triangular filters, natural log with a floor,
/// orthonormal DCT-II. Hop frames (100 fps by default) are resampled to
/// out_fps by linear interpolation in time.
struct MelParams {
  int sample_rate_hz = 16000;
  int n_fft = 512;
  double win_s = 0.025;
  double hop_s = 0.010;
  int n_mels = 128;
  double f_min_hz = 0.0;
  double f_max_hz = 8000.0;
  double pre_emphasis = 0.97;
  double log_floor = 1e-10;
  int n_coeffs = 128;  ///< l
  bool dct = true;     ///< false emits the first n_coeffs log-mel bands
  int out_fps = 120;   ///< M_fps = 4 x F_fps
  double batch_s = 0.5;

  int frames_per_batch() const;
  int samples_per_batch() const;
};

struct MelBatch {
  std::vector<MelFrame> frames;
  std::uint32_t batch_index = 0;
};

/// Streaming extractor: push() arbitrary chunks, get back every batch that
/// completed. Output is independent of how the input is chunked.
class MelExtractor {
public:
  explicit MelExtractor(const MelParams& params);
  ~MelExtractor();
  MelExtractor(const MelExtractor&) = delete;
  MelExtractor& operator=(const MelExtractor&) = delete;

  std::vector<MelBatch> push(std::span<const std::int16_t> samples);
  /// Zero-pads and emits a trailing partial batch, if any.
  std::vector<MelBatch> flush();

  const MelParams& params() const { return params_; }
  /// n_mels x (n_fft/2 + 1) triangular weights.
  const std::vector<std::vector<double>>& filterbank() const { return filters_; }

private:
  MelBatch process_batch(std::span<const std::int16_t> raw);

  MelParams params_;
  int win_len_ = 0;
  int hop_len_ = 0;
  std::vector<double> window_;
  std::vector<std::vector<double>> filters_;
  std::vector<double> dct_;  // n_coeffs x n_mels
  std::vector<double> tail_;  // last win_len_ pre-emphasized samples
  double prev_raw_ = 0.0;
  std::vector<std::int16_t> pending_;
  std::uint32_t next_batch_ = 0;
  struct Fft;
  std::unique_ptr<Fft> fft_;
};

/// Whole-signal convenience wrapper. rate must be 16000; l <= 128.
std::vector<MelBatch> extract_mel(std::span<const std::int16_t> samples, int sample_rate_hz, int l,
                                  int F_fps, double T_audio_s, bool dct = true);

// Mel batch payload: u32 frame count, then per frame f32 coeffs[l], u64 ts_us.
std::vector<std::uint8_t> encode_mel_batch(const MelBatch& batch);
MelBatch decode_mel_batch(std::span<const std::uint8_t> bytes);

/// mel.bin: "MEL1", u32 batch count, then per batch u32 length + payload.
void write_mel_file(const std::string& path, std::span<const MelBatch> batches);
std::vector<MelBatch> read_mel_file(const std::string& path);

}  // namespace relisten

#endif  // RELISTEN_MEL_HPP_
