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

#include "relisten/mel.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <mutex>
#include <numbers>

#include "relisten/error.hpp"
#include "relisten/io.hpp"
#include "relisten/wire.hpp"

namespace relisten {
namespace {

// FFTW planning is not thread-safe; execution on distinct plans is.
std::mutex& fftw_planner_mutex() {
  static std::mutex mu;
  return mu;
}

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

}  // namespace

struct MelExtractor::Fft {
  explicit Fft(int n) : n(n) {
    in = fftw_alloc_real(static_cast<std::size_t>(n));
    out = fftw_alloc_complex(static_cast<std::size_t>(n / 2 + 1));
    std::lock_guard lk(fftw_planner_mutex());
    plan = fftw_plan_dft_r2c_1d(n, in, out, FFTW_ESTIMATE);
  }
  ~Fft() {
    {
      std::lock_guard lk(fftw_planner_mutex());
      fftw_destroy_plan(plan);
    }
    fftw_free(in);
    fftw_free(out);
  }
  int n;
  double* in = nullptr;
  fftw_complex* out = nullptr;
  fftw_plan plan = nullptr;
};

int MelParams::frames_per_batch() const { return static_cast<int>(std::lround(out_fps * batch_s)); }
int MelParams::samples_per_batch() const {
  return static_cast<int>(std::lround(batch_s * sample_rate_hz));
}

MelExtractor::MelExtractor(const MelParams& params) : params_(params) {
  if (params_.sample_rate_hz != 16000) {
    fail(Errc::parameter, "mel extraction supports 16000 Hz input only");
  }
  if (params_.n_coeffs <= 0 || params_.n_coeffs > params_.n_mels) {
    fail(Errc::parameter, "l = " + std::to_string(params_.n_coeffs) +
                              " exceeds the number of mel bands (" + std::to_string(params_.n_mels) + ")");
  }
  win_len_ = static_cast<int>(std::lround(params_.win_s * params_.sample_rate_hz));
  hop_len_ = static_cast<int>(std::lround(params_.hop_s * params_.sample_rate_hz));
  if (win_len_ > params_.n_fft || hop_len_ <= 0) fail(Errc::parameter, "bad window/hop for n_fft");
  if (params_.samples_per_batch() % hop_len_ != 0) {
    fail(Errc::parameter, "batch length must be a whole number of hops");
  }
  if (params_.frames_per_batch() <= 0) fail(Errc::parameter, "batch yields no output frames");

  window_.resize(static_cast<std::size_t>(win_len_));
  for (int i = 0; i < win_len_; ++i) {
    window_[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * i / win_len_);
  }

  const int n_bins = params_.n_fft / 2 + 1;
  const double mel_lo = hz_to_mel(params_.f_min_hz);
  const double mel_hi = hz_to_mel(params_.f_max_hz);
  std::vector<double> edges(static_cast<std::size_t>(params_.n_mels + 2));
  for (std::size_t i = 0; i < edges.size(); ++i) {
    edges[i] = mel_to_hz(mel_lo + (mel_hi - mel_lo) * static_cast<double>(i) /
                                      static_cast<double>(params_.n_mels + 1));
  }
  const double bin_hz = static_cast<double>(params_.sample_rate_hz) / params_.n_fft;
  filters_.assign(static_cast<std::size_t>(params_.n_mels), std::vector<double>(n_bins, 0.0));
  for (int m = 0; m < params_.n_mels; ++m) {
    const double lo = edges[m], c = edges[m + 1], hi = edges[m + 2];
    double total = 0;
    for (int k = 0; k < n_bins; ++k) {
      const double f = k * bin_hz;
      const double w = std::max(0.0, std::min((f - lo) / (c - lo), (hi - f) / (hi - c)));
      filters_[m][k] = w;
      total += w;
    }
    // Narrow low-frequency filters can fall between FFT bins.
    if (total == 0.0) {
      const int k = std::clamp(static_cast<int>(std::lround(c / bin_hz)), 0, n_bins - 1);
      filters_[m][k] = 1.0;
    }
  }

  dct_.resize(static_cast<std::size_t>(params_.n_coeffs * params_.n_mels));
  const double n = params_.n_mels;
  for (int k = 0; k < params_.n_coeffs; ++k) {
    const double scale = k == 0 ? std::sqrt(1.0 / n) : std::sqrt(2.0 / n);
    for (int j = 0; j < params_.n_mels; ++j) {
      dct_[k * params_.n_mels + j] = scale * std::cos(std::numbers::pi * k * (2.0 * j + 1.0) / (2.0 * n));
    }
  }

  tail_.assign(static_cast<std::size_t>(win_len_), 0.0);
  fft_ = std::make_unique<Fft>(params_.n_fft);
}

MelExtractor::~MelExtractor() = default;

std::vector<MelBatch> MelExtractor::push(std::span<const std::int16_t> samples) {
  std::vector<MelBatch> out;
  const auto per_batch = static_cast<std::size_t>(params_.samples_per_batch());
  pending_.insert(pending_.end(), samples.begin(), samples.end());
  std::size_t used = 0;
  while (pending_.size() - used >= per_batch) {
    out.push_back(process_batch(std::span(pending_).subspan(used, per_batch)));
    used += per_batch;
  }
  pending_.erase(pending_.begin(), pending_.begin() + static_cast<std::ptrdiff_t>(used));
  return out;
}

std::vector<MelBatch> MelExtractor::flush() {
  if (pending_.empty()) return {};
  std::vector<std::int16_t> padded = std::move(pending_);
  pending_.clear();
  padded.resize(static_cast<std::size_t>(params_.samples_per_batch()), 0);
  return {process_batch(padded)};
}

MelBatch MelExtractor::process_batch(std::span<const std::int16_t> raw) {
  const int ns = static_cast<int>(raw.size());
  const int n_bins = params_.n_fft / 2 + 1;
  const int n_hops = ns / hop_len_;
  const int n_mels = params_.n_mels;
  const int l = params_.n_coeffs;

  // tail_ followed by this batch, pre-emphasized.
  std::vector<double> buf(tail_);
  buf.reserve(tail_.size() + raw.size());
  for (auto s : raw) {
    const double x = s / 32768.0;
    buf.push_back(x - params_.pre_emphasis * prev_raw_);
    prev_raw_ = x;
  }

  // Hop frame k ends at buf index win_len_ + (k + 1) * hop_len_.
  std::vector<double> hops(static_cast<std::size_t>(n_hops * l));
  std::vector<double> mag(static_cast<std::size_t>(n_bins));
  std::vector<double> logmel(static_cast<std::size_t>(n_mels));
  for (int k = 0; k < n_hops; ++k) {
    const double* src = buf.data() + (k + 1) * hop_len_;
    for (int i = 0; i < win_len_; ++i) fft_->in[i] = src[i] * window_[i];
    std::fill(fft_->in + win_len_, fft_->in + params_.n_fft, 0.0);
    fftw_execute(fft_->plan);
    for (int b = 0; b < n_bins; ++b) mag[b] = std::hypot(fft_->out[b][0], fft_->out[b][1]);
    for (int m = 0; m < n_mels; ++m) {
      const auto& w = filters_[m];
      double e = 0;
      for (int b = 0; b < n_bins; ++b) e += w[b] * mag[b];
      logmel[m] = std::log(std::max(e, params_.log_floor));
    }
    double* dst = hops.data() + static_cast<std::ptrdiff_t>(k) * l;
    if (params_.dct) {
      for (int c = 0; c < l; ++c) {
        const double* row = dct_.data() + static_cast<std::ptrdiff_t>(c) * n_mels;
        double acc = 0;
        for (int m = 0; m < n_mels; ++m) acc += row[m] * logmel[m];
        dst[c] = acc;
      }
    } else {
      std::copy_n(logmel.begin(), l, dst);
    }
  }
  std::copy(buf.end() - win_len_, buf.end(), tail_.begin());

  MelBatch batch;
  batch.batch_index = next_batch_++;
  const int n_out = params_.frames_per_batch();
  const double hop_rate = static_cast<double>(params_.sample_rate_hz) / hop_len_;
  const double batch_t0 = static_cast<double>(batch.batch_index) * ns / params_.sample_rate_hz;
  batch.frames.resize(static_cast<std::size_t>(n_out));
  for (int m = 0; m < n_out; ++m) {
    const double x = m * hop_rate / params_.out_fps;
    const int i0 = std::min(static_cast<int>(std::floor(x)), n_hops - 1);
    const int i1 = std::min(i0 + 1, n_hops - 1);
    const double frac = std::clamp(x - i0, 0.0, 1.0);
    auto& f = batch.frames[m];
    f.coeffs.resize(static_cast<std::size_t>(l));
    const double* a = hops.data() + static_cast<std::ptrdiff_t>(i0) * l;
    const double* b = hops.data() + static_cast<std::ptrdiff_t>(i1) * l;
    for (int c = 0; c < l; ++c) {
      f.coeffs[c] = static_cast<float>(frac == 0.0 ? a[c] : a[c] + frac * (b[c] - a[c]));
    }
    f.capture_ts_us = static_cast<std::uint64_t>(
        std::llround((batch_t0 + static_cast<double>(m) / params_.out_fps) * 1e6));
  }
  return batch;
}

std::vector<MelBatch> extract_mel(std::span<const std::int16_t> samples, int sample_rate_hz, int l,
                                  int F_fps, double T_audio_s, bool dct) {
  MelParams p;
  p.sample_rate_hz = sample_rate_hz;
  p.n_coeffs = l;
  p.dct = dct;
  p.out_fps = 4 * F_fps;
  p.batch_s = T_audio_s;
  MelExtractor ex(p);
  auto out = ex.push(samples);
  for (auto& b : ex.flush()) out.push_back(std::move(b));
  return out;
}

std::vector<std::uint8_t> encode_mel_batch(const MelBatch& batch) {
  wire::Writer w;
  w.u32(static_cast<std::uint32_t>(batch.frames.size()));
  const std::size_t l = batch.frames.empty() ? 0 : batch.frames[0].coeffs.size();
  for (const auto& f : batch.frames) {
    if (f.coeffs.size() != l) fail(Errc::contract, "mel batch with mixed l");
    for (float v : f.coeffs) w.f32(v);
    w.u64(f.capture_ts_us);
  }
  return w.take();
}

MelBatch decode_mel_batch(std::span<const std::uint8_t> bytes) {
  wire::Reader r(bytes);
  const auto n = r.u32();
  MelBatch batch;
  if (n == 0) {
    if (!r.done()) fail(Errc::format, "mel batch length mismatch");
    return batch;
  }
  const std::size_t per = r.remaining() / n;
  if (per * n != r.remaining() || per < 8 || (per - 8) % 4 != 0) {
    fail(Errc::format, "mel batch length mismatch");
  }
  const std::size_t l = (per - 8) / 4;
  batch.frames.resize(n);
  for (auto& f : batch.frames) {
    f.coeffs.resize(l);
    for (auto& v : f.coeffs) v = r.f32();
    f.capture_ts_us = r.u64();
  }
  return batch;
}

void write_mel_file(const std::string& path, std::span<const MelBatch> batches) {
  wire::Writer w;
  w.raw("MEL1");
  w.u32(static_cast<std::uint32_t>(batches.size()));
  for (const auto& b : batches) {
    const auto p = encode_mel_batch(b);
    w.u32(static_cast<std::uint32_t>(p.size()));
    w.bytes(p);
  }
  write_file(path, w.data());
}

std::vector<MelBatch> read_mel_file(const std::string& path) {
  const auto bytes = read_file(path);
  wire::Reader r(bytes);
  if (r.str(4) != "MEL1") fail(Errc::format, "not a MEL1 file");
  const auto n = r.u32();
  std::vector<MelBatch> out;
  for (std::uint32_t i = 0; i < n; ++i) {
    out.push_back(decode_mel_batch(r.bytes(r.u32())));
    out.back().batch_index = i;
  }
  if (!r.done()) fail(Errc::format, "trailing bytes in mel file");
  return out;
}

}  // namespace relisten
