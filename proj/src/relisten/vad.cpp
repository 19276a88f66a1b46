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

#include "relisten/vad.hpp"

#include <algorithm>
#include <cmath>

#include "relisten/error.hpp"
#include "relisten/wire.hpp"

namespace relisten {

const char* speech_kind_name(SpeechKind kind) noexcept {
  switch (kind) {
    case SpeechKind::no_speech: return "no_speech";
    case SpeechKind::backchanneling: return "backchanneling";
    case SpeechKind::short_speech: return "short_speech";
    case SpeechKind::long_speech: return "long_speech";
  }
  return "?";
}

SpeechKind classify_speech_duration(double d) noexcept {
  if (d < 0.5) return SpeechKind::no_speech;
  if (d <= 2.0) return SpeechKind::backchanneling;
  if (d <= 3.0) return SpeechKind::short_speech;
  return SpeechKind::long_speech;
}

std::vector<SpeechSegment> detect_voice(std::span<const std::int16_t> samples, int rate,
                                        const VadParams& p) {
  if (samples.empty()) return {};
  if (rate < 8000) fail(Errc::parameter, "VAD needs a sample rate of at least 8 kHz");

  const std::size_t n = samples.size();
  const auto frame_len = static_cast<std::size_t>(std::lround(p.frame_s * rate));
  const std::size_t n_frames = (n + frame_len - 1) / frame_len;

  std::vector<double> rms(n_frames);
  for (std::size_t f = 0; f < n_frames; ++f) {
    const std::size_t b = f * frame_len;
    const std::size_t e = std::min(n, b + frame_len);
    double acc = 0;
    for (std::size_t i = b; i < e; ++i) {
      const double v = samples[i] / 32768.0;
      acc += v * v;
    }
    rms[f] = std::sqrt(acc / static_cast<double>(e - b));
  }

  std::vector<double> sorted = rms;
  std::sort(sorted.begin(), sorted.end());
  const auto rank = static_cast<std::size_t>(
      std::max(1.0, std::ceil(p.floor_percentile * static_cast<double>(n_frames))));
  const double floor = std::max(sorted[rank - 1], p.min_floor);
  const double start_thr = floor * p.start_ratio;
  const double release_thr = floor * p.release_ratio;
  const auto hang = static_cast<std::size_t>(std::lround(p.hangover_s / p.frame_s));

  // Speech runs as [first frame, end frame).
  std::vector<std::pair<std::size_t, std::size_t>> runs;
  bool active = false;
  std::size_t run_start = 0;
  std::size_t last_loud = 0;
  for (std::size_t f = 0; f < n_frames; ++f) {
    if (!active) {
      if (rms[f] > start_thr) {
        active = true;
        run_start = f;
        last_loud = f;
      }
      continue;
    }
    if (rms[f] >= release_thr) {
      last_loud = f;
    } else if (f - last_loud > hang) {
      runs.emplace_back(run_start, last_loud + 1 + hang);
      active = false;
    }
  }
  if (active) runs.emplace_back(run_start, std::min(n_frames, last_loud + 1 + hang));

  const double duration = static_cast<double>(n) / rate;
  std::vector<SpeechSegment> segs;
  auto emit = [&](double s, double e, SpeechKind k) {
    if (e <= s) return;
    if (!segs.empty() && segs.back().kind == k) {
      segs.back().end_s = e;
    } else {
      segs.push_back({s, e, k});
    }
  };
  double cursor = 0;
  for (const auto& [fb, fe] : runs) {
    const std::size_t sb = fb * frame_len;
    const std::size_t se = std::min(n, fe * frame_len);
    const SpeechKind kind = classify_speech_duration(static_cast<double>(se - sb) / rate);
    if (kind == SpeechKind::no_speech) continue;  // merged into the surrounding silence
    const double s = static_cast<double>(sb) / rate;
    emit(cursor, s, SpeechKind::no_speech);
    emit(s, static_cast<double>(se) / rate, kind);
    cursor = static_cast<double>(se) / rate;
  }
  emit(cursor, duration, SpeechKind::no_speech);
  return segs;
}

std::vector<std::uint8_t> encode_segments(std::span<const SpeechSegment> segs) {
  wire::Writer w;
  w.u32(static_cast<std::uint32_t>(segs.size()));
  for (const auto& s : segs) {
    w.f64(s.start_s);
    w.f64(s.end_s);
    w.u8(static_cast<std::uint8_t>(s.kind));
  }
  return w.take();
}

std::vector<SpeechSegment> decode_segments(std::span<const std::uint8_t> bytes) {
  wire::Reader r(bytes);
  const auto n = r.u32();
  if (r.remaining() != static_cast<std::size_t>(n) * 17) fail(Errc::format, "vad payload length mismatch");
  std::vector<SpeechSegment> out(n);
  for (auto& s : out) {
    s.start_s = r.f64();
    s.end_s = r.f64();
    const auto k = r.u8();
    if (k > 3) fail(Errc::format, "bad speech kind");
    s.kind = static_cast<SpeechKind>(k);
  }
  return out;
}

}  // namespace relisten
