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

#include "relisten/wav.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <numbers>

#include "relisten/error.hpp"
#include "relisten/io.hpp"
#include "relisten/rng.hpp"
#include "relisten/wire.hpp"

namespace relisten {

WavData parse_wav(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
      std::memcmp(bytes.data() + 8, "WAVE", 4) != 0) {
    fail(Errc::format, "not a RIFF/WAVE file");
  }
  std::size_t pos = 12;
  bool have_fmt = false;
  int channels = 0;
  int rate = 0;
  int bits = 0;
  while (pos + 8 <= bytes.size()) {
    const char* id = reinterpret_cast<const char*>(bytes.data() + pos);
    wire::Reader hdr(bytes.subspan(pos + 4, 4));
    const std::size_t size = hdr.u32();
    pos += 8;
    if (std::memcmp(id, "fmt ", 4) == 0) {
      if (size < 16 || pos + size > bytes.size()) fail(Errc::format, "truncated fmt chunk");
      wire::Reader r(bytes.subspan(pos, size));
      const auto format = r.u16();
      channels = r.u16();
      rate = static_cast<int>(r.u32());
      r.u32();  // byte rate
      r.u16();  // block align
      bits = r.u16();
      bool pcm = format == 1;
      if (format == 0xFFFE && size >= 40) {
        r.u16();  // cbSize
        r.u16();  // valid bits
        r.u32();  // channel mask
        pcm = r.u16() == 1;
      }
      if (!pcm) fail(Errc::format, "WAV encoding is not PCM");
      if (bits != 16) fail(Errc::format, "only 16-bit PCM is supported");
      if (channels < 1 || rate <= 0) fail(Errc::format, "bad channel count or sample rate");
      have_fmt = true;
    } else if (std::memcmp(id, "data", 4) == 0) {
      if (!have_fmt) fail(Errc::format, "data chunk before fmt chunk");
      const std::size_t avail = std::min(size, bytes.size() - pos);
      const std::size_t frame_bytes = 2u * static_cast<std::size_t>(channels);
      const std::size_t n = avail / frame_bytes;
      WavData out;
      out.sample_rate_hz = rate;
      out.channels = channels;
      out.samples.resize(n);
      for (std::size_t i = 0; i < n; ++i) {
        const std::uint8_t* p = bytes.data() + pos + i * frame_bytes;
        out.samples[i] = static_cast<std::int16_t>(static_cast<std::uint16_t>(p[0]) |
                                                   (static_cast<std::uint16_t>(p[1]) << 8));
      }
      return out;
    }
    pos += size + (size & 1);
  }
  fail(Errc::format, have_fmt ? "missing data chunk" : "missing fmt chunk");
}

WavData read_wav(const std::string& path) { return parse_wav(read_file(path)); }

std::vector<std::uint8_t> encode_wav(std::span<const std::int16_t> samples, int sample_rate_hz,
                                     int channels) {
  const auto data_bytes = static_cast<std::uint32_t>(samples.size() * 2);
  wire::Writer w;
  w.raw("RIFF");
  w.u32(36 + data_bytes);
  w.raw("WAVE");
  w.raw("fmt ");
  w.u32(16);
  w.u16(1);
  w.u16(static_cast<std::uint16_t>(channels));
  w.u32(static_cast<std::uint32_t>(sample_rate_hz));
  w.u32(static_cast<std::uint32_t>(sample_rate_hz * channels * 2));
  w.u16(static_cast<std::uint16_t>(channels * 2));
  w.u16(16);
  w.raw("data");
  w.u32(data_bytes);
  for (auto s : samples) w.u16(static_cast<std::uint16_t>(s));
  return w.take();
}

void write_wav(const std::string& path, std::span<const std::int16_t> samples,
               int sample_rate_hz, int channels) {
  write_file(path, encode_wav(samples, sample_rate_hz, channels));
}

std::vector<std::int16_t> synth_speech(double duration_s, int sample_rate_hz, std::uint64_t seed) {
  if (duration_s <= 0 || sample_rate_hz <= 0) fail(Errc::parameter, "duration and rate must be positive");
  Rng rng(seed);
  const auto n = static_cast<std::size_t>(std::llround(duration_s * sample_rate_hz));
  const double fs = sample_rate_hz;
  std::vector<double> x(n);
  for (auto& v : x) v = 0.002 * rng.normal();

  constexpr double kTwoPi = 2.0 * std::numbers::pi;
  double t = rng.uniform(0.3, 1.0);
  while (t < duration_s) {
    double len = 0;
    switch (rng.below(3)) {
      case 0: len = rng.uniform(0.7, 1.6); break;
      case 1: len = rng.uniform(2.2, 2.7); break;
      default: len = rng.uniform(3.4, 5.0); break;
    }
    const double f0 = rng.uniform(100.0, 220.0);
    const double amp = rng.uniform(0.08, 0.2);
    double phase[6];
    for (auto& p : phase) p = rng.uniform(0.0, kTwoPi);
    const auto b0 = static_cast<std::size_t>(t * fs);
    const auto b1 = std::min(n, static_cast<std::size_t>((t + len) * fs));
    const double fade = 0.01 * fs;
    for (std::size_t i = b0; i < b1; ++i) {
      const double tau = static_cast<double>(i - b0) / fs;
      const double edge = std::min({1.0, static_cast<double>(i - b0) / fade,
                                    static_cast<double>(b1 - i) / fade});
      const double env = 0.6 + 0.4 * std::sin(kTwoPi * 4.0 * tau);
      double s = 0;
      for (int h = 1; h <= 6; ++h) s += std::sin(kTwoPi * h * f0 * tau + phase[h - 1]) / h;
      x[i] += amp * edge * env * (0.5 * s + 0.15 * rng.normal());
    }
    t += len + rng.uniform(0.6, 1.8);
  }

  std::vector<std::int16_t> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    out[i] = static_cast<std::int16_t>(std::clamp(std::lround(x[i] * 32767.0), -32768L, 32767L));
  }
  return out;
}

}  // namespace relisten
