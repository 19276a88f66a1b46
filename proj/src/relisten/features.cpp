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

#include "relisten/features.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <thread>

#include "relisten/clock.hpp"
#include "relisten/error.hpp"
#include "relisten/io.hpp"
#include "relisten/payload.hpp"
#include "relisten/rng.hpp"
#include "relisten/transport.hpp"
#include "relisten/wire.hpp"

namespace relisten {

FlameSequence parse_flame(std::span<const std::uint8_t> bytes) {
  wire::Reader r(bytes);
  if (bytes.size() < 17 || r.str(4) != "FLM1") fail(Errc::format, "not a FLM1 file");
  FlameSequence seq;
  seq.fps = r.u32();
  const auto n = r.u32();
  seq.expr_dim = r.u32();
  seq.has_shape = r.u8() != 0;
  if (seq.fps == 0) fail(Errc::format, "fps must be positive");
  if (seq.expr_dim == 0) fail(Errc::format, "expr_dim must be positive");
  const std::size_t per_frame = 4 * (seq.expr_dim + 6 + (seq.has_shape ? kShapeDim : 0));
  if (r.remaining() != per_frame * n) {
    fail(Errc::format, "frame data does not match header (expr_dim " + std::to_string(seq.expr_dim) +
                           ", " + std::to_string(n) + " frames)");
  }
  seq.frames.resize(n);
  for (std::uint32_t i = 0; i < n; ++i) {
    auto& f = seq.frames[i];
    f.expr.resize(seq.expr_dim);
    for (auto& v : f.expr) v = r.f32();
    for (auto& v : f.jaw_aa) v = r.f32();
    for (auto& v : f.head_aa) v = r.f32();
    if (seq.has_shape) {
      f.shape.emplace(kShapeDim);
      for (auto& v : *f.shape) v = r.f32();
    }
    f.capture_ts_us = frame_ts_us(i, seq.fps);
    const auto norm = [](const std::array<float, 3>& a) {
      return std::sqrt(double(a[0]) * a[0] + double(a[1]) * a[1] + double(a[2]) * a[2]);
    };
    if (!(norm(f.jaw_aa) < std::numbers::pi) || !(norm(f.head_aa) < std::numbers::pi)) {
      fail(Errc::format, "frame " + std::to_string(i) + ": rotation angle must be below pi");
    }
  }
  return seq;
}

std::vector<std::uint8_t> encode_flame(const FlameSequence& seq) {
  wire::Writer w;
  w.raw("FLM1");
  w.u32(seq.fps);
  w.u32(static_cast<std::uint32_t>(seq.frames.size()));
  w.u32(seq.expr_dim);
  w.u8(seq.has_shape ? 1 : 0);
  for (const auto& f : seq.frames) {
    if (f.expr.size() != seq.expr_dim) fail(Errc::contract, "frame expr_dim differs from sequence");
    if (f.shape.has_value() != seq.has_shape) fail(Errc::contract, "frame shape presence differs");
    for (float v : f.expr) w.f32(v);
    for (float v : f.jaw_aa) w.f32(v);
    for (float v : f.head_aa) w.f32(v);
    if (seq.has_shape) {
      if (f.shape->size() != kShapeDim) fail(Errc::contract, "shape must have 300 values");
      for (float v : *f.shape) w.f32(v);
    }
  }
  return w.take();
}

FlameSequence read_flame(const std::string& path) { return parse_flame(read_file(path)); }

void write_flame(const std::string& path, const FlameSequence& seq) {
  write_file(path, encode_flame(seq));
}

FlameSequence synth_flame(double duration_s, std::uint32_t fps, std::uint64_t seed,
                          std::uint32_t expr_dim) {
  if (!(duration_s > 0) || fps == 0 || expr_dim == 0) {
    fail(Errc::parameter, "duration, fps and expr_dim must be positive");
  }
  constexpr double kTwoPi = 2.0 * std::numbers::pi;
  struct Wave {
    double amp[3], freq[3], phase[3];
  };
  Rng rng(seed);
  auto make_wave = [&](double max_total) {
    Wave w{};
    double weights[3];
    double sum = 0;
    for (double& x : weights) sum += (x = rng.uniform(0.2, 1.0));
    const double total = rng.uniform(0.15, 1.0) * max_total;
    for (int k = 0; k < 3; ++k) {
      w.amp[k] = total * weights[k] / sum;
      w.freq[k] = rng.uniform(0.05, 0.8);
      w.phase[k] = rng.uniform(0.0, kTwoPi);
    }
    return w;
  };
  auto eval = [&](const Wave& w, double t) {
    double v = 0;
    for (int k = 0; k < 3; ++k) v += w.amp[k] * std::sin(kTwoPi * w.freq[k] * t + w.phase[k]);
    return v;
  };

  std::vector<Wave> expr_waves(expr_dim);
  // Later PCA components carry less energy.
  for (std::uint32_t d = 0; d < expr_dim; ++d) {
    expr_waves[d] = make_wave(1.99 / (1.0 + 0.05 * d));
  }
  // Per-component bound 0.5/sqrt(3) keeps the rotation angle <= 0.5 rad.
  const double pose_bound = 0.5 / std::sqrt(3.0) * 0.999;
  Wave pose_waves[6];
  for (auto& w : pose_waves) w = make_wave(pose_bound);

  FlameSequence seq;
  seq.fps = fps;
  seq.expr_dim = expr_dim;
  const auto n = static_cast<std::size_t>(std::llround(duration_s * fps));
  seq.frames.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / fps;
    auto& f = seq.frames[i];
    f.expr.resize(expr_dim);
    for (std::uint32_t d = 0; d < expr_dim; ++d) f.expr[d] = static_cast<float>(eval(expr_waves[d], t));
    for (int k = 0; k < 3; ++k) {
      f.jaw_aa[k] = static_cast<float>(eval(pose_waves[k], t));
      f.head_aa[k] = static_cast<float>(eval(pose_waves[3 + k], t));
    }
    f.capture_ts_us = frame_ts_us(i, fps);
  }
  return seq;
}

std::size_t flame_batch_size(std::uint32_t fps, double T_video_s) {
  // Tolerate representation error (e.g. 24 x 0.1 = 2.4000000000000004).
  const double exact = fps * T_video_s;
  return static_cast<std::size_t>(std::max(1.0, std::ceil(exact - 1e-9)));
}

std::vector<std::span<const FlameFrame>> partition_batches(const FlameSequence& seq, double T_video_s) {
  const std::size_t size = flame_batch_size(seq.fps, T_video_s);
  std::vector<std::span<const FlameFrame>> out;
  for (std::size_t b = 0; b < seq.frames.size(); b += size) {
    out.emplace_back(seq.frames.data() + b, std::min(size, seq.frames.size() - b));
  }
  return out;
}

std::size_t publish_batches(const FlameSequence& seq, double T_video_s, Publisher& pub, Pacing pacing,
                            std::uint64_t start_us,
                            const std::function<void(const BatchPublished&)>& observer) {
  const auto batches = partition_batches(seq, T_video_s);
  for (std::size_t b = 0; b < batches.size(); ++b) {
    if (pacing == Pacing::live) {
      const auto due = start_us + static_cast<std::uint64_t>(std::llround((b + 1) * T_video_s * 1e6));
      std::this_thread::sleep_until(to_time_point(due));
    }
    BatchPublished info;
    info.index = b;
    info.frames = batches[b].size();
    info.capture_ts_us = now_us();
    auto payload = encode_flame_batch(batches[b]);
    info.processed_ts_us = now_us();
    pub.publish(PayloadKind::flame, std::move(payload), info.capture_ts_us);
    info.publish_ts_us = now_us();
    if (observer) observer(info);
  }
  return batches.size();
}

}  // namespace relisten
