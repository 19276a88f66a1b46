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

#include "relisten/payload.hpp"

#include "relisten/error.hpp"
#include "relisten/wire.hpp"

namespace relisten {

std::vector<std::uint8_t> encode_flame_batch(std::span<const FlameFrame> frames) {
  wire::Writer w;
  const std::uint32_t dim = frames.empty() ? 0 : static_cast<std::uint32_t>(frames[0].expr.size());
  const bool has_shape = !frames.empty() && frames[0].shape.has_value();
  w.u32(static_cast<std::uint32_t>(frames.size()));
  w.u32(dim);
  w.u8(has_shape ? 1 : 0);
  for (const auto& f : frames) {
    if (f.expr.size() != dim) fail(Errc::contract, "flame batch with mixed expr_dim");
    if (f.shape.has_value() != has_shape) fail(Errc::contract, "flame batch with mixed shape");
    w.u64(f.capture_ts_us);
    for (float v : f.expr) w.f32(v);
    for (float v : f.jaw_aa) w.f32(v);
    for (float v : f.head_aa) w.f32(v);
    if (has_shape) {
      if (f.shape->size() != kShapeDim) fail(Errc::contract, "shape must have 300 values");
      for (float v : *f.shape) w.f32(v);
    }
  }
  return w.take();
}

std::vector<FlameFrame> decode_flame_batch(std::span<const std::uint8_t> bytes) {
  wire::Reader r(bytes);
  const auto n = r.u32();
  const auto dim = r.u32();
  const bool has_shape = r.u8() != 0;
  const std::size_t per_frame = 8 + 4 * (dim + 6 + (has_shape ? kShapeDim : 0));
  if (r.remaining() != per_frame * n) fail(Errc::format, "flame batch length mismatch");
  std::vector<FlameFrame> out(n);
  for (auto& f : out) {
    f.capture_ts_us = r.u64();
    f.expr.resize(dim);
    for (auto& v : f.expr) v = r.f32();
    for (auto& v : f.jaw_aa) v = r.f32();
    for (auto& v : f.head_aa) v = r.f32();
    if (has_shape) {
      f.shape.emplace(kShapeDim);
      for (auto& v : *f.shape) v = r.f32();
    }
  }
  return out;
}

std::vector<std::uint8_t> encode_arkit_batch(std::span<const ArkitFrame> frames) {
  wire::Writer w;
  w.u32(static_cast<std::uint32_t>(frames.size()));
  for (const auto& f : frames) {
    w.u64(f.seq);
    w.u64(f.t_ms);
    for (double v : f.weights) w.f64(v);
    for (double v : f.jaw_euler) w.f64(v);
    for (double v : f.head_euler) w.f64(v);
  }
  return w.take();
}

std::vector<ArkitFrame> decode_arkit_batch(std::span<const std::uint8_t> bytes) {
  wire::Reader r(bytes);
  const auto n = r.u32();
  if (r.remaining() != static_cast<std::size_t>(n) * (16 + 8 * (kArkitCount + 6))) {
    fail(Errc::format, "arkit batch length mismatch");
  }
  std::vector<ArkitFrame> out(n);
  for (auto& f : out) {
    f.seq = r.u64();
    f.t_ms = r.u64();
    for (auto& v : f.weights) v = r.f64();
    for (auto& v : f.jaw_euler) v = r.f64();
    for (auto& v : f.head_euler) v = r.f64();
  }
  return out;
}

}  // namespace relisten
