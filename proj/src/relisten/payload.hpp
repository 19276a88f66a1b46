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

#ifndef RELISTEN_PAYLOAD_HPP_
#define RELISTEN_PAYLOAD_HPP_

#include <cstdint>
#include <span>
#include <vector>

#include "relisten/types.hpp"

namespace relisten {

// Flame batch: u32 count, u32 expr_dim, u8 has_shape, then per frame
// u64 ts_us, f32 expr[expr_dim], f32 jaw[3], f32 head[3], [f32 shape[300]].
std::vector<std::uint8_t> encode_flame_batch(std::span<const FlameFrame> frames);
std::vector<FlameFrame> decode_flame_batch(std::span<const std::uint8_t> bytes);

// Arkit batch: u32 count, then per frame u64 seq, u64 t_ms, f64 weights[52],
// f64 jaw[3], f64 head[3].
std::vector<std::uint8_t> encode_arkit_batch(std::span<const ArkitFrame> frames);
std::vector<ArkitFrame> decode_arkit_batch(std::span<const std::uint8_t> bytes);

}  // namespace relisten

#endif  // RELISTEN_PAYLOAD_HPP_
