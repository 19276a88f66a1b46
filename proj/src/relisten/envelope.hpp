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

#ifndef RELISTEN_ENVELOPE_HPP_
#define RELISTEN_ENVELOPE_HPP_

#include <cstdint>
#include <span>
#include <vector>

#include "relisten/types.hpp"

namespace relisten {

inline constexpr std::size_t kMaxPayloadBytes = 16u << 20;

/// Layout: u16 topic length, topic bytes, u64 seq, u64 capture_ts_us,
/// u64 publish_ts_us, u8 payload_kind, u32 payload length, payload bytes.
std::vector<std::uint8_t> encode_envelope(const TimedEnvelope& env);
TimedEnvelope decode_envelope(std::span<const std::uint8_t> bytes);

}  // namespace relisten

#endif  // RELISTEN_ENVELOPE_HPP_
