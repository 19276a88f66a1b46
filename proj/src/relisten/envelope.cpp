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

#include "relisten/envelope.hpp"

#include "relisten/error.hpp"
#include "relisten/wire.hpp"

namespace relisten {

std::vector<std::uint8_t> encode_envelope(const TimedEnvelope& env) {
  if (env.topic.size() > 0xFFFF) fail(Errc::size, "topic too long");
  if (env.payload.size() > kMaxPayloadBytes) fail(Errc::size, "payload exceeds 16 MiB");
  wire::Writer w;
  w.data().reserve(env.topic.size() + env.payload.size() + 31);
  w.u16(static_cast<std::uint16_t>(env.topic.size()));
  w.raw(env.topic);
  w.u64(env.seq);
  w.u64(env.capture_ts_us);
  w.u64(env.publish_ts_us);
  w.u8(static_cast<std::uint8_t>(env.kind));
  w.u32(static_cast<std::uint32_t>(env.payload.size()));
  w.bytes(env.payload);
  return w.take();
}

TimedEnvelope decode_envelope(std::span<const std::uint8_t> bytes) {
  wire::Reader r(bytes);
  TimedEnvelope env;
  env.topic = r.str(r.u16());
  env.seq = r.u64();
  env.capture_ts_us = r.u64();
  env.publish_ts_us = r.u64();
  const auto kind = r.u8();
  if (kind > static_cast<std::uint8_t>(PayloadKind::metrics)) {
    fail(Errc::format, "unknown payload kind " + std::to_string(kind));
  }
  env.kind = static_cast<PayloadKind>(kind);
  const auto n = r.u32();
  if (n > kMaxPayloadBytes) fail(Errc::size, "payload exceeds 16 MiB");
  const auto p = r.bytes(n);
  env.payload.assign(p.begin(), p.end());
  if (!r.done()) fail(Errc::format, "trailing bytes after envelope");
  return env;
}

}  // namespace relisten
