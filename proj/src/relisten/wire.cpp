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

#include "relisten/wire.hpp"

#include <bit>
#include <cstring>

#include "relisten/error.hpp"

namespace relisten::wire {

void Writer::f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }
void Writer::f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }

float Reader::f32() { return std::bit_cast<float>(u32()); }
double Reader::f64() { return std::bit_cast<double>(u64()); }

std::uint64_t Reader::get(int n) {
  if (remaining() < static_cast<std::size_t>(n)) fail(Errc::format, "truncated data");
  std::uint64_t v = 0;
  for (int i = 0; i < n; ++i) v |= static_cast<std::uint64_t>(data_[pos_ + i]) << (8 * i);
  pos_ += static_cast<std::size_t>(n);
  return v;
}

std::span<const std::uint8_t> Reader::bytes(std::size_t n) {
  if (remaining() < n) fail(Errc::format, "truncated data");
  auto s = data_.subspan(pos_, n);
  pos_ += n;
  return s;
}

std::string Reader::str(std::size_t n) {
  auto b = bytes(n);
  return std::string(b.begin(), b.end());
}

}  // namespace relisten::wire
