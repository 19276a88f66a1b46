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

#ifndef RELISTEN_CLOCK_HPP_
#define RELISTEN_CLOCK_HPP_

#include <chrono>
#include <cstdint>

namespace relisten {

/// Microseconds since the pipeline epoch (process start), monotonic.
std::uint64_t now_us() noexcept;

/// The epoch as a steady_clock time point, for sleep_until arithmetic.
std::chrono::steady_clock::time_point epoch() noexcept;

inline std::chrono::steady_clock::time_point to_time_point(std::uint64_t us) noexcept {
  return epoch() + std::chrono::microseconds(us);
}

}  // namespace relisten

#endif  // RELISTEN_CLOCK_HPP_
