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

#include "relisten/clock.hpp"

namespace relisten {
namespace {

// Initialized during static construction of the library, i.e. at load.
const std::chrono::steady_clock::time_point kEpoch = std::chrono::steady_clock::now();

}  // namespace

std::chrono::steady_clock::time_point epoch() noexcept { return kEpoch; }

std::uint64_t now_us() noexcept {
  const auto d = std::chrono::steady_clock::now() - kEpoch;
  const auto us = std::chrono::duration_cast<std::chrono::microseconds>(d).count();
  return us < 0 ? 0 : static_cast<std::uint64_t>(us);
}

}  // namespace relisten
