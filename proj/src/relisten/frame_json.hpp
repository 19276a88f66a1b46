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

#ifndef RELISTEN_FRAME_JSON_HPP_
#define RELISTEN_FRAME_JSON_HPP_

#include <string>
#include <string_view>

#include "relisten/types.hpp"

namespace relisten {

/// {"seq":..,"t_ms":..,"blendshapes":{52 names in canonical order},
///  "jaw":{"x","y","z"},"head":{"x","y","z"}}; at most 6 fractional digits.
std::string encode_frame(const ArkitFrame& f);
/// Throws Error(format) on any schema violation.
ArkitFrame decode_frame(std::string_view json);

/// Fixed-point rendering used by encode_frame: 6 digits, trailing zeros
/// trimmed to one, never "-0.0".
std::string format_number(double v);

}  // namespace relisten

#endif  // RELISTEN_FRAME_JSON_HPP_
