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

#include "relisten/error.hpp"

namespace relisten {

const char* errc_name(Errc code) noexcept {
  switch (code) {
    case Errc::parse: return "parse error";
    case Errc::constraint: return "constraint error";
    case Errc::format: return "format error";
    case Errc::contract: return "contract error";
    case Errc::numeric: return "numeric error";
    case Errc::transport: return "transport error";
    case Errc::size: return "size error";
    case Errc::io: return "io error";
    case Errc::validation: return "validation error";
    case Errc::parameter: return "parameter error";
    case Errc::startup: return "startup error";
    case Errc::empty: return "empty";
    case Errc::timeout: return "timeout";
  }
  return "unknown error";
}

void fail(Errc code, const std::string& message) {
  throw Error(code, message);
}

}  // namespace relisten
