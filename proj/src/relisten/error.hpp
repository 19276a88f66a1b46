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

#ifndef RELISTEN_ERROR_HPP_
#define RELISTEN_ERROR_HPP_

#include <stdexcept>
#include <string>

namespace relisten {

// Mirrors rl_status in the C API; values must stay in sync.
enum class Errc : int {
  parse = 1,
  constraint = 2,
  format = 3,
  contract = 4,
  numeric = 5,
  transport = 6,
  size = 7,
  io = 8,
  validation = 9,
  parameter = 10,
  startup = 11,
  empty = 12,
  timeout = 13,
};

const char* errc_name(Errc code) noexcept;

class Error : public std::runtime_error {
public:
  Error(Errc code, const std::string& what) : std::runtime_error(what), code_(code) {}
  Errc code() const noexcept { return code_; }

private:
  Errc code_;
};

[[noreturn]] void fail(Errc code, const std::string& message);

inline void require(bool cond, Errc code, const char* message) {
  if (!cond) fail(code, message);
}

}  // namespace relisten

#endif  // RELISTEN_ERROR_HPP_
