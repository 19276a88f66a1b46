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

#include "relisten/frame_json.hpp"

#include <cmath>
#include <cstdio>

#include <nlohmann/json.hpp>

#include "relisten/error.hpp"

namespace relisten {

std::string format_number(double v) {
  if (!std::isfinite(v)) fail(Errc::numeric, "encode_frame: non-finite value");
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  std::string s(buf);
  while (s.size() > 1 && s.back() == '0' && s[s.size() - 2] != '.') s.pop_back();
  if (s == "-0.0") s = "0.0";
  return s;
}

std::string encode_frame(const ArkitFrame& f) {
  std::string out;
  out.reserve(2048);
  out += "{\"seq\":" + std::to_string(f.seq) + ",\"t_ms\":" + std::to_string(f.t_ms) + ",\"blendshapes\":{";
  const auto& names = arkit_names();
  for (std::size_t i = 0; i < kArkitCount; ++i) {
    if (i) out += ',';
    out += '"';
    out += names[i];
    out += "\":";
    out += format_number(f.weights[i]);
  }
  out += '}';
  const auto vec = [&](const char* key, const std::array<double, 3>& v) {
    out += ",\"";
    out += key;
    out += "\":{\"x\":" + format_number(v[0]) + ",\"y\":" + format_number(v[1]) + ",\"z\":" + format_number(v[2]) + '}';
  };
  vec("jaw", f.jaw_euler);
  vec("head", f.head_euler);
  out += '}';
  return out;
}

namespace {

double number(const nlohmann::json& j, const char* what) {
  if (!j.is_number()) fail(Errc::format, std::string("frame field '") + what + "' is not a number");
  return j.get<double>();
}

std::uint64_t unsigned_field(const nlohmann::json& j, const char* key) {
  if (!j.contains(key) || !j[key].is_number_unsigned()) {
    fail(Errc::format, std::string("frame field '") + key + "' missing or not an unsigned integer");
  }
  return j[key].get<std::uint64_t>();
}

std::array<double, 3> xyz(const nlohmann::json& j, const char* key) {
  if (!j.contains(key) || !j[key].is_object() || j[key].size() != 3) {
    fail(Errc::format, std::string("frame field '") + key + "' must be an object with x, y, z");
  }
  const auto& o = j[key];
  std::array<double, 3> v{};
  const char* axes[] = {"x", "y", "z"};
  for (int i = 0; i < 3; ++i) {
    if (!o.contains(axes[i])) fail(Errc::format, std::string("frame field '") + key + "." + axes[i] + "' missing");
    v[static_cast<std::size_t>(i)] = number(o[axes[i]], axes[i]);
  }
  return v;
}

}  // namespace

ArkitFrame decode_frame(std::string_view json) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json);
  } catch (const nlohmann::json::parse_error& e) {
    fail(Errc::format, std::string("frame is not valid JSON: ") + e.what());
  }
  if (!j.is_object() || j.size() != 5) fail(Errc::format, "frame must be an object with 5 fields");
  ArkitFrame f;
  f.seq = unsigned_field(j, "seq");
  f.t_ms = unsigned_field(j, "t_ms");
  if (!j.contains("blendshapes") || !j["blendshapes"].is_object() || j["blendshapes"].size() != kArkitCount) {
    fail(Errc::format, "frame field 'blendshapes' must hold 52 weights");
  }
  const auto& bs = j["blendshapes"];
  const auto& names = arkit_names();
  for (std::size_t i = 0; i < kArkitCount; ++i) {
    if (!bs.contains(names[i])) fail(Errc::format, std::string("blendshape '") + names[i] + "' missing");
    f.weights[i] = number(bs[names[i]], names[i]);
  }
  f.jaw_euler = xyz(j, "jaw");
  f.head_euler = xyz(j, "head");
  return f;
}

}  // namespace relisten
