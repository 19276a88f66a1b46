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

#include "relisten/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "relisten/error.hpp"

namespace relisten {
namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

[[noreturn]] void bad_value(const std::string& key, const std::string& value) {
  fail(Errc::parse, "config key '" + key + "': malformed value '" + value + "'");
}

int parse_int(const std::string& key, const std::string& v) {
  int out = 0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size()) bad_value(key, v);
  return out;
}

std::uint64_t parse_u64(const std::string& key, const std::string& v) {
  std::uint64_t out = 0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size()) bad_value(key, v);
  return out;
}

double parse_double(const std::string& key, const std::string& v) {
  double out = 0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size() || !std::isfinite(out)) bad_value(key, v);
  return out;
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "1" || v == "true" || v == "yes" || v == "on") return true;
  if (v == "0" || v == "false" || v == "no" || v == "off") return false;
  bad_value(key, v);
}

std::string fmt_double(double d) {
  char buf[64];
  const auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), d);
  return std::string(buf, p);
}

bool is_pub_addr_key(const std::string& key) {
  return key.size() > 9 && key.rfind("pub.", 0) == 0 &&
         key.compare(key.size() - 5, 5, ".addr") == 0;
}

}  // namespace

int PipelineConfig::mel_frames_per_batch() const {
  return static_cast<int>(std::lround(M_fps * T_audio_s));
}

void PipelineConfig::validate() const {
  auto positive = [](bool ok, const char* key) {
    if (!ok) fail(Errc::constraint, std::string("config key '") + key + "' must be positive");
  };
  positive(F_fps > 0, "F_fps");
  positive(M_fps > 0, "M_fps");
  positive(T_audio_s > 0, "T_audio_s");
  positive(T_video_s > 0, "T_video_s");
  positive(expr_dim > 0, "expr_dim");
  positive(l > 0, "l");
  positive(K > 0, "K");
  positive(T_window > 0, "T_window");
  positive(t_history > 0, "t_history");
  positive(w_out > 0, "w_out");
  positive(sample_rate_hz > 0, "sample_rate_hz");
  positive(code_dim > 0, "code_dim");
  positive(temperature > 0, "temperature");
  positive(stride_frames > 0, "fusion.stride_frames");
  positive(inbox_capacity > 0, "transport.inbox_capacity");
  positive(server_queue > 0, "server.queue_capacity");
  if (!M_fps_override && M_fps != 4 * F_fps) {
    fail(Errc::constraint, "M_fps (" + std::to_string(M_fps) + ") must equal 4 x F_fps (" +
                               std::to_string(4 * F_fps) + ") unless M_fps_override=true");
  }
  if (t_history % w_out != 0) {
    fail(Errc::constraint, "t_history must be a multiple of w_out");
  }
}

void set_config_value(PipelineConfig& cfg, const std::string& key, const std::string& value) {
  if (key == "F_fps") cfg.F_fps = parse_int(key, value);
  else if (key == "M_fps") cfg.M_fps = parse_int(key, value);
  else if (key == "T_audio_s") cfg.T_audio_s = parse_double(key, value);
  else if (key == "T_video_s") cfg.T_video_s = parse_double(key, value);
  else if (key == "expr_dim") cfg.expr_dim = parse_int(key, value);
  else if (key == "l") cfg.l = parse_int(key, value);
  else if (key == "K") cfg.K = parse_int(key, value);
  else if (key == "T_window") cfg.T_window = parse_int(key, value);
  else if (key == "t_history") cfg.t_history = parse_int(key, value);
  else if (key == "w_out") cfg.w_out = parse_int(key, value);
  else if (key == "sample_rate_hz") cfg.sample_rate_hz = parse_int(key, value);
  else if (key == "seed") cfg.seed = parse_u64(key, value);
  else if (key == "code_dim") cfg.code_dim = parse_int(key, value);
  else if (key == "temperature") cfg.temperature = parse_double(key, value);
  else if (key == "greedy") cfg.greedy = parse_bool(key, value);
  else if (key == "fusion.stride_frames") cfg.stride_frames = parse_int(key, value);
  else if (key == "transport.inbox_capacity") cfg.inbox_capacity = parse_int(key, value);
  else if (key == "server.queue_capacity") cfg.server_queue = parse_int(key, value);
  else if (key == "mel.dct") cfg.mel_dct = parse_bool(key, value);
  else if (key == "M_fps_override") cfg.M_fps_override = parse_bool(key, value);
  else if (is_pub_addr_key(key)) {
    if (value.find(':') == std::string::npos) bad_value(key, value);
    cfg.pub_addrs[key.substr(4, key.size() - 9)] = value;
  } else {
    fail(Errc::parse, "unknown config key '" + key + "'");
  }
}

std::string get_config_value(const PipelineConfig& cfg, const std::string& key) {
  if (key == "F_fps") return std::to_string(cfg.F_fps);
  if (key == "M_fps") return std::to_string(cfg.M_fps);
  if (key == "T_audio_s") return fmt_double(cfg.T_audio_s);
  if (key == "T_video_s") return fmt_double(cfg.T_video_s);
  if (key == "expr_dim") return std::to_string(cfg.expr_dim);
  if (key == "l") return std::to_string(cfg.l);
  if (key == "K") return std::to_string(cfg.K);
  if (key == "T_window") return std::to_string(cfg.T_window);
  if (key == "t_history") return std::to_string(cfg.t_history);
  if (key == "w_out") return std::to_string(cfg.w_out);
  if (key == "sample_rate_hz") return std::to_string(cfg.sample_rate_hz);
  if (key == "seed") return std::to_string(cfg.seed);
  if (key == "code_dim") return std::to_string(cfg.code_dim);
  if (key == "temperature") return fmt_double(cfg.temperature);
  if (key == "greedy") return cfg.greedy ? "true" : "false";
  if (key == "fusion.stride_frames") return std::to_string(cfg.stride_frames);
  if (key == "transport.inbox_capacity") return std::to_string(cfg.inbox_capacity);
  if (key == "server.queue_capacity") return std::to_string(cfg.server_queue);
  if (key == "mel.dct") return cfg.mel_dct ? "true" : "false";
  if (key == "M_fps_override") return cfg.M_fps_override ? "true" : "false";
  if (is_pub_addr_key(key)) {
    const auto it = cfg.pub_addrs.find(key.substr(4, key.size() - 9));
    if (it != cfg.pub_addrs.end()) return it->second;
  }
  fail(Errc::parse, "unknown config key '" + key + "'");
}

PipelineConfig parse_config(const std::string& text) {
  PipelineConfig cfg;
  bool m_fps_set = false;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    const std::string t = trim(line);
    if (t.empty()) continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) {
      fail(Errc::parse, "config line " + std::to_string(lineno) + ": expected key=value");
    }
    const std::string key = trim(std::string_view(t).substr(0, eq));
    const std::string value = trim(std::string_view(t).substr(eq + 1));
    set_config_value(cfg, key, value);
    if (key == "M_fps") m_fps_set = true;
  }
  if (!m_fps_set) cfg.M_fps = 4 * cfg.F_fps;
  cfg.validate();
  return cfg;
}

PipelineConfig load_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) fail(Errc::io, "cannot open config '" + path + "'");
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_config(ss.str());
}

std::string format_config(const PipelineConfig& cfg) {
  static const char* kKeys[] = {
      "F_fps",     "M_fps",          "T_audio_s",   "T_video_s",      "expr_dim",
      "l",         "K",              "T_window",    "t_history",      "w_out",
      "sample_rate_hz", "seed",      "code_dim",    "temperature",    "greedy",
      "fusion.stride_frames", "transport.inbox_capacity", "server.queue_capacity",
      "mel.dct",   "M_fps_override",
  };
  std::string out = "# relisten pipeline configuration\n";
  for (const char* k : kKeys) {
    out += k;
    out += '=';
    out += get_config_value(cfg, k);
    out += '\n';
  }
  for (const auto& [topic, addr] : cfg.pub_addrs) {
    out += "pub." + topic + ".addr=" + addr + "\n";
  }
  return out;
}

void save_config(const PipelineConfig& cfg, const std::string& path) {
  std::ofstream f(path, std::ios::trunc);
  if (!f) fail(Errc::io, "cannot write config '" + path + "'");
  f << format_config(cfg);
}

}  // namespace relisten
