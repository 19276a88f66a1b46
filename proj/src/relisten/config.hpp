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

#ifndef RELISTEN_CONFIG_HPP_
#define RELISTEN_CONFIG_HPP_

#include <cstdint>
#include <map>
#include <string>

namespace relisten {

/// Pipeline-wide parameters. Key names in the config file match the field
/// names below, except for the dotted keys noted per field.
struct PipelineConfig {
  int F_fps = 30;          ///< output / animation frame rate
  int M_fps = 120;         ///< mel frame rate, 4 x F_fps unless overridden
  double T_audio_s = 0.5;  ///< audio batch length
  double T_video_s = 1.0;  ///< FLAME batch length
  int expr_dim = 100;
  int l = 128;             ///< mel coefficients per frame
  int K = 200;             ///< codebook size
  int T_window = 64;       ///< speaker FLAME frames per window
  int t_history = 32;      ///< listener history frames
  int w_out = 8;           ///< frames predicted per step
  int sample_rate_hz = 16000;
  std::uint64_t seed = 0;

  int code_dim = 64;
  double temperature = 1.0;
  bool greedy = false;
  int stride_frames = 8;        ///< fusion.stride_frames
  int inbox_capacity = 256;     ///< transport.inbox_capacity
  int server_queue = 128;       ///< server.queue_capacity
  bool mel_dct = true;          ///< mel.dct
  bool M_fps_override = false;  ///< allow M_fps != 4 x F_fps
  std::map<std::string, std::string> pub_addrs;  ///< pub.<topic>.addr

  int mel_frames_per_batch() const;
  int flame_dim() const { return expr_dim + 6; }

  /// Throws Error(constraint) on violated invariants.
  void validate() const;

  bool operator==(const PipelineConfig&) const = default;
};

/// Parses key=value text. Missing keys keep defaults; M_fps defaults to
/// 4 x F_fps when absent.
PipelineConfig parse_config(const std::string& text);
PipelineConfig load_config(const std::string& path);
std::string format_config(const PipelineConfig& cfg);
void save_config(const PipelineConfig& cfg, const std::string& path);

/// Applies a single key=value assignment; used by the parser and the C API.
void set_config_value(PipelineConfig& cfg, const std::string& key, const std::string& value);
std::string get_config_value(const PipelineConfig& cfg, const std::string& key);

}  // namespace relisten

#endif  // RELISTEN_CONFIG_HPP_
