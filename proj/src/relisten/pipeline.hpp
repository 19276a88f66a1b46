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

#ifndef RELISTEN_PIPELINE_HPP_
#define RELISTEN_PIPELINE_HPP_

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "relisten/config.hpp"
#include "relisten/features.hpp"
#include "relisten/mapper.hpp"
#include "relisten/metrics.hpp"
#include "relisten/predictor.hpp"
#include "relisten/vad.hpp"

namespace relisten {

enum class RunMode { offline, live };

/// File-level description of a run.
struct RunSpec {
  RunMode mode = RunMode::offline;  ///< offline publishes inputs back to back
  std::string wav_path;
  std::string flame_path;
  std::string gl_path;
  std::string weights_path;  ///< optional; seeded model when empty
  std::string config_path;   ///< optional
  std::optional<PipelineConfig> config;  ///< takes precedence over config_path
  std::string frames_out;    ///< JSON-lines dump, optional
  std::string latency_csv;   ///< optional
  std::optional<std::uint64_t> seed;
  std::string serve_addr;    ///< live mode: stream frames over WebSocket when set
};

struct PipelineInputs {
  PipelineConfig cfg;
  std::vector<std::int16_t> audio;
  int sample_rate_hz = 16000;
  FlameSequence flame;
  GLMatrix gl;
  std::optional<PredictorModel> model;  ///< seeded from cfg when absent
};

struct PipelineOptions {
  RunMode mode = RunMode::offline;
  std::string frames_out;
  std::string latency_csv;
  bool keep_frames = true;
  std::string serve_addr;  ///< live mode only
  /// Called with the bound server address before inputs start flowing.
  std::function<void(const std::string&)> on_server_ready;
  int drain_timeout_ms = 10000;
};

struct RunSummary {
  std::uint64_t flame_frames_in = 0;
  std::uint64_t mel_frames_in = 0;
  std::uint64_t steps = 0;
  std::uint64_t skipped_steps = 0;
  std::uint64_t frames_out = 0;
  std::uint64_t transport_dropped = 0;
  std::uint64_t fusion_rejected = 0;
  std::uint64_t metrics_rejected = 0;
  std::uint64_t weights_total = 0;
  std::uint64_t weights_out_of_range = 0;
  std::uint64_t server_dropped = 0;
  std::vector<SpeechSegment> speech;
  double first_output_s = -1.0;  ///< input start to first emitted frame
  std::optional<LatencyReport> latency;
  std::vector<ArkitFrame> frames;
};

/// Launches features, audio, generator, mapper and sink stages connected by
/// the transport; returns after every stage drained. Any stage failure
/// tears the rest down and is rethrown.
RunSummary run_pipeline(const PipelineInputs& inputs, const PipelineOptions& options);

/// Loads and validates every path before starting any stage.
RunSummary run_pipeline(const RunSpec& spec);

std::string format_summary(const RunSummary& s);

}  // namespace relisten

#endif  // RELISTEN_PIPELINE_HPP_
