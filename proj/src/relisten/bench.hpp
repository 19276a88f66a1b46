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

#ifndef RELISTEN_BENCH_HPP_
#define RELISTEN_BENCH_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "relisten/config.hpp"
#include "relisten/pipeline.hpp"

namespace relisten {

struct MicroResult {
  std::string name;
  int runs = 0;
  double median_s = 0.0;
  double p95_s = 0.0;
  double max_s = 0.0;
};

MicroResult bench_gl_transform(const PipelineConfig& cfg, int runs);   ///< 32 x expr_dim -> 32 x 52
MicroResult bench_arkit_publish(const PipelineConfig& cfg, int runs);  ///< one 32-frame batch over the transport
MicroResult bench_mel_batch(const PipelineConfig& cfg, int runs);      ///< one T_audio batch
MicroResult bench_predict_step(const PipelineConfig& cfg, int runs);
MicroResult bench_metrics_record(int runs);

struct BenchOptions {
  PipelineConfig cfg;
  double duration_s = 10.0;
  int flame_fps = 30;
  int micro_runs = 1000;
  std::string latency_csv = "latency.csv";
};

struct BenchReport {
  RunSummary run;
  std::vector<MicroResult> micro;
  LatencyReport latency;  ///< pipeline stages plus one "micro.<name>" row per micro-benchmark
};

/// Synthetic offline run plus micro-benchmarks; writes latency_csv when set.
BenchReport run_bench(const BenchOptions& opt);

/// Default inputs used by bench and the tests: synthetic speech and FLAME
/// of the given length, GL from the example mapping.
PipelineInputs synthetic_inputs(const PipelineConfig& cfg, double duration_s, int flame_fps);

}  // namespace relisten

#endif  // RELISTEN_BENCH_HPP_
