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

#ifndef RELISTEN_METRICS_HPP_
#define RELISTEN_METRICS_HPP_

#include <cstdint>
#include <deque>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

namespace relisten {

/// Timestamps in microseconds on the now_us() clock.
/// capture <= recv <= processed <= publish must hold.
struct StageSample {
  std::uint64_t capture_ts_us = 0;
  std::uint64_t recv_ts_us = 0;
  std::uint64_t processed_ts_us = 0;
  std::uint64_t publish_ts_us = 0;
  std::uint32_t frames = 1;  ///< frames handled by this sample
};

struct MetricSummary {
  std::string stage;
  std::string metric;  ///< processing, publish, end_to_end, processing_per_frame
  std::uint64_t count = 0;
  double p50 = 0.0;    ///< seconds
  double p95 = 0.0;
  double max = 0.0;

  bool operator==(const MetricSummary&) const = default;
};

struct LatencyReport {
  std::vector<MetricSummary> rows;

  const MetricSummary* find(const std::string& stage, const std::string& metric) const;
  std::vector<std::string> stages() const;
  bool operator==(const LatencyReport&) const = default;
};

/// Nearest-rank quantile: element ceil(p n) of the sorted values (1-based).
double nearest_rank(std::vector<double> values, double p);

class MetricsRegistry {
public:
  static constexpr std::size_t kRingCapacity = 100000;

  /// False (and counted) when the ordering invariant is violated.
  bool record(const std::string& stage, const StageSample& sample);

  std::size_t count(const std::string& stage) const;
  std::uint64_t rejected(const std::string& stage) const;
  std::uint64_t rejected_total() const;

  /// nullopt when no stage has samples. Stages are reported in name order;
  /// processing_per_frame only for stages whose samples carry more than one frame.
  std::optional<LatencyReport> report() const;

private:
  struct Ring {
    std::deque<StageSample> samples;
    std::uint64_t rejected = 0;
  };
  mutable std::mutex mu_;
  std::map<std::string, Ring> stages_;
};

/// CSV with header `stage,metric,count,p50,p95,max`, seconds with 6 decimals.
std::string format_csv(const LatencyReport& report);
LatencyReport parse_csv(const std::string& text);

}  // namespace relisten

#endif  // RELISTEN_METRICS_HPP_
