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

#include "relisten/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "relisten/error.hpp"

namespace relisten {

const MetricSummary* LatencyReport::find(const std::string& stage, const std::string& metric) const {
  for (const auto& r : rows) {
    if (r.stage == stage && r.metric == metric) return &r;
  }
  return nullptr;
}

std::vector<std::string> LatencyReport::stages() const {
  std::vector<std::string> out;
  for (const auto& r : rows) {
    if (std::find(out.begin(), out.end(), r.stage) == out.end()) out.push_back(r.stage);
  }
  return out;
}

double nearest_rank(std::vector<double> values, double p) {
  if (values.empty()) fail(Errc::empty, "quantile of an empty sample");
  std::sort(values.begin(), values.end());
  const auto n = static_cast<double>(values.size());
  auto rank = static_cast<std::size_t>(std::ceil(p * n - 1e-9));
  rank = std::clamp<std::size_t>(rank, 1, values.size());
  return values[rank - 1];
}

bool MetricsRegistry::record(const std::string& stage, const StageSample& s) {
  std::lock_guard lk(mu_);
  auto& ring = stages_[stage];
  if (!(s.capture_ts_us <= s.recv_ts_us && s.recv_ts_us <= s.processed_ts_us &&
        s.processed_ts_us <= s.publish_ts_us)) {
    ++ring.rejected;
    return false;
  }
  if (ring.samples.size() == kRingCapacity) ring.samples.pop_front();
  ring.samples.push_back(s);
  return true;
}

std::size_t MetricsRegistry::count(const std::string& stage) const {
  std::lock_guard lk(mu_);
  const auto it = stages_.find(stage);
  return it == stages_.end() ? 0 : it->second.samples.size();
}

std::uint64_t MetricsRegistry::rejected(const std::string& stage) const {
  std::lock_guard lk(mu_);
  const auto it = stages_.find(stage);
  return it == stages_.end() ? 0 : it->second.rejected;
}

std::uint64_t MetricsRegistry::rejected_total() const {
  std::lock_guard lk(mu_);
  std::uint64_t n = 0;
  for (const auto& [name, ring] : stages_) n += ring.rejected;
  return n;
}

namespace {

MetricSummary summarize(const std::string& stage, const std::string& metric, const std::vector<double>& v) {
  MetricSummary m;
  m.stage = stage;
  m.metric = metric;
  m.count = v.size();
  m.p50 = nearest_rank(v, 0.50);
  m.p95 = nearest_rank(v, 0.95);
  m.max = *std::max_element(v.begin(), v.end());
  return m;
}

}  // namespace

std::optional<LatencyReport> MetricsRegistry::report() const {
  std::map<std::string, std::deque<StageSample>> snap;
  {
    std::lock_guard lk(mu_);
    for (const auto& [name, ring] : stages_) {
      if (!ring.samples.empty()) snap[name] = ring.samples;
    }
  }
  if (snap.empty()) return std::nullopt;
  LatencyReport rep;
  for (const auto& [name, samples] : snap) {
    std::vector<double> proc, pub, e2e, per_frame;
    bool batched = false;
    for (const auto& s : samples) {
      proc.push_back(static_cast<double>(s.processed_ts_us - s.recv_ts_us) / 1e6);
      pub.push_back(static_cast<double>(s.publish_ts_us - s.processed_ts_us) / 1e6);
      e2e.push_back(static_cast<double>(s.publish_ts_us - s.capture_ts_us) / 1e6);
      per_frame.push_back(proc.back() / std::max<std::uint32_t>(s.frames, 1));
      batched = batched || s.frames > 1;
    }
    rep.rows.push_back(summarize(name, "processing", proc));
    rep.rows.push_back(summarize(name, "publish", pub));
    rep.rows.push_back(summarize(name, "end_to_end", e2e));
    if (batched) rep.rows.push_back(summarize(name, "processing_per_frame", per_frame));
  }
  return rep;
}

std::string format_csv(const LatencyReport& report) {
  std::string out = "stage,metric,count,p50,p95,max\n";
  char buf[256];
  for (const auto& r : report.rows) {
    std::snprintf(buf, sizeof buf, "%s,%s,%llu,%.6f,%.6f,%.6f\n", r.stage.c_str(), r.metric.c_str(),
                  static_cast<unsigned long long>(r.count), r.p50, r.p95, r.max);
    out += buf;
  }
  return out;
}

LatencyReport parse_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != "stage,metric,count,p50,p95,max") {
    fail(Errc::parse, "latency CSV: missing header");
  }
  LatencyReport rep;
  int n = 1;
  while (std::getline(in, line)) {
    ++n;
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::istringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    if (cells.size() != 6) fail(Errc::parse, "latency CSV line " + std::to_string(n) + ": expected 6 fields");
    MetricSummary m;
    try {
      m.stage = cells[0];
      m.metric = cells[1];
      m.count = std::stoull(cells[2]);
      m.p50 = std::stod(cells[3]);
      m.p95 = std::stod(cells[4]);
      m.max = std::stod(cells[5]);
    } catch (const std::exception&) {
      fail(Errc::parse, "latency CSV line " + std::to_string(n) + ": bad number");
    }
    rep.rows.push_back(std::move(m));
  }
  return rep;
}

}  // namespace relisten
