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

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "relisten/error.hpp"
#include "relisten/metrics.hpp"
#include "relisten/rng.hpp"

using namespace relisten;

namespace {

StageSample sample(std::uint64_t capture, std::uint64_t recv, std::uint64_t processed, std::uint64_t publish,
                   std::uint32_t frames = 1) {
  return {capture, recv, processed, publish, frames};
}

}  // namespace

TEST(NearestRank, Examples) {
  std::vector<double> v;
  for (int i = 1; i <= 100; ++i) v.push_back(i / 1000.0);
  EXPECT_DOUBLE_EQ(nearest_rank(v, 0.5), 0.050);
  EXPECT_DOUBLE_EQ(nearest_rank(v, 0.95), 0.095);
  EXPECT_DOUBLE_EQ(nearest_rank(v, 1.0), 0.100);
  EXPECT_DOUBLE_EQ(nearest_rank({7.0}, 0.5), 7.0);
  EXPECT_DOUBLE_EQ(nearest_rank({3.0, 1.0, 2.0}, 0.5), 2.0);
  try {
    nearest_rank({}, 0.5);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::empty);
  }
}

TEST(NearestRank, MatchesCountingOracle) {
  Rng rng(1);
  for (int t = 0; t < 300; ++t) {
    std::vector<double> v(1 + rng.below(300));
    for (auto& x : v) x = std::round(rng.uniform(0, 50));
    const double p = rng.uniform(0.01, 1.0);
    const double got = nearest_rank(v, p);
    // Smallest value with at least p n samples at or below it.
    std::vector<double> s = v;
    std::sort(s.begin(), s.end());
    double want = s.back();
    for (double c : s) {
      const auto below = std::count_if(v.begin(), v.end(), [&](double x) { return x <= c; });
      if (static_cast<double>(below) >= p * static_cast<double>(v.size()) - 1e-9) {
        want = c;
        break;
      }
    }
    EXPECT_EQ(got, want);
  }
}

TEST(Metrics, RecordsAndReportsLatencies) {
  MetricsRegistry reg;
  EXPECT_FALSE(reg.report());
  for (std::uint64_t i = 1; i <= 100; ++i) {
    ASSERT_TRUE(reg.record("mapper", sample(0, 1000, 1000 + i * 1000, 1000 + i * 1000 + 10)));
  }
  EXPECT_EQ(reg.count("mapper"), 100u);
  const auto rep = reg.report();
  ASSERT_TRUE(rep);
  const auto* proc = rep->find("mapper", "processing");
  ASSERT_NE(proc, nullptr);
  EXPECT_EQ(proc->count, 100u);
  EXPECT_DOUBLE_EQ(proc->p50, 0.050);
  EXPECT_DOUBLE_EQ(proc->p95, 0.095);
  EXPECT_DOUBLE_EQ(proc->max, 0.100);
  EXPECT_DOUBLE_EQ(rep->find("mapper", "publish")->p50, 0.00001);
  EXPECT_EQ(rep->find("mapper", "processing_per_frame"), nullptr);
  EXPECT_EQ(rep->stages(), std::vector<std::string>{"mapper"});
}

TEST(Metrics, OrderingViolationsAreRejected) {
  MetricsRegistry reg;
  EXPECT_FALSE(reg.record("s", sample(10, 5, 20, 30)));
  EXPECT_FALSE(reg.record("s", sample(0, 5, 4, 30)));
  EXPECT_FALSE(reg.record("s", sample(0, 5, 6, 5)));
  EXPECT_TRUE(reg.record("s", sample(5, 5, 5, 5)));
  EXPECT_EQ(reg.count("s"), 1u);
  EXPECT_EQ(reg.rejected("s"), 3u);
  EXPECT_EQ(reg.rejected_total(), 3u);
}

TEST(Metrics, RingKeepsTheNewestSamples) {
  MetricsRegistry reg;
  for (std::uint64_t i = 0; i <= MetricsRegistry::kRingCapacity; ++i) reg.record("s", sample(0, 0, i, i));
  EXPECT_EQ(reg.count("s"), MetricsRegistry::kRingCapacity);
  // Sample 0 was evicted, leaving processing times of 1..100000 us.
  const auto* proc = reg.report()->find("s", "processing");
  EXPECT_DOUBLE_EQ(proc->p50, 0.05);
  EXPECT_DOUBLE_EQ(proc->max, 0.1);
}

TEST(Metrics, BatchedStagesReportPerFrameProcessing) {
  MetricsRegistry reg;
  reg.record("audio", sample(0, 0, 60000, 60000, 60));
  const auto rep = reg.report();
  const auto* pf = rep->find("audio", "processing_per_frame");
  ASSERT_NE(pf, nullptr);
  EXPECT_DOUBLE_EQ(pf->p50, 0.001);
}

TEST(Metrics, CsvRoundTrip) {
  MetricsRegistry reg;
  Rng rng(2);
  for (const char* stage : {"audio", "fusion", "generator", "mapper", "sink"}) {
    for (int i = 0; i < 200; ++i) {
      const std::uint64_t c = rng.below(1000000);
      const std::uint64_t r = c + rng.below(100000);
      const std::uint64_t p = r + rng.below(100000);
      reg.record(stage, sample(c, r, p, p + rng.below(5000), 1 + static_cast<std::uint32_t>(rng.below(3))));
    }
  }
  const auto rep = *reg.report();
  const auto csv = format_csv(rep);
  EXPECT_EQ(csv.rfind("stage,metric,count,p50,p95,max\n", 0), 0u);
  const auto back = parse_csv(csv);
  ASSERT_EQ(back.rows.size(), rep.rows.size());
  for (std::size_t i = 0; i < rep.rows.size(); ++i) {
    EXPECT_EQ(back.rows[i].stage, rep.rows[i].stage);
    EXPECT_EQ(back.rows[i].metric, rep.rows[i].metric);
    EXPECT_EQ(back.rows[i].count, rep.rows[i].count);
    EXPECT_NEAR(back.rows[i].p50, rep.rows[i].p50, 1e-6);
    EXPECT_NEAR(back.rows[i].p95, rep.rows[i].p95, 1e-6);
    EXPECT_NEAR(back.rows[i].max, rep.rows[i].max, 1e-6);
  }
  EXPECT_EQ(format_csv(parse_csv(csv)), csv);
  EXPECT_THROW(parse_csv("bad header\n"), Error);
}
