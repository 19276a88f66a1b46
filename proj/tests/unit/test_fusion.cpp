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

#include "relisten/error.hpp"
#include "relisten/features.hpp"
#include "relisten/fusion.hpp"
#include "relisten/mel.hpp"
#include "relisten/payload.hpp"
#include "relisten/rng.hpp"

using namespace relisten;

namespace {

PipelineConfig small_config() {
  PipelineConfig c;
  c.expr_dim = 4;
  c.l = 3;
  c.T_window = 16;
  c.t_history = 8;
  c.w_out = 8;
  return c;
}

std::vector<MelFrame> mel_frames(std::size_t n, int fps, std::size_t l) {
  std::vector<MelFrame> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    out[i].coeffs.assign(l, static_cast<float>(i));
    out[i].capture_ts_us = frame_ts_us(i, fps);
  }
  return out;
}

RowMatrix prediction(const PipelineConfig& c, std::uint64_t step) {
  return RowMatrix::Constant(c.w_out, c.flame_dim(), static_cast<float>(step));
}

// Drives an engine over a flame/mel feed order and collects every window.
std::vector<FusionWindow> drive(const PipelineConfig& c, const FlameSequence& seq,
                                const std::vector<MelFrame>& mel, const std::vector<int>& order,
                                std::size_t flame_chunk, std::size_t mel_chunk) {
  FusionEngine eng(c);
  std::vector<FusionWindow> out;
  auto pump = [&] {
    while (auto w = eng.next_window()) {
      out.push_back(*w);
      eng.commit(prediction(c, eng.step()));
    }
  };
  std::size_t fi = 0, mi = 0;
  for (int which : order) {
    if (which == 0 && fi < seq.frames.size()) {
      const auto n = std::min(flame_chunk, seq.frames.size() - fi);
      eng.on_flame(std::span(seq.frames).subspan(fi, n));
      fi += n;
    } else if (which == 1 && mi < mel.size()) {
      const auto n = std::min(mel_chunk, mel.size() - mi);
      eng.on_mel(std::span(mel).subspan(mi, n));
      mi += n;
    }
    pump();
  }
  if (fi < seq.frames.size()) eng.on_flame(std::span(seq.frames).subspan(fi));
  if (mi < mel.size()) eng.on_mel(std::span(mel).subspan(mi));
  eng.end_flame();
  eng.end_mel();
  pump();
  EXPECT_EQ(eng.readiness(), FusionEngine::Readiness::finished);
  return out;
}

bool same_window(const FusionWindow& a, const FusionWindow& b) {
  return a.speaker_flame == b.speaker_flame && a.speaker_mel == b.speaker_mel &&
         a.listener_past == b.listener_past && a.window_end_ts_us == b.window_end_ts_us &&
         a.mel_end_ts_us == b.mel_end_ts_us && a.flame_padding == b.flame_padding &&
         a.mel_padding == b.mel_padding && a.history_padding == b.history_padding;
}

}  // namespace

TEST(ModalityQueue, InvariantsHoldUnderRandomPushes) {
  Rng rng(99);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t cap = 1 + rng.below(20);
    const std::uint64_t period = 1000 + rng.below(40000);
    ModalityQueue q(PayloadKind::mel, cap, 2, period);
    std::uint64_t accepted = 0, rejected = 0;
    std::uint64_t t = rng.below(1000000);
    const int pushes = static_cast<int>(rng.below(200));
    for (int i = 0; i < pushes; ++i) {
      // Mostly forward, sometimes jitter or far back.
      const auto r = rng.below(10);
      std::uint64_t ts = t;
      if (r < 7) t += rng.below(2 * period), ts = t;
      else if (r < 9) ts = t > period ? t - rng.below(period) : t;
      else ts = t > 10 * period ? t - 10 * period : 0;
      const bool stale = !q.empty() && ts + period < q.newest().ts_us;
      const float v[2] = {static_cast<float>(ts), 0.0f};
      const bool ok = q.push(ts, v);
      EXPECT_EQ(ok, !stale);
      (ok ? accepted : rejected)++;
      ASSERT_LE(q.size(), cap);
      for (std::size_t k = 1; k < q.size(); ++k) ASSERT_LE(q[k - 1].ts_us, q[k].ts_us);
      for (std::size_t k = 0; k < q.size(); ++k) ASSERT_EQ(q[k].v[0], static_cast<float>(q[k].ts_us));
    }
    EXPECT_EQ(q.counters().ingested, accepted + rejected);
    EXPECT_EQ(q.counters().rejected, rejected);
    EXPECT_EQ(q.counters().dropped + q.size(), accepted);
  }
}

TEST(ModalityQueue, DimensionMismatchIsContractError) {
  ModalityQueue q(PayloadKind::flame, 4, 3, 33333);
  const float v[2] = {0, 0};
  try {
    q.push(0, v);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::contract);
  }
}

TEST(ModalityQueue, IngestDecodesFlameEnvelopes) {
  const auto seq = synth_flame(1.0, 30, 1, 4);
  ModalityQueue q(PayloadKind::flame, 64, 10, 33333);
  TimedEnvelope env;
  env.kind = PayloadKind::flame;
  env.payload = encode_flame_batch(seq.frames);
  EXPECT_EQ(ingest(q, env), 30u);
  EXPECT_EQ(q.newest().v, seq.frames.back().motion());
  env.kind = PayloadKind::mel;
  EXPECT_THROW(ingest(q, env), Error);
}

TEST(AssembleWindow, ShortQueuesArePaddedAtTheTop) {
  const auto c = small_config();
  ModalityQueue fq(PayloadKind::flame, 16, 10, 33333), mq(PayloadKind::mel, 64, 3, 8333),
      hq(PayloadKind::flame, 8, 10, 33333);
  const auto seq = synth_flame(0.1, 30, 3, 4);
  for (const auto& f : seq.frames) fq.push(f.capture_ts_us, f.motion());
  ASSERT_EQ(fq.size(), 3u);
  const auto w = assemble_window(fq, mq, hq, c);
  ASSERT_TRUE(w);
  EXPECT_EQ(w->flame_padding, 13u);
  EXPECT_EQ(w->mel_padding, 64u);
  EXPECT_EQ(w->history_padding, 8u);
  EXPECT_FALSE(w->mel_aligned);
  EXPECT_TRUE(w->speaker_flame.topRows(13).isZero());
  for (int r = 0; r < 3; ++r) {
    const auto m = seq.frames[r].motion();
    for (int k = 0; k < 10; ++k) EXPECT_EQ(w->speaker_flame(13 + r, k), m[k]);
  }
  EXPECT_EQ(w->window_end_ts_us, seq.frames.back().capture_ts_us);

  ModalityQueue empty(PayloadKind::flame, 16, 10, 33333);
  EXPECT_FALSE(assemble_window(empty, mq, hq, c));
}

TEST(AssembleWindow, NearestMelFrameWithTiesToEarlier) {
  const auto c = small_config();
  ModalityQueue fq(PayloadKind::flame, 16, 10, 33333), mq(PayloadKind::mel, 64, 3, 8333),
      hq(PayloadKind::flame, 8, 10, 33333);
  for (std::uint64_t t : {0u, 10000u, 20000u}) {
    const float v[3] = {static_cast<float>(t), 0, 0};
    mq.push(t, v);
  }
  const std::vector<float> motion(10, 1.0f);
  const std::pair<std::uint64_t, std::uint64_t> cases[] = {
      {5000, 0}, {5001, 10000}, {14999, 10000}, {15000, 10000}, {15001, 20000}, {99999, 20000}};
  for (const auto& [flame_ts, want] : cases) {
    ModalityQueue q(PayloadKind::flame, 16, 10, 33333);
    q.push(flame_ts, motion);
    const auto w = assemble_window(q, mq, hq, c);
    ASSERT_TRUE(w);
    EXPECT_EQ(w->mel_end_ts_us, want) << flame_ts;
    EXPECT_EQ(w->speaker_mel(63, 0), static_cast<float>(want));
  }
}

TEST(FusionEngine, TenSecondsGiveThirtyEightSteps) {
  PipelineConfig c = small_config();
  const auto seq = synth_flame(10.0, 30, 1, 4);
  const auto mel = mel_frames(1200, 120, 3);
  const auto windows = drive(c, seq, mel, {0, 1}, seq.frames.size(), mel.size());
  ASSERT_EQ(windows.size(), 38u);
  for (std::size_t j = 0; j < windows.size(); ++j) {
    const auto t = frame_ts_us(j * 8, 30);
    EXPECT_EQ(windows[j].window_end_ts_us, t);
    EXPECT_EQ(windows[j].mel_end_ts_us, t);
    // Step j sees the predictions of the steps before it.
    const std::size_t have = std::min<std::size_t>(8, j * 8);
    EXPECT_EQ(windows[j].history_padding, 8 - have);
    if (j > 0) {
      EXPECT_EQ(windows[j].listener_past(7, 0), static_cast<float>(j - 1));
    }
  }
}

TEST(FusionEngine, NoFutureInputLeaksIntoAWindow) {
  PipelineConfig c = small_config();
  const auto seq = synth_flame(4.0, 30, 2, 4);
  const auto mel = mel_frames(480, 120, 3);
  for (const auto& w : drive(c, seq, mel, {0, 1}, seq.frames.size(), mel.size())) {
    EXPECT_LE(w.mel_end_ts_us, w.window_end_ts_us);
  }
}

TEST(FusionEngine, FeedInterleavingDoesNotChangeWindows) {
  PipelineConfig c = small_config();
  const auto seq = synth_flame(5.0, 30, 7, 4);
  const auto mel = mel_frames(600, 120, 3);
  const auto ref = drive(c, seq, mel, {0, 1}, seq.frames.size(), mel.size());
  Rng rng(1);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<int> order(300);
    for (auto& o : order) o = static_cast<int>(rng.below(2));
    const auto got = drive(c, seq, mel, order, 1 + rng.below(40), 1 + rng.below(150));
    ASSERT_EQ(got.size(), ref.size()) << trial;
    for (std::size_t i = 0; i < ref.size(); ++i) EXPECT_TRUE(same_window(got[i], ref[i])) << trial << " " << i;
  }
}

TEST(FusionEngine, WaitsForMelUnlessMelEnded) {
  PipelineConfig c = small_config();
  FusionEngine eng(c);
  const auto seq = synth_flame(1.0, 30, 1, 4);
  eng.on_flame(seq.frames);
  EXPECT_EQ(eng.readiness(), FusionEngine::Readiness::need_mel);
  EXPECT_FALSE(eng.next_window());
  EXPECT_TRUE(eng.next_window(true));
  EXPECT_THROW(eng.next_window(), Error);
  eng.commit(prediction(c, 0));
  eng.end_mel();
  EXPECT_EQ(eng.readiness(), FusionEngine::Readiness::ready);
}

TEST(FusionEngine, CommitWithoutWindowIsContractError) {
  PipelineConfig c = small_config();
  FusionEngine eng(c);
  EXPECT_THROW(eng.commit(prediction(c, 0)), Error);
}

TEST(FusionEngine, LateStartSkipsUncoveredSteps) {
  PipelineConfig c = small_config();
  auto seq = synth_flame(2.0, 30, 1, 4);
  seq.frames.erase(seq.frames.begin(), seq.frames.begin() + 20);
  FusionEngine eng(c);
  eng.on_flame(seq.frames);
  eng.end_flame();
  eng.end_mel();
  const auto w = eng.next_window();
  ASSERT_TRUE(w);
  EXPECT_EQ(eng.skipped_steps(), 3u);
  EXPECT_EQ(w->window_end_ts_us, frame_ts_us(24, 30));
}
