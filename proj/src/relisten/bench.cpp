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

#include "relisten/bench.hpp"

#include <algorithm>
#include <chrono>

#include "relisten/clock.hpp"
#include "relisten/error.hpp"
#include "relisten/io.hpp"
#include "relisten/mel.hpp"
#include "relisten/payload.hpp"
#include "relisten/transport.hpp"
#include "relisten/wav.hpp"

namespace relisten {

namespace {

using Clock = std::chrono::steady_clock;

double seconds(Clock::duration d) { return std::chrono::duration<double>(d).count(); }

MicroResult summarize(std::string name, std::vector<double> t) {
  if (t.empty()) fail(Errc::parameter, "benchmark needs at least one run");
  MicroResult r;
  r.name = std::move(name);
  r.runs = static_cast<int>(t.size());
  r.median_s = nearest_rank(t, 0.5);
  r.p95_s = nearest_rank(t, 0.95);
  r.max_s = *std::max_element(t.begin(), t.end());
  return r;
}

template <typename F>
MicroResult time_runs(std::string name, int runs, F&& fn) {
  std::vector<double> t;
  t.reserve(static_cast<std::size_t>(runs));
  for (int i = 0; i < runs; ++i) {
    const auto a = Clock::now();
    fn(i);
    t.push_back(seconds(Clock::now() - a));
  }
  return summarize(std::move(name), std::move(t));
}

}  // namespace

PipelineInputs synthetic_inputs(const PipelineConfig& cfg, double duration_s, int flame_fps) {
  PipelineInputs in;
  in.cfg = cfg;
  in.sample_rate_hz = cfg.sample_rate_hz;
  in.audio = synth_speech(duration_s, cfg.sample_rate_hz, cfg.seed);
  in.flame = synth_flame(duration_s, static_cast<std::uint32_t>(flame_fps), cfg.seed,
                         static_cast<std::uint32_t>(cfg.expr_dim));
  in.gl = build_gl(parse_mapping(example_mapping_text()), GlMode::difference, static_cast<std::size_t>(cfg.expr_dim));
  return in;
}

MicroResult bench_gl_transform(const PipelineConfig& cfg, int runs) {
  const auto gl = build_gl(parse_mapping(example_mapping_text()), GlMode::difference,
                           static_cast<std::size_t>(cfg.expr_dim));
  Rng rng(cfg.seed);
  MatrixRd F(32, cfg.expr_dim);
  for (Eigen::Index i = 0; i < F.size(); ++i) F.data()[i] = rng.uniform(-3.0, 3.0);
  double sink = 0.0;
  auto r = time_runs("gl_transform", runs, [&](int) { sink += flame_to_arkit(F, gl)(0, 0); });
  if (sink < 0.0) r.max_s = -1.0;  // keeps the product observable
  return r;
}

MicroResult bench_arkit_publish(const PipelineConfig& cfg, int runs) {
  Publisher pub("arkit", "127.0.0.1:0");
  Subscriber sub(static_cast<std::size_t>(runs) + 1);
  sub.subscribe("arkit", pub.address());
  std::vector<ArkitFrame> frames(32);
  for (std::size_t i = 0; i < frames.size(); ++i) {
    frames[i].seq = i;
    frames[i].t_ms = static_cast<std::uint64_t>(std::llround(i * 1000.0 / cfg.F_fps));
  }
  const auto payload = encode_arkit_batch(frames);
  auto r = time_runs("arkit_publish", runs, [&](int) { pub.publish(PayloadKind::arkit, payload, now_us()); });
  return r;
}

MicroResult bench_mel_batch(const PipelineConfig& cfg, int runs) {
  MelParams p;
  p.sample_rate_hz = cfg.sample_rate_hz;
  p.n_coeffs = cfg.l;
  p.dct = cfg.mel_dct;
  p.out_fps = cfg.M_fps;
  p.batch_s = cfg.T_audio_s;
  MelExtractor ex(p);
  const auto chunk = static_cast<std::size_t>(p.samples_per_batch());
  const auto audio = synth_speech(cfg.T_audio_s * 8, cfg.sample_rate_hz, cfg.seed);
  std::size_t emitted = 0;
  auto r = time_runs("mel_batch", runs, [&](int i) {
    const std::size_t lo = (static_cast<std::size_t>(i) * chunk) % (audio.size() - chunk + 1);
    emitted += ex.push(std::span<const std::int16_t>(audio.data() + lo, chunk)).size();
  });
  if (emitted != static_cast<std::size_t>(runs)) fail(Errc::contract, "mel benchmark emitted an unexpected batch count");
  return r;
}

MicroResult bench_predict_step(const PipelineConfig& cfg, int runs) {
  const auto model = PredictorModel::from_config(cfg);
  const auto in = synthetic_inputs(cfg, 4.0, cfg.F_fps);
  FusionEngine eng(cfg);
  eng.on_flame(in.flame.frames);
  eng.end_flame();
  for (const auto& b : extract_mel(in.audio, cfg.sample_rate_hz, cfg.l, cfg.F_fps, cfg.T_audio_s, cfg.mel_dct)) {
    eng.on_mel(b.frames);
  }
  eng.end_mel();
  // Advance a few steps so the window and history are fully populated.
  Rng rng(cfg.seed);
  std::optional<FusionWindow> win;
  for (int s = 0; s < 10; ++s) {
    win = eng.next_window();
    if (!win) fail(Errc::contract, "predict benchmark ran out of windows");
    eng.commit(predict_step(model, *win, rng).frames);
  }
  std::size_t acc = 0;
  auto r = time_runs("predict_step", runs, [&](int) { acc += predict_step(model, *win, rng).code_index; });
  if (acc == static_cast<std::size_t>(-1)) r.max_s = -1.0;
  return r;
}

MicroResult bench_metrics_record(int runs) {
  MetricsRegistry reg;
  return time_runs("metrics_record", runs, [&](int i) {
    const auto t = static_cast<std::uint64_t>(i);
    reg.record("bench", {t, t + 1, t + 2, t + 3, 1});
  });
}

BenchReport run_bench(const BenchOptions& opt) {
  opt.cfg.validate();
  BenchReport rep;
  const auto in = synthetic_inputs(opt.cfg, opt.duration_s, opt.flame_fps);
  PipelineOptions po;
  po.mode = RunMode::offline;
  po.keep_frames = false;
  rep.run = run_pipeline(in, po);
  rep.micro.push_back(bench_gl_transform(opt.cfg, opt.micro_runs));
  rep.micro.push_back(bench_arkit_publish(opt.cfg, opt.micro_runs));
  rep.micro.push_back(bench_mel_batch(opt.cfg, std::max(1, opt.micro_runs / 10)));
  rep.micro.push_back(bench_predict_step(opt.cfg, std::max(1, opt.micro_runs / 10)));
  rep.micro.push_back(bench_metrics_record(opt.micro_runs * 10));
  if (rep.run.latency) rep.latency = *rep.run.latency;
  for (const auto& m : rep.micro) {
    rep.latency.rows.push_back({"micro." + m.name, "processing", static_cast<std::uint64_t>(m.runs), m.median_s,
                                m.p95_s, m.max_s});
  }
  if (!opt.latency_csv.empty()) write_text(opt.latency_csv, format_csv(rep.latency));
  return rep;
}

}  // namespace relisten
