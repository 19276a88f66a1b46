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

#include "relisten/pipeline.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <thread>

#include "relisten/clock.hpp"
#include "relisten/error.hpp"
#include "relisten/frame_json.hpp"
#include "relisten/io.hpp"
#include "relisten/log.hpp"
#include "relisten/mel.hpp"
#include "relisten/payload.hpp"
#include "relisten/server.hpp"
#include "relisten/transport.hpp"
#include "relisten/wav.hpp"

namespace relisten {

namespace {

struct Aborted {};

constexpr int kPollMs = 50;
constexpr std::size_t kFastInbox = 1u << 16;

std::string topic_addr(const PipelineConfig& cfg, const std::string& topic) {
  const auto it = cfg.pub_addrs.find(topic);
  return it == cfg.pub_addrs.end() ? "127.0.0.1:0" : it->second;
}

std::string server_summary(const PipelineConfig& cfg) {
  std::string s = FrameServer::default_summary(cfg.F_fps, static_cast<std::size_t>(cfg.server_queue));
  s.pop_back();  // reopen the object
  s += ",\"F_fps\":" + std::to_string(cfg.F_fps) + ",\"w_out\":" + std::to_string(cfg.w_out) +
       ",\"expr_dim\":" + std::to_string(cfg.expr_dim) + "}";
  return s;
}

// Topic publishers and subscribers wired before any stage starts.
struct Bus {
  Publisher flame, mel, vad, listener, arkit;
  Subscriber gen_in, map_in, sink_in;

  Bus(const PipelineConfig& cfg, std::size_t inbox)
      : flame("flame", topic_addr(cfg, "flame")),
        mel("mel", topic_addr(cfg, "mel")),
        vad("vad", topic_addr(cfg, "vad")),
        listener("listener", topic_addr(cfg, "listener")),
        arkit("arkit", topic_addr(cfg, "arkit")),
        gen_in(inbox),
        map_in(inbox),
        sink_in(inbox) {
    gen_in.subscribe("flame", flame.address());
    gen_in.subscribe("mel", mel.address());
    gen_in.subscribe("vad", vad.address());
    map_in.subscribe("listener", listener.address());
    sink_in.subscribe("arkit", arkit.address());
  }

  void close_all() {
    flame.close();
    mel.close();
    vad.close();
    listener.close();
    arkit.close();
  }
};

}  // namespace

RunSummary run_pipeline(const PipelineInputs& in, const PipelineOptions& opt) {
  const PipelineConfig& cfg = in.cfg;
  cfg.validate();
  if (in.sample_rate_hz != cfg.sample_rate_hz) {
    fail(Errc::validation, "audio sample rate " + std::to_string(in.sample_rate_hz) + " Hz differs from configured " +
                               std::to_string(cfg.sample_rate_hz) + " Hz");
  }
  if (in.flame.frames.empty()) fail(Errc::validation, "FLAME input is empty");
  if (static_cast<int>(in.flame.expr_dim) != cfg.expr_dim) {
    fail(Errc::validation, "FLAME expr_dim " + std::to_string(in.flame.expr_dim) + " differs from configured " +
                               std::to_string(cfg.expr_dim));
  }
  if (static_cast<int>(in.gl.expr_dim()) != cfg.expr_dim) {
    fail(Errc::validation, "GL matrix has " + std::to_string(in.gl.expr_dim()) + " rows, expr_dim is " +
                               std::to_string(cfg.expr_dim));
  }
  PredictorModel model = in.model ? *in.model : PredictorModel::from_config(cfg);
  model.check_config(cfg);
  model.temperature = cfg.temperature;
  model.greedy = cfg.greedy;

  const bool live = opt.mode == RunMode::live;
  const std::size_t inbox = live ? static_cast<std::size_t>(cfg.inbox_capacity)
                                 : std::max<std::size_t>(kFastInbox, static_cast<std::size_t>(cfg.inbox_capacity));

  std::unique_ptr<Bus> bus;
  std::unique_ptr<FrameServer> server;
  std::ofstream dump;
  try {
    bus = std::make_unique<Bus>(cfg, inbox);
    if (live && !opt.serve_addr.empty()) {
      ServerOptions so;
      so.addr = opt.serve_addr;
      so.fps = cfg.F_fps;
      so.queue_capacity = static_cast<std::size_t>(cfg.server_queue);
      so.hello_reply = server_summary(cfg);
      server = std::make_unique<FrameServer>(so);
      server->start();
    }
    if (!opt.frames_out.empty()) {
      dump.open(opt.frames_out, std::ios::binary | std::ios::trunc);
      if (!dump) fail(Errc::io, "cannot open " + opt.frames_out + " for writing");
    }
  } catch (const Error& e) {
    fail(Errc::startup, std::string("pipeline startup failed: ") + e.what());
  }
  if (server && opt.on_server_ready) opt.on_server_ready(server->address());

  MetricsRegistry metrics;
  RunSummary sum;
  std::atomic<bool> abort{false};
  std::mutex err_mu;
  std::exception_ptr first_err;
  std::atomic<std::uint64_t> first_release_us{0};
  if (server) {
    server->set_observer([&](const ArkitFrame&, std::uint64_t t) {
      std::uint64_t expected = 0;
      first_release_us.compare_exchange_strong(expected, t);
    });
  }

  const auto check_abort = [&] {
    if (abort) throw Aborted{};
  };
  const auto launch = [&](const char* name, std::function<void()> fn) {
    return std::thread([&, name, fn = std::move(fn)] {
      try {
        fn();
      } catch (const Aborted&) {
      } catch (...) {
        {
          std::lock_guard lk(err_mu);
          if (!first_err) {
            first_err = std::current_exception();
            log::error(std::string("stage '") + name + "' failed");
          }
        }
        abort = true;
        bus->close_all();
      }
    });
  };

  const std::uint64_t start_us = now_us();
  std::vector<std::thread> threads;

  threads.push_back(launch("features", [&] {
    publish_batches(in.flame, cfg.T_video_s, bus->flame, live ? Pacing::live : Pacing::fast, start_us,
                    [&](const BatchPublished& b) {
                      metrics.record("features", {b.capture_ts_us, b.capture_ts_us, b.processed_ts_us,
                                                  b.publish_ts_us, static_cast<std::uint32_t>(b.frames)});
                      check_abort();
                    });
    bus->flame.publish(PayloadKind::flame, encode_flame_batch({}), now_us());
  }));

  threads.push_back(launch("audio", [&] {
    MelParams p;
    p.sample_rate_hz = cfg.sample_rate_hz;
    p.n_coeffs = cfg.l;
    p.dct = cfg.mel_dct;
    p.out_fps = cfg.M_fps;
    p.batch_s = cfg.T_audio_s;
    MelExtractor ex(p);
    const auto chunk = static_cast<std::size_t>(p.samples_per_batch());
    const std::size_t n_batches = (in.audio.size() + chunk - 1) / chunk;
    for (std::size_t b = 0; b < n_batches; ++b) {
      if (live) {
        std::this_thread::sleep_until(
            to_time_point(start_us + static_cast<std::uint64_t>(std::llround((b + 1) * cfg.T_audio_s * 1e6))));
      }
      check_abort();
      const std::uint64_t cap = now_us();
      const std::size_t lo = b * chunk;
      const std::size_t hi = std::min(in.audio.size(), lo + chunk);
      auto batches = ex.push(std::span<const std::int16_t>(in.audio.data() + lo, hi - lo));
      if (b + 1 == n_batches) {
        for (auto& mb : ex.flush()) batches.push_back(std::move(mb));
      }
      const std::uint64_t processed = now_us();
      std::uint32_t frames = 0;
      for (const auto& mb : batches) {
        frames += static_cast<std::uint32_t>(mb.frames.size());
        bus->mel.publish(PayloadKind::mel, encode_mel_batch(mb), cap);
      }
      metrics.record("audio", {cap, cap, processed, now_us(), std::max<std::uint32_t>(frames, 1)});
    }
    const auto segs = detect_voice(in.audio, cfg.sample_rate_hz);
    bus->vad.publish(PayloadKind::vad, encode_segments(segs), now_us());
    bus->mel.publish(PayloadKind::mel, encode_mel_batch({}), now_us());
  }));

  threads.push_back(launch("generator", [&] {
    FusionEngine eng(cfg);
    Rng rng(cfg.seed ^ 0x9E3779B97F4A7C15ull);
    std::uint64_t latest_capture = 0;
    bool mel_done = false;
    bool vad_done = false;
    std::vector<FlameFrame> out_frames;
    for (;;) {
      check_abort();
      if (eng.readiness() == FusionEngine::Readiness::finished && mel_done && vad_done) break;
      auto d = bus->gen_in.next(kPollMs);
      if (!d) {
        if (bus->gen_in.drained()) fail(Errc::transport, "generator inputs closed before end of stream");
        continue;
      }
      const auto& env = d->envelope;
      latest_capture = std::max(latest_capture, env.capture_ts_us);
      if (env.topic == "flame") {
        const auto frames = decode_flame_batch(env.payload);
        if (frames.empty()) eng.end_flame();
        eng.on_flame(frames);
        sum.flame_frames_in += frames.size();
      } else if (env.topic == "mel") {
        const auto batch = decode_mel_batch(env.payload);
        if (batch.frames.empty()) {
          eng.end_mel();
          mel_done = true;
        }
        eng.on_mel(batch.frames);
        sum.mel_frames_in += batch.frames.size();
      } else if (env.topic == "vad") {
        sum.speech = decode_segments(env.payload);
        vad_done = true;
      }
      for (;;) {
        const std::uint64_t t_start = std::max(now_us(), latest_capture);
        auto w = eng.next_window(false);
        if (!w) break;
        const std::uint64_t t_win = now_us();
        metrics.record("fusion", {latest_capture, t_start, t_win, t_win, 1});
        const auto r = predict_step(model, *w, rng);
        const std::uint64_t t_pred = now_us();
        const std::uint64_t slot0 = eng.first_slot(eng.step());
        eng.commit(r.frames);
        out_frames.clear();
        for (Eigen::Index i = 0; i < r.frames.rows(); ++i) {
          const std::span<const float> row(r.frames.data() + i * r.frames.cols(),
                                           static_cast<std::size_t>(r.frames.cols()));
          out_frames.push_back(FlameFrame::from_motion(row, static_cast<std::size_t>(cfg.expr_dim),
                                                       frame_ts_us(slot0 + static_cast<std::uint64_t>(i), cfg.F_fps)));
        }
        bus->listener.publish(PayloadKind::flame, encode_flame_batch(out_frames), latest_capture);
        metrics.record("generator", {latest_capture, t_win, t_pred, now_us(),
                                     static_cast<std::uint32_t>(r.frames.rows())});
      }
    }
    sum.steps = eng.step();
    sum.skipped_steps = eng.skipped_steps();
    sum.fusion_rejected = eng.flame_queue().counters().rejected + eng.mel_queue().counters().rejected;
    bus->listener.publish(PayloadKind::flame, encode_flame_batch({}), now_us());
  }));

  threads.push_back(launch("mapper", [&] {
    const auto fdim = static_cast<Eigen::Index>(cfg.flame_dim());
    for (;;) {
      check_abort();
      auto d = bus->map_in.next(kPollMs);
      if (!d) {
        if (bus->map_in.drained()) fail(Errc::transport, "mapper input closed before end of stream");
        continue;
      }
      const auto& env = d->envelope;
      const auto frames = decode_flame_batch(env.payload);
      if (frames.empty()) break;
      RowMatrix motion(static_cast<Eigen::Index>(frames.size()), fdim);
      for (std::size_t i = 0; i < frames.size(); ++i) {
        const auto m = frames[i].motion();
        motion.row(static_cast<Eigen::Index>(i)) = Eigen::Map<const Eigen::RowVectorXf>(m.data(), fdim);
      }
      const auto slot0 = static_cast<std::uint64_t>(
          std::llround(static_cast<double>(frames[0].capture_ts_us) * cfg.F_fps / 1e6));
      const auto ark = convert_frames(motion, in.gl, cfg.F_fps, slot0);
      const std::uint64_t t_proc = now_us();
      bus->arkit.publish(PayloadKind::arkit, encode_arkit_batch(ark), env.capture_ts_us);
      metrics.record("mapper", {env.capture_ts_us, d->recv_ts_us, t_proc, now_us(),
                                static_cast<std::uint32_t>(ark.size())});
    }
    bus->arkit.publish(PayloadKind::arkit, encode_arkit_batch({}), now_us());
  }));

  std::uint64_t first_sink_us = 0;
  threads.push_back(launch("sink", [&] {
    for (;;) {
      check_abort();
      auto d = bus->sink_in.next(kPollMs);
      if (!d) {
        if (bus->sink_in.drained()) fail(Errc::transport, "sink input closed before end of stream");
        continue;
      }
      const auto& env = d->envelope;
      auto frames = decode_arkit_batch(env.payload);
      if (frames.empty()) break;
      if (first_sink_us == 0) first_sink_us = d->recv_ts_us;
      for (const auto& f : frames) {
        for (double w : f.weights) {
          ++sum.weights_total;
          if (!(w >= 0.0 && w <= 1.0)) ++sum.weights_out_of_range;
        }
        if (dump.is_open()) dump << encode_frame(f) << '\n';
      }
      const auto n = static_cast<std::uint32_t>(frames.size());
      sum.frames_out += n;
      const std::uint64_t t_proc = now_us();
      if (opt.keep_frames) sum.frames.insert(sum.frames.end(), frames.begin(), frames.end());
      if (server) server->submit(std::move(frames));
      metrics.record("sink", {env.capture_ts_us, d->recv_ts_us, t_proc, now_us(), n});
    }
  }));

  for (auto& t : threads) t.join();

  if (server) {
    if (!first_err) {
      server->finish_input();
      if (!server->wait_drained(opt.drain_timeout_ms)) log::warn("server did not drain before timeout");
    }
    server->stop();
    for (const auto& s : server->sessions()) sum.server_dropped += s.dropped;
  }
  if (dump.is_open()) dump.close();
  if (first_err) std::rethrow_exception(first_err);

  sum.transport_dropped =
      bus->gen_in.stats().dropped + bus->map_in.stats().dropped + bus->sink_in.stats().dropped;
  const std::uint64_t first = server ? first_release_us.load() : first_sink_us;
  if (first >= start_us && first != 0) sum.first_output_s = static_cast<double>(first - start_us) / 1e6;
  sum.latency = metrics.report();
  sum.metrics_rejected = metrics.rejected_total();
  if (!opt.latency_csv.empty()) {
    write_text(opt.latency_csv,
               sum.latency ? format_csv(*sum.latency) : std::string("stage,metric,count,p50,p95,max\n"));
  }
  return sum;
}

RunSummary run_pipeline(const RunSpec& spec) {
  const auto need = [](const std::string& path, const char* what) {
    if (path.empty()) fail(Errc::validation, std::string("missing ") + what + " path");
    if (!std::filesystem::is_regular_file(path)) fail(Errc::io, std::string(what) + " file not found: " + path);
  };
  need(spec.wav_path, "wav");
  need(spec.flame_path, "flame");
  need(spec.gl_path, "gl");
  if (!spec.weights_path.empty()) need(spec.weights_path, "weights");
  if (!spec.config && !spec.config_path.empty()) need(spec.config_path, "config");

  PipelineInputs in;
  if (spec.config) in.cfg = *spec.config;
  else if (!spec.config_path.empty()) in.cfg = load_config(spec.config_path);
  if (spec.seed) in.cfg.seed = *spec.seed;
  const auto wav = read_wav(spec.wav_path);
  in.audio = wav.samples;
  in.sample_rate_hz = wav.sample_rate_hz;
  in.flame = read_flame(spec.flame_path);
  in.gl = load_gl(spec.gl_path);
  if (!spec.weights_path.empty()) in.model = load_model(spec.weights_path);

  PipelineOptions opt;
  opt.mode = spec.mode;
  opt.frames_out = spec.frames_out;
  opt.latency_csv = spec.latency_csv;
  opt.keep_frames = false;
  opt.serve_addr = spec.serve_addr;
  return run_pipeline(in, opt);
}

std::string format_summary(const RunSummary& s) {
  char buf[1024];
  std::snprintf(buf, sizeof buf,
                "flame_frames_in=%llu\nmel_frames_in=%llu\nsteps=%llu\nframes_out=%llu\n"
                "transport_dropped=%llu\nfusion_rejected=%llu\nserver_dropped=%llu\n"
                "weights_out_of_range=%llu/%llu\nspeech_segments=%zu\nfirst_output_s=%.3f\n",
                static_cast<unsigned long long>(s.flame_frames_in), static_cast<unsigned long long>(s.mel_frames_in),
                static_cast<unsigned long long>(s.steps), static_cast<unsigned long long>(s.frames_out),
                static_cast<unsigned long long>(s.transport_dropped),
                static_cast<unsigned long long>(s.fusion_rejected), static_cast<unsigned long long>(s.server_dropped),
                static_cast<unsigned long long>(s.weights_out_of_range),
                static_cast<unsigned long long>(s.weights_total), s.speech.size(), s.first_output_s);
  return buf;
}

}  // namespace relisten
