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

#include <charconv>
#include <cstdio>
#include <string>

#include <CLI11.hpp>

#include "relisten/relisten.h"

namespace {

struct Failure {
  rl_status status;
};

void check(rl_status s) {
  if (s != RL_OK) throw Failure{s};
}

std::string shortest(double v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  std::string s(buf, r.ptr);
  if (s.find_first_of(".eEn") == std::string::npos) s += ".0";
  return s;
}

void print_summary(const rl_run_summary& s) {
  std::printf("flame_frames_in=%llu\nmel_frames_in=%llu\nsteps=%llu\nframes_out=%llu\n",
              static_cast<unsigned long long>(s.flame_frames_in), static_cast<unsigned long long>(s.mel_frames_in),
              static_cast<unsigned long long>(s.steps), static_cast<unsigned long long>(s.frames_out));
  std::printf("transport_dropped=%llu\nfusion_rejected=%llu\nserver_dropped=%llu\n",
              static_cast<unsigned long long>(s.transport_dropped), static_cast<unsigned long long>(s.fusion_rejected),
              static_cast<unsigned long long>(s.server_dropped));
  std::printf("weights_out_of_range=%llu/%llu\nspeech_segments=%u\nlatency_stages=%u\nfirst_output_s=%.3f\n",
              static_cast<unsigned long long>(s.weights_out_of_range),
              static_cast<unsigned long long>(s.weights_total), s.speech_segments, s.latency_stages,
              s.first_output_s);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"relisten: real-time listener behavior pipeline"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path;
  long long seed = -1;
  bool fast = false;
  app.add_option("--config", config_path, "pipeline config file (key=value)")->check(CLI::ExistingFile);
  app.add_option("--seed", seed, "override the configured seed")->check(CLI::NonNegativeNumber);
  app.add_flag("--fast", fast, "publish inputs back to back instead of at real-time pace");

  // gen-synthetic
  auto* gen = app.add_subcommand("gen-synthetic", "write synthetic FLAME and WAV inputs");
  std::string gen_flame = "speaker.flm", gen_wav = "speaker.wav";
  double gen_duration = 10.0;
  unsigned gen_fps = 30;
  gen->add_option("--flame", gen_flame, "FLAME output path");
  gen->add_option("--wav", gen_wav, "WAV output path");
  gen->add_option("--duration", gen_duration, "seconds")->check(CLI::PositiveNumber);
  gen->add_option("--fps", gen_fps, "FLAME frame rate")->check(CLI::PositiveNumber);

  // extract-mel
  auto* mel = app.add_subcommand("extract-mel", "compute mel features of a WAV file");
  std::string mel_in, mel_out;
  bool mel_no_dct = false;
  mel->add_option("--in", mel_in, "16 kHz PCM16 WAV")->required()->check(CLI::ExistingFile);
  mel->add_option("--out", mel_out, "mel batch file")->required();
  mel->add_flag("--no-dct", mel_no_dct, "emit log-mel bands instead of cepstra");

  // build-gl
  auto* gl = app.add_subcommand("build-gl", "build the FLAME-to-ARKit matrix from a mapping table");
  std::string gl_map, gl_out;
  std::string gl_mode = "difference";
  gl->add_option("--map", gl_map, "mapping table (default: built-in example)")->check(CLI::ExistingFile);
  gl->add_option("--out", gl_out, "GL output path")->required();
  gl->add_option("--mode", gl_mode, "difference or positive_only")
      ->check(CLI::IsMember({"difference", "positive_only"}));

  // train-codebook
  auto* tc = app.add_subcommand("train-codebook", "fit the codebook on a FLAME file and write model weights");
  std::string tc_flame, tc_out;
  int tc_iters = 50;
  tc->add_option("--flame", tc_flame, "training FLAME file")->required()->check(CLI::ExistingFile);
  tc->add_option("--out", tc_out, "weight file")->required();
  tc->add_option("--iters", tc_iters, "maximum Lloyd iterations")->check(CLI::PositiveNumber);

  // eval-l2
  auto* l2 = app.add_subcommand("eval-l2", "L2 loss between two FLAME files");
  std::string l2_pred, l2_gt;
  l2->add_option("pred", l2_pred, "predicted FLAME file")->required()->check(CLI::ExistingFile);
  l2->add_option("gt", l2_gt, "ground-truth FLAME file")->required()->check(CLI::ExistingFile);

  // play-flame
  auto* play = app.add_subcommand("play-flame", "publish a FLAME file on topic 'flame'");
  std::string play_in, play_addr = "127.0.0.1:7001";
  double play_batch = 1.0;
  unsigned play_subs = 1;
  int play_wait = 10000;
  play->add_option("--in", play_in, "FLAME file")->required()->check(CLI::ExistingFile);
  play->add_option("--addr", play_addr, "publisher host:port");
  play->add_option("--batch", play_batch, "batch length in seconds")->check(CLI::PositiveNumber);
  play->add_option("--subscribers", play_subs, "subscribers to wait for");
  play->add_option("--wait-ms", play_wait, "subscriber wait timeout");

  // serve
  auto* serve = app.add_subcommand("serve", "run the live pipeline and stream frames over WebSocket");
  std::string serve_addr = "127.0.0.1:9001", serve_flame, serve_wav;
  int serve_fps = 30;
  double serve_duration = 30.0;
  serve->add_option("--addr", serve_addr, "listen host:port");
  serve->add_option("--fps", serve_fps, "animation frame rate")->check(CLI::PositiveNumber);
  serve->add_option("--duration", serve_duration, "synthetic input length in seconds")->check(CLI::PositiveNumber);
  serve->add_option("--flame", serve_flame, "FLAME input instead of synthetic")->check(CLI::ExistingFile);
  serve->add_option("--wav", serve_wav, "WAV input instead of synthetic")->check(CLI::ExistingFile);

  // bench
  auto* bench = app.add_subcommand("bench", "offline synthetic run plus micro-benchmarks");
  std::string bench_out = "latency.csv";
  double bench_duration = 10.0;
  int bench_fps = 30, bench_runs = 1000;
  bench->add_option("--out", bench_out, "latency CSV path");
  bench->add_option("--duration", bench_duration, "synthetic input seconds")->check(CLI::PositiveNumber);
  bench->add_option("--fps", bench_fps, "FLAME input frame rate")->check(CLI::PositiveNumber);
  bench->add_option("--runs", bench_runs, "micro-benchmark repetitions")->check(CLI::PositiveNumber);

  // run
  auto* run = app.add_subcommand("run", "run the pipeline on files");
  std::string run_wav, run_flame, run_gl, run_weights, run_frames, run_csv, run_serve;
  run->add_option("--wav", run_wav, "speaker audio")->required();
  run->add_option("--flame", run_flame, "speaker FLAME")->required();
  run->add_option("--gl", run_gl, "GL matrix")->required();
  run->add_option("--weights", run_weights, "model weights (default: seeded)");
  run->add_option("--frames-out", run_frames, "JSON-lines frame dump");
  run->add_option("--latency-csv", run_csv, "latency CSV");
  run->add_option("--serve", run_serve, "stream frames on host:port (live mode)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  rl_config* cfg = nullptr;
  try {
    check(config_path.empty() ? rl_config_default(&cfg) : rl_config_load(config_path.c_str(), &cfg));
    if (seed >= 0) check(rl_config_set(cfg, "seed", std::to_string(seed).c_str()));
    const auto get = [&](const char* key) {
      char buf[256];
      size_t len = 0;
      check(rl_config_get(cfg, key, buf, sizeof buf, &len));
      return std::string(buf);
    };
    const auto cfg_seed = static_cast<uint64_t>(std::stoull(get("seed")));

    if (*gen) {
      const auto expr_dim = static_cast<uint32_t>(std::stoul(get("expr_dim")));
      const int rate = std::stoi(get("sample_rate_hz"));
      check(rl_synth_flame_file(gen_flame.c_str(), gen_duration, gen_fps, expr_dim, cfg_seed));
      check(rl_synth_wav_file(gen_wav.c_str(), gen_duration, rate, cfg_seed));
      std::printf("wrote %s and %s\n", gen_flame.c_str(), gen_wav.c_str());
    } else if (*mel) {
      uint32_t batches = 0, frames = 0;
      check(rl_extract_mel_file(cfg, mel_in.c_str(), mel_out.c_str(), mel_no_dct ? 0 : -1, &batches, &frames));
      std::printf("wrote %s: %u batches, %u frames\n", mel_out.c_str(), batches, frames);
    } else if (*gl) {
      rl_gl* g = nullptr;
      const auto expr_dim = static_cast<uint32_t>(std::stoul(get("expr_dim")));
      check(rl_gl_build(gl_map.empty() ? nullptr : gl_map.c_str(),
                        gl_mode == "difference" ? RL_GL_DIFFERENCE : RL_GL_POSITIVE_ONLY, expr_dim, &g));
      const rl_status s = rl_gl_save(g, gl_out.c_str());
      const uint32_t rows = rl_gl_rows(g);
      rl_gl_free(g);
      check(s);
      std::printf("wrote %s: %u x 52\n", gl_out.c_str(), rows);
    } else if (*tc) {
      double err = 0.0;
      int iters = 0;
      check(rl_train_codebook_file(cfg, tc_flame.c_str(), tc_out.c_str(), tc_iters, &err, &iters));
      std::printf("wrote %s: %d iterations, quantization error %s\n", tc_out.c_str(), iters, shortest(err).c_str());
    } else if (*l2) {
      double loss = 0.0;
      check(rl_eval_l2_files(l2_pred.c_str(), l2_gt.c_str(), &loss));
      std::printf("%s\n", shortest(loss).c_str());
    } else if (*play) {
      uint32_t batches = 0;
      check(rl_play_flame(play_in.c_str(), play_addr.c_str(), play_batch, fast ? 0 : 1, play_subs, play_wait,
                          &batches));
      std::printf("published %u batches\n", batches);
    } else if (*serve) {
      rl_run_summary s{};
      check(rl_serve(cfg, serve_addr.c_str(), serve_fps, serve_duration, serve_flame.empty() ? nullptr : serve_flame.c_str(),
                     serve_wav.empty() ? nullptr : serve_wav.c_str(), &s));
      print_summary(s);
    } else if (*bench) {
      rl_bench_summary b{};
      check(rl_bench_run(cfg, bench_duration, bench_fps, bench_runs, bench_out.c_str(), &b));
      print_summary(b.run);
      std::printf("gl_transform_median_s=%.6f\npublish_median_s=%.6f\nmel_batch_median_s=%.6f\n"
                  "predict_step_median_s=%.6f\nmetrics_record_median_s=%.9f\nlatency_csv=%s\n",
                  b.gl_median_s, b.publish_median_s, b.mel_median_s, b.predict_median_s, b.record_median_s,
                  bench_out.c_str());
    } else if (*run) {
      rl_run_spec spec;
      rl_run_spec_init(&spec);
      spec.live = fast ? 0 : 1;
      spec.wav_path = run_wav.c_str();
      spec.flame_path = run_flame.c_str();
      spec.gl_path = run_gl.c_str();
      spec.weights_path = run_weights.empty() ? nullptr : run_weights.c_str();
      spec.frames_out = run_frames.empty() ? nullptr : run_frames.c_str();
      spec.latency_csv = run_csv.empty() ? nullptr : run_csv.c_str();
      spec.serve_addr = run_serve.empty() ? nullptr : run_serve.c_str();
      rl_run_summary s{};
      check(rl_pipeline_run(cfg, &spec, &s));
      print_summary(s);
      if (!run_csv.empty()) std::printf("latency_csv=%s\n", run_csv.c_str());
    }
  } catch (const Failure& f) {
    std::fprintf(stderr, "error (%s): %s\n", rl_status_name(f.status), rl_last_error());
    rl_config_free(cfg);
    return 1;
  }
  rl_config_free(cfg);
  return 0;
}
