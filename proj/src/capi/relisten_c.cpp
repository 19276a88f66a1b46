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

#include "relisten/relisten.h"

#include <cstring>
#include <mutex>
#include <new>
#include <string>

#include "relisten/bench.hpp"
#include "relisten/clock.hpp"
#include "relisten/codebook.hpp"
#include "relisten/config.hpp"
#include "relisten/error.hpp"
#include "relisten/features.hpp"
#include "relisten/log.hpp"
#include "relisten/mapper.hpp"
#include "relisten/mel.hpp"
#include "relisten/pipeline.hpp"
#include "relisten/predictor.hpp"
#include "relisten/transport.hpp"
#include "relisten/wav.hpp"

struct rl_config {
  relisten::PipelineConfig cfg;
};

struct rl_gl {
  relisten::GLMatrix gl;
};

namespace {

thread_local std::string g_last_error;

template <typename F>
rl_status guard(F&& fn) noexcept {
  static std::once_flag once;
  try {
    std::call_once(once, [] { relisten::log::init_from_env(); });
    fn();
    g_last_error.clear();
    return RL_OK;
  } catch (const relisten::Error& e) {
    g_last_error = e.what();
    return static_cast<rl_status>(static_cast<int>(e.code()));
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
  } catch (const std::exception& e) {
    g_last_error = e.what();
  } catch (...) {
    g_last_error = "unknown error";
  }
  return RL_ERR_INTERNAL;
}

void need(const void* p, const char* what) {
  if (p == nullptr) relisten::fail(relisten::Errc::parameter, std::string(what) + " must not be NULL");
}

relisten::PipelineConfig config_or_default(const rl_config* cfg) { return cfg ? cfg->cfg : relisten::PipelineConfig{}; }

void fill_summary(const relisten::RunSummary& s, rl_run_summary* out) {
  if (out == nullptr) return;
  *out = rl_run_summary{};
  out->flame_frames_in = s.flame_frames_in;
  out->mel_frames_in = s.mel_frames_in;
  out->steps = s.steps;
  out->frames_out = s.frames_out;
  out->transport_dropped = s.transport_dropped;
  out->fusion_rejected = s.fusion_rejected;
  out->server_dropped = s.server_dropped;
  out->weights_total = s.weights_total;
  out->weights_out_of_range = s.weights_out_of_range;
  out->speech_segments = static_cast<uint32_t>(s.speech.size());
  out->latency_stages = s.latency ? static_cast<uint32_t>(s.latency->stages().size()) : 0;
  out->first_output_s = s.first_output_s;
}

std::string str_or_empty(const char* s) { return s ? s : ""; }

}  // namespace

extern "C" {

const char* rl_version(void) { return "0.1.0"; }

const char* rl_status_name(rl_status status) {
  if (status == RL_OK) return "ok";
  if (status == RL_ERR_INTERNAL) return "internal";
  if (status >= RL_ERR_PARSE && status <= RL_ERR_TIMEOUT) {
    return relisten::errc_name(static_cast<relisten::Errc>(static_cast<int>(status)));
  }
  return "unknown";
}

const char* rl_last_error(void) { return g_last_error.c_str(); }

rl_status rl_config_default(rl_config** out) {
  return guard([&] {
    need(out, "out");
    *out = new rl_config{};
  });
}

rl_status rl_config_load(const char* path, rl_config** out) {
  return guard([&] {
    need(path, "path");
    need(out, "out");
    auto c = relisten::load_config(path);
    *out = new rl_config{std::move(c)};
  });
}

rl_status rl_config_parse(const char* text, rl_config** out) {
  return guard([&] {
    need(text, "text");
    need(out, "out");
    auto c = relisten::parse_config(text);
    *out = new rl_config{std::move(c)};
  });
}

rl_status rl_config_save(const rl_config* cfg, const char* path) {
  return guard([&] {
    need(cfg, "cfg");
    need(path, "path");
    relisten::save_config(cfg->cfg, path);
  });
}

rl_status rl_config_set(rl_config* cfg, const char* key, const char* value) {
  return guard([&] {
    need(cfg, "cfg");
    need(key, "key");
    need(value, "value");
    auto next = cfg->cfg;
    relisten::set_config_value(next, key, value);
    next.validate();
    cfg->cfg = std::move(next);
  });
}

rl_status rl_config_get(const rl_config* cfg, const char* key, char* buf, size_t cap, size_t* len) {
  return guard([&] {
    need(cfg, "cfg");
    need(key, "key");
    const std::string v = relisten::get_config_value(cfg->cfg, key);
    if (len) *len = v.size();
    if (buf == nullptr || cap < v.size() + 1) {
      relisten::fail(relisten::Errc::size, "buffer too small for value of '" + std::string(key) + "'");
    }
    std::memcpy(buf, v.c_str(), v.size() + 1);
  });
}

void rl_config_free(rl_config* cfg) { delete cfg; }

rl_status rl_gl_build(const char* map_path, int mode, uint32_t expr_dim, rl_gl** out) {
  return guard([&] {
    need(out, "out");
    if (mode != RL_GL_DIFFERENCE && mode != RL_GL_POSITIVE_ONLY) {
      relisten::fail(relisten::Errc::parameter, "unknown GL mode " + std::to_string(mode));
    }
    if (expr_dim == 0) relisten::fail(relisten::Errc::parameter, "expr_dim must be positive");
    const auto map = map_path ? relisten::load_mapping(map_path) : relisten::parse_mapping(relisten::example_mapping_text());
    *out = new rl_gl{relisten::build_gl(map, static_cast<relisten::GlMode>(mode), expr_dim)};
  });
}

rl_status rl_gl_load(const char* path, rl_gl** out) {
  return guard([&] {
    need(path, "path");
    need(out, "out");
    *out = new rl_gl{relisten::load_gl(path)};
  });
}

rl_status rl_gl_save(const rl_gl* gl, const char* path) {
  return guard([&] {
    need(gl, "gl");
    need(path, "path");
    relisten::save_gl(gl->gl, path);
  });
}

uint32_t rl_gl_rows(const rl_gl* gl) { return gl ? static_cast<uint32_t>(gl->gl.expr_dim()) : 0; }

rl_status rl_gl_transform(const rl_gl* gl, const double* frames, size_t n, double* out) {
  return guard([&] {
    need(gl, "gl");
    if (n == 0) return;
    need(frames, "frames");
    need(out, "out");
    const auto cols = static_cast<Eigen::Index>(gl->gl.expr_dim());
    const Eigen::Map<const relisten::MatrixRd> F(frames, static_cast<Eigen::Index>(n), cols);
    Eigen::Map<relisten::MatrixRd>(out, static_cast<Eigen::Index>(n), 52) = relisten::flame_to_arkit(F, gl->gl);
  });
}

void rl_gl_free(rl_gl* gl) { delete gl; }

rl_status rl_synth_flame_file(const char* path, double duration_s, uint32_t fps, uint32_t expr_dim, uint64_t seed) {
  return guard([&] {
    need(path, "path");
    if (!(duration_s > 0.0) || fps == 0 || expr_dim == 0) {
      relisten::fail(relisten::Errc::parameter, "duration, fps and expr_dim must be positive");
    }
    relisten::write_flame(path, relisten::synth_flame(duration_s, fps, seed, expr_dim));
  });
}

rl_status rl_synth_wav_file(const char* path, double duration_s, int sample_rate_hz, uint64_t seed) {
  return guard([&] {
    need(path, "path");
    if (!(duration_s > 0.0) || sample_rate_hz <= 0) {
      relisten::fail(relisten::Errc::parameter, "duration and sample rate must be positive");
    }
    const auto s = relisten::synth_speech(duration_s, sample_rate_hz, seed);
    relisten::write_wav(path, s, sample_rate_hz);
  });
}

rl_status rl_extract_mel_file(const rl_config* cfg, const char* wav_path, const char* out_path, int dct,
                              uint32_t* batches, uint32_t* frames) {
  return guard([&] {
    need(wav_path, "wav_path");
    need(out_path, "out_path");
    const auto c = config_or_default(cfg);
    const auto wav = relisten::read_wav(wav_path);
    relisten::MelParams p;
    p.sample_rate_hz = wav.sample_rate_hz;
    p.n_coeffs = c.l;
    p.dct = dct < 0 ? c.mel_dct : dct != 0;
    p.out_fps = c.M_fps;
    p.batch_s = c.T_audio_s;
    relisten::MelExtractor ex(p);
    auto out = ex.push(wav.samples);
    for (auto& b : ex.flush()) out.push_back(std::move(b));
    relisten::write_mel_file(out_path, out);
    if (batches) *batches = static_cast<uint32_t>(out.size());
    if (frames) {
      std::size_t n = 0;
      for (const auto& b : out) n += b.frames.size();
      *frames = static_cast<uint32_t>(n);
    }
  });
}

rl_status rl_train_codebook_file(const rl_config* cfg, const char* flame_path, const char* out_path, int max_iters,
                                 double* final_error, int* iterations) {
  return guard([&] {
    need(flame_path, "flame_path");
    need(out_path, "out_path");
    auto c = config_or_default(cfg);
    const auto seq = relisten::read_flame(flame_path);
    if (static_cast<int>(seq.expr_dim) != c.expr_dim) {
      relisten::fail(relisten::Errc::validation, "FLAME file expr_dim " + std::to_string(seq.expr_dim) +
                                                     " differs from configured " + std::to_string(c.expr_dim));
    }
    relisten::RowMatrix motion(static_cast<Eigen::Index>(seq.frames.size()), c.flame_dim());
    for (std::size_t i = 0; i < seq.frames.size(); ++i) {
      const auto m = seq.frames[i].motion();
      motion.row(static_cast<Eigen::Index>(i)) = Eigen::Map<const Eigen::RowVectorXf>(m.data(), c.flame_dim());
    }
    auto model = relisten::PredictorModel::from_config(c);
    const auto chunks = relisten::motion_chunks(motion, static_cast<std::size_t>(c.w_out));
    const relisten::RowMatrix latents = chunks * model.encoder.transpose();
    const auto res = relisten::train_codebook(latents, static_cast<std::size_t>(c.K), max_iters, c.seed);
    model.codebook = res.codebook;
    relisten::save_model(model, out_path);
    if (final_error) *final_error = res.errors.empty() ? 0.0 : res.errors.back();
    if (iterations) *iterations = res.iterations;
  });
}

rl_status rl_eval_l2_files(const char* pred_path, const char* gt_path, double* loss) {
  return guard([&] {
    need(pred_path, "pred_path");
    need(gt_path, "gt_path");
    need(loss, "loss");
    const auto a = relisten::read_flame(pred_path);
    const auto b = relisten::read_flame(gt_path);
    const auto to_matrix = [](const relisten::FlameSequence& s) {
      relisten::RowMatrix m(static_cast<Eigen::Index>(s.frames.size()), static_cast<Eigen::Index>(s.expr_dim + 6));
      for (std::size_t i = 0; i < s.frames.size(); ++i) {
        const auto v = s.frames[i].motion();
        m.row(static_cast<Eigen::Index>(i)) = Eigen::Map<const Eigen::RowVectorXf>(v.data(), m.cols());
      }
      return m;
    };
    *loss = relisten::l2_loss(to_matrix(a), to_matrix(b));
  });
}

rl_status rl_play_flame(const char* flame_path, const char* addr, double T_video_s, int live, uint32_t min_subscribers,
                        int wait_ms, uint32_t* batches) {
  return guard([&] {
    need(flame_path, "flame_path");
    need(addr, "addr");
    if (!(T_video_s > 0.0)) relisten::fail(relisten::Errc::parameter, "T_video_s must be positive");
    const auto seq = relisten::read_flame(flame_path);
    relisten::Publisher pub("flame", addr);
    if (min_subscribers > 0 && !pub.wait_for_subscribers(min_subscribers, wait_ms)) {
      relisten::fail(relisten::Errc::timeout, "no subscriber connected to " + pub.address());
    }
    const auto n = relisten::publish_batches(seq, T_video_s, pub, live ? relisten::Pacing::live : relisten::Pacing::fast,
                                             relisten::now_us());
    if (batches) *batches = static_cast<uint32_t>(n);
  });
}

void rl_run_spec_init(rl_run_spec* spec) {
  if (spec) *spec = rl_run_spec{};
}

rl_status rl_pipeline_run(const rl_config* cfg, const rl_run_spec* spec, rl_run_summary* out) {
  return guard([&] {
    need(spec, "spec");
    relisten::RunSpec rs;
    rs.mode = spec->live ? relisten::RunMode::live : relisten::RunMode::offline;
    rs.wav_path = str_or_empty(spec->wav_path);
    rs.flame_path = str_or_empty(spec->flame_path);
    rs.gl_path = str_or_empty(spec->gl_path);
    rs.weights_path = str_or_empty(spec->weights_path);
    rs.config_path = cfg ? "" : str_or_empty(spec->config_path);
    rs.frames_out = str_or_empty(spec->frames_out);
    rs.latency_csv = str_or_empty(spec->latency_csv);
    rs.serve_addr = str_or_empty(spec->serve_addr);
    if (spec->has_seed) rs.seed = spec->seed;
    if (cfg) rs.config = cfg->cfg;
    fill_summary(relisten::run_pipeline(rs), out);
  });
}

rl_status rl_serve(const rl_config* cfg, const char* addr, int fps, double duration_s, const char* flame_path,
                   const char* wav_path, rl_run_summary* out) {
  return guard([&] {
    need(addr, "addr");
    auto c = config_or_default(cfg);
    if (fps > 0 && fps != c.F_fps) {
      c.F_fps = fps;
      if (!c.M_fps_override) c.M_fps = 4 * fps;
    }
    c.validate();
    if (!(duration_s > 0.0) && (!flame_path || !wav_path)) {
      relisten::fail(relisten::Errc::parameter, "serve needs a positive duration or both input files");
    }
    auto in = relisten::synthetic_inputs(c, duration_s > 0.0 ? duration_s : 1.0, c.F_fps);
    if (flame_path) in.flame = relisten::read_flame(flame_path);
    if (wav_path) {
      const auto w = relisten::read_wav(wav_path);
      in.audio = w.samples;
      in.sample_rate_hz = w.sample_rate_hz;
    }
    relisten::PipelineOptions opt;
    opt.mode = relisten::RunMode::live;
    opt.serve_addr = addr;
    opt.keep_frames = false;
    opt.on_server_ready = [](const std::string& a) { relisten::log::info("serving frames on ws://" + a); };
    fill_summary(relisten::run_pipeline(in, opt), out);
  });
}

rl_status rl_bench_run(const rl_config* cfg, double duration_s, int flame_fps, int micro_runs, const char* latency_csv,
                       rl_bench_summary* out) {
  return guard([&] {
    relisten::BenchOptions opt;
    opt.cfg = config_or_default(cfg);
    if (duration_s > 0.0) opt.duration_s = duration_s;
    if (flame_fps > 0) opt.flame_fps = flame_fps;
    if (micro_runs > 0) opt.micro_runs = micro_runs;
    opt.latency_csv = str_or_empty(latency_csv);
    const auto rep = relisten::run_bench(opt);
    if (out == nullptr) return;
    *out = rl_bench_summary{};
    fill_summary(rep.run, &out->run);
    for (const auto& m : rep.micro) {
      if (m.name == "gl_transform") out->gl_median_s = m.median_s;
      if (m.name == "arkit_publish") out->publish_median_s = m.median_s;
      if (m.name == "mel_batch") out->mel_median_s = m.median_s;
      if (m.name == "predict_step") out->predict_median_s = m.median_s;
      if (m.name == "metrics_record") out->record_median_s = m.median_s;
    }
  });
}

}  // extern "C"
