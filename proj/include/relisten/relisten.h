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

#ifndef RELISTEN_RELISTEN_H_
#define RELISTEN_RELISTEN_H_

#include <stddef.h>
#include <stdint.h>

#if defined(RELISTEN_BUILDING_LIBRARY)
#define RL_API __attribute__((visibility("default")))
#else
#define RL_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum rl_status {
  RL_OK = 0,
  RL_ERR_PARSE = 1,
  RL_ERR_CONSTRAINT = 2,
  RL_ERR_FORMAT = 3,
  RL_ERR_CONTRACT = 4,
  RL_ERR_NUMERIC = 5,
  RL_ERR_TRANSPORT = 6,
  RL_ERR_SIZE = 7,
  RL_ERR_IO = 8,
  RL_ERR_VALIDATION = 9,
  RL_ERR_PARAMETER = 10,
  RL_ERR_STARTUP = 11,
  RL_ERR_EMPTY = 12,
  RL_ERR_TIMEOUT = 13,
  RL_ERR_INTERNAL = 100
} rl_status;

RL_API const char* rl_version(void);
RL_API const char* rl_status_name(rl_status status);
/* Message of the last failing call on this thread; "" after success. */
RL_API const char* rl_last_error(void);

/* ---- configuration ---------------------------------------------------- */

typedef struct rl_config rl_config;

RL_API rl_status rl_config_default(rl_config** out);
RL_API rl_status rl_config_load(const char* path, rl_config** out);
RL_API rl_status rl_config_parse(const char* text, rl_config** out);
RL_API rl_status rl_config_save(const rl_config* cfg, const char* path);
/* Applies key=value and re-validates; the config is unchanged on error. */
RL_API rl_status rl_config_set(rl_config* cfg, const char* key, const char* value);
/* Writes the NUL-terminated value into buf when it fits; *len receives the
   value length without the terminator. RL_ERR_SIZE when cap is too small. */
RL_API rl_status rl_config_get(const rl_config* cfg, const char* key, char* buf, size_t cap, size_t* len);
RL_API void rl_config_free(rl_config* cfg);

/* ---- retargeting ------------------------------------------------------ */

typedef struct rl_gl rl_gl;

enum { RL_GL_DIFFERENCE = 0, RL_GL_POSITIVE_ONLY = 1 };

/* map_path NULL uses the built-in example table. */
RL_API rl_status rl_gl_build(const char* map_path, int mode, uint32_t expr_dim, rl_gl** out);
RL_API rl_status rl_gl_load(const char* path, rl_gl** out);
RL_API rl_status rl_gl_save(const rl_gl* gl, const char* path);
RL_API uint32_t rl_gl_rows(const rl_gl* gl);
/* frames: n x rl_gl_rows row-major; out: n x 52 row-major, clamped to [0,1]. */
RL_API rl_status rl_gl_transform(const rl_gl* gl, const double* frames, size_t n, double* out);
RL_API void rl_gl_free(rl_gl* gl);

/* ---- file-level operations -------------------------------------------- */

RL_API rl_status rl_synth_flame_file(const char* path, double duration_s, uint32_t fps, uint32_t expr_dim,
                                     uint64_t seed);
RL_API rl_status rl_synth_wav_file(const char* path, double duration_s, int sample_rate_hz, uint64_t seed);
/* dct: 1 cepstra, 0 log-mel bands, -1 take mel.dct from cfg. cfg may be NULL. */
RL_API rl_status rl_extract_mel_file(const rl_config* cfg, const char* wav_path, const char* out_path, int dct,
                                     uint32_t* batches, uint32_t* frames);
/* Trains the codebook of a predictor on sliding w_out-frame chunks of a FLAME
   file and writes the weight file. cfg may be NULL. */
RL_API rl_status rl_train_codebook_file(const rl_config* cfg, const char* flame_path, const char* out_path,
                                        int max_iters, double* final_error, int* iterations);
RL_API rl_status rl_eval_l2_files(const char* pred_path, const char* gt_path, double* loss);
/* Publishes a FLAME file on topic "flame" at addr after waiting up to
   wait_ms for min_subscribers subscribers. */
RL_API rl_status rl_play_flame(const char* flame_path, const char* addr, double T_video_s, int live,
                               uint32_t min_subscribers, int wait_ms, uint32_t* batches);

/* ---- pipeline --------------------------------------------------------- */

typedef struct rl_run_spec {
  int live;                /* 0 offline fast, 1 live-paced */
  const char* wav_path;
  const char* flame_path;
  const char* gl_path;
  const char* weights_path; /* optional */
  const char* config_path;  /* optional, ignored when a config handle is passed */
  const char* frames_out;   /* optional JSON-lines dump */
  const char* latency_csv;  /* optional */
  const char* serve_addr;   /* optional, live mode */
  int has_seed;
  uint64_t seed;
} rl_run_spec;

typedef struct rl_run_summary {
  uint64_t flame_frames_in;
  uint64_t mel_frames_in;
  uint64_t steps;
  uint64_t frames_out;
  uint64_t transport_dropped;
  uint64_t fusion_rejected;
  uint64_t server_dropped;
  uint64_t weights_total;
  uint64_t weights_out_of_range;
  uint32_t speech_segments;
  uint32_t latency_stages;
  double first_output_s;
} rl_run_summary;

RL_API void rl_run_spec_init(rl_run_spec* spec);
/* cfg may be NULL. */
RL_API rl_status rl_pipeline_run(const rl_config* cfg, const rl_run_spec* spec, rl_run_summary* out);

/* Live pipeline over synthetic input of duration_s (or the given files),
   streaming frames to WebSocket clients at addr. */
RL_API rl_status rl_serve(const rl_config* cfg, const char* addr, int fps, double duration_s,
                          const char* flame_path, const char* wav_path, rl_run_summary* out);

typedef struct rl_bench_summary {
  rl_run_summary run;
  double gl_median_s;
  double publish_median_s;
  double mel_median_s;
  double predict_median_s;
  double record_median_s;
} rl_bench_summary;

RL_API rl_status rl_bench_run(const rl_config* cfg, double duration_s, int flame_fps, int micro_runs,
                              const char* latency_csv, rl_bench_summary* out);

#ifdef __cplusplus
}
#endif

#endif /* RELISTEN_RELISTEN_H_ */
