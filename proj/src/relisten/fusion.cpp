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

#include "relisten/fusion.hpp"

#include <algorithm>
#include <cmath>

#include "relisten/error.hpp"
#include "relisten/mel.hpp"
#include "relisten/payload.hpp"

namespace relisten {

ModalityQueue::ModalityQueue(PayloadKind kind, std::size_t capacity, std::size_t dim,
                             std::uint64_t frame_period_us)
    : kind_(kind), capacity_(capacity), dim_(dim), period_us_(frame_period_us) {
  if (capacity_ == 0 || dim_ == 0) fail(Errc::parameter, "queue capacity and dim must be positive");
}

bool ModalityQueue::push(std::uint64_t ts_us, std::span<const float> v) {
  if (v.size() != dim_) {
    fail(Errc::contract, "vector of dimension " + std::to_string(v.size()) + " pushed to queue of dimension " +
                             std::to_string(dim_));
  }
  ++counters_.ingested;
  if (!q_.empty() && ts_us + period_us_ < q_.back().ts_us) {
    ++counters_.rejected;
    return false;
  }
  Entry e{ts_us, std::vector<float>(v.begin(), v.end())};
  if (q_.empty() || ts_us >= q_.back().ts_us) {
    q_.push_back(std::move(e));
  } else {
    auto pos = std::upper_bound(q_.begin(), q_.end(), ts_us,
                                [](std::uint64_t t, const Entry& x) { return t < x.ts_us; });
    q_.insert(pos, std::move(e));
  }
  if (q_.size() > capacity_) {
    q_.pop_front();
    ++counters_.dropped;
  }
  return true;
}

std::size_t ingest(ModalityQueue& queue, const TimedEnvelope& env) {
  if (env.kind != queue.kind()) {
    fail(Errc::contract, std::string("cannot ingest ") + payload_kind_name(env.kind) + " payload into " +
                             payload_kind_name(queue.kind()) + " queue");
  }
  std::size_t accepted = 0;
  if (env.kind == PayloadKind::flame) {
    for (const auto& f : decode_flame_batch(env.payload)) {
      const auto m = f.motion();
      accepted += queue.push(f.capture_ts_us, m) ? 1 : 0;
    }
  } else if (env.kind == PayloadKind::mel) {
    for (const auto& f : decode_mel_batch(env.payload).frames) {
      accepted += queue.push(f.capture_ts_us, f.coeffs) ? 1 : 0;
    }
  } else {
    fail(Errc::contract, "only flame and mel payloads can be ingested");
  }
  return accepted;
}

namespace {

// Copies the `n` entries ending at index `last` into the bottom rows of `dst`.
std::size_t fill_right_aligned(RowMatrix& dst, const ModalityQueue& q, std::size_t last) {
  const auto rows = static_cast<std::size_t>(dst.rows());
  const std::size_t n = std::min(rows, last + 1);
  const std::size_t pad = rows - n;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& v = q[last + 1 - n + i].v;
    dst.row(static_cast<Eigen::Index>(pad + i)) =
        Eigen::Map<const Eigen::RowVectorXf>(v.data(), static_cast<Eigen::Index>(v.size()));
  }
  return pad;
}

}  // namespace

std::optional<FusionWindow> assemble_window(const ModalityQueue& flame_q, const ModalityQueue& mel_q,
                                            const ModalityQueue& history_q, const PipelineConfig& cfg) {
  if (flame_q.empty()) return std::nullopt;
  const auto d = static_cast<std::size_t>(cfg.flame_dim());
  if (flame_q.dim() != d || history_q.dim() != d || mel_q.dim() != static_cast<std::size_t>(cfg.l)) {
    fail(Errc::contract, "queue dimensions do not match the pipeline configuration");
  }
  FusionWindow w;
  w.speaker_flame = RowMatrix::Zero(cfg.T_window, static_cast<Eigen::Index>(d));
  w.speaker_mel = RowMatrix::Zero(4 * cfg.T_window, cfg.l);
  w.listener_past = RowMatrix::Zero(cfg.t_history, static_cast<Eigen::Index>(d));

  w.flame_padding = fill_right_aligned(w.speaker_flame, flame_q, flame_q.size() - 1);
  w.window_end_ts_us = flame_q.newest().ts_us;

  if (mel_q.empty()) {
    w.mel_padding = static_cast<std::size_t>(w.speaker_mel.rows());
  } else {
    std::size_t lo = 0, hi = mel_q.size();
    while (lo < hi) {  // first entry with ts >= window end
      const std::size_t mid = (lo + hi) / 2;
      if (mel_q[mid].ts_us < w.window_end_ts_us) lo = mid + 1; else hi = mid;
    }
    std::size_t idx = std::min(lo, mel_q.size() - 1);
    if (lo > 0) {
      const auto before = w.window_end_ts_us - mel_q[lo - 1].ts_us;
      const auto after = lo < mel_q.size() ? mel_q[lo].ts_us - w.window_end_ts_us : UINT64_MAX;
      if (before <= after) idx = lo - 1;
    }
    w.mel_padding = fill_right_aligned(w.speaker_mel, mel_q, idx);
    w.mel_end_ts_us = mel_q[idx].ts_us;
    w.mel_aligned = true;
  }

  if (history_q.empty()) {
    w.history_padding = static_cast<std::size_t>(w.listener_past.rows());
  } else {
    w.history_padding = fill_right_aligned(w.listener_past, history_q, history_q.size() - 1);
  }
  return w;
}

void push_history(ModalityQueue& history_q, const RowMatrix& predicted, std::uint64_t first_ts_us) {
  if (static_cast<std::size_t>(predicted.cols()) != history_q.dim()) {
    fail(Errc::contract, "predicted frames have " + std::to_string(predicted.cols()) +
                             " components, history expects " + std::to_string(history_q.dim()));
  }
  for (Eigen::Index r = 0; r < predicted.rows(); ++r) {
    const float* row = predicted.data() + r * predicted.cols();
    history_q.push(first_ts_us + static_cast<std::uint64_t>(r) * history_q.frame_period_us(),
                   std::span<const float>(row, static_cast<std::size_t>(predicted.cols())));
  }
}

// ---------------------------------------------------------------------------

FusionEngine::FusionEngine(const PipelineConfig& cfg)
    : cfg_(cfg),
      flame_q_(PayloadKind::flame, static_cast<std::size_t>(cfg.T_window), static_cast<std::size_t>(cfg.flame_dim()),
               frame_ts_us(1, cfg.F_fps)),
      mel_q_(PayloadKind::mel, static_cast<std::size_t>(4 * cfg.T_window), static_cast<std::size_t>(cfg.l),
             frame_ts_us(1, cfg.M_fps)),
      history_q_(PayloadKind::flame, static_cast<std::size_t>(cfg.t_history),
                 static_cast<std::size_t>(cfg.flame_dim()), frame_ts_us(1, cfg.F_fps)),
      flame_period_us_(frame_ts_us(1, cfg.F_fps)) {
  cfg_.validate();
}

std::uint64_t FusionEngine::step_time_us(std::uint64_t j) const { return frame_ts_us(first_slot(j), cfg_.F_fps); }

void FusionEngine::on_flame(std::span<const FlameFrame> frames) {
  if (frames.empty()) return;
  if (frames.size() >= 2 && frames.back().capture_ts_us > frames.front().capture_ts_us) {
    flame_period_us_ = (frames.back().capture_ts_us - frames.front().capture_ts_us) / (frames.size() - 1);
  }
  for (const auto& f : frames) {
    flame_stage_.push_back(f);
    newest_flame_ts_ = std::max(newest_flame_ts_.value_or(0), f.capture_ts_us);
  }
}

void FusionEngine::on_mel(std::span<const MelFrame> frames) {
  for (const auto& f : frames) {
    mel_stage_.push_back(f);
    newest_mel_ts_ = std::max(newest_mel_ts_.value_or(0), f.capture_ts_us);
  }
}

FusionEngine::Readiness FusionEngine::readiness() const {
  // A modality covers t once its next frame, expected one period after the
  // newest, lands past t. Half a period of margin absorbs timestamp rounding.
  const std::uint64_t t = step_time_us(step_);
  auto covers = [t](const std::optional<std::uint64_t>& newest, std::uint64_t period) {
    return newest && *newest + period - period / 2 > t;
  };
  // After end of stream the last frame covers a full period.
  const bool flame_ok = covers(newest_flame_ts_, flame_period_us_) ||
                        (flame_eos_ && newest_flame_ts_ && t < *newest_flame_ts_ + flame_period_us_);
  if (!flame_ok) return flame_eos_ ? Readiness::finished : Readiness::need_flame;
  if (mel_eos_ || covers(newest_mel_ts_, mel_q_.frame_period_us())) return Readiness::ready;
  return Readiness::need_mel;
}

void FusionEngine::release_up_to(std::uint64_t t_us) {
  while (!flame_stage_.empty() && flame_stage_.front().capture_ts_us <= t_us) {
    const auto m = flame_stage_.front().motion();
    flame_q_.push(flame_stage_.front().capture_ts_us, m);
    flame_stage_.pop_front();
  }
  if (flame_q_.empty()) return;
  const std::uint64_t edge = flame_q_.newest().ts_us;
  while (!mel_stage_.empty() && mel_stage_.front().capture_ts_us <= edge) {
    mel_q_.push(mel_stage_.front().capture_ts_us, mel_stage_.front().coeffs);
    mel_stage_.pop_front();
  }
}

std::optional<FusionWindow> FusionEngine::next_window(bool allow_stale_mel) {
  if (window_out_) fail(Errc::contract, "commit() the previous window before requesting another");
  for (;;) {
    const auto r = readiness();
    if (!(r == Readiness::ready || (r == Readiness::need_mel && allow_stale_mel))) return std::nullopt;
    release_up_to(step_time_us(step_));
    auto w = assemble_window(flame_q_, mel_q_, history_q_, cfg_);
    if (w) {
      window_out_ = true;
      return w;
    }
    // Covered but no FLAME frame at or before t_j: input starts later.
    ++skipped_;
    ++step_;
  }
}

void FusionEngine::commit(const RowMatrix& predicted) {
  if (!window_out_) fail(Errc::contract, "commit() without an outstanding window");
  push_history(history_q_, predicted, step_time_us(step_));
  window_out_ = false;
  ++step_;
}

}  // namespace relisten
