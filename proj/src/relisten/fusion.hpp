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

#ifndef RELISTEN_FUSION_HPP_
#define RELISTEN_FUSION_HPP_

#include <cstdint>
#include <deque>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "relisten/config.hpp"
#include "relisten/types.hpp"

namespace relisten {

using RowMatrix = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct QueueCounters {
  std::uint64_t ingested = 0;
  std::uint64_t dropped = 0;   ///< evicted by drop-oldest
  std::uint64_t rejected = 0;  ///< stale (older than tail by more than one period)
};

/// Fixed-capacity, timestamp-ordered deque of feature vectors.
/// ingested == size() + dropped + rejected at all times.
class ModalityQueue {
public:
  struct Entry {
    std::uint64_t ts_us = 0;
    std::vector<float> v;
  };

  ModalityQueue(PayloadKind kind, std::size_t capacity, std::size_t dim, std::uint64_t frame_period_us);

  /// Inserts in timestamp order. Returns false (stale) when ts_us is older
  /// than the tail by more than one frame period. Throws on dimension mismatch.
  bool push(std::uint64_t ts_us, std::span<const float> v);

  PayloadKind kind() const { return kind_; }
  std::size_t size() const { return q_.size(); }
  bool empty() const { return q_.empty(); }
  std::size_t capacity() const { return capacity_; }
  std::size_t dim() const { return dim_; }
  std::uint64_t frame_period_us() const { return period_us_; }
  const Entry& operator[](std::size_t i) const { return q_[i]; }  ///< 0 is oldest
  const Entry& newest() const { return q_.back(); }
  const QueueCounters& counters() const { return counters_; }

private:
  PayloadKind kind_;
  std::size_t capacity_;
  std::size_t dim_;
  std::uint64_t period_us_;
  std::deque<Entry> q_;
  QueueCounters counters_;
};

/// Decodes a flame or mel envelope into `queue`. Returns frames accepted.
std::size_t ingest(ModalityQueue& queue, const TimedEnvelope& env);

struct FusionWindow {
  RowMatrix speaker_flame;  ///< T_window x (expr_dim + 6), oldest row first
  RowMatrix speaker_mel;    ///< 4 T_window x l
  RowMatrix listener_past;  ///< t_history x (expr_dim + 6)
  std::uint64_t window_end_ts_us = 0;  ///< newest FLAME frame
  std::uint64_t mel_end_ts_us = 0;     ///< aligned mel frame (0 when no mel)
  bool mel_aligned = false;            ///< a mel frame was available
  std::size_t flame_padding = 0;
  std::size_t mel_padding = 0;
  std::size_t history_padding = 0;
};

/// Right-aligned window over the queues' newest content; leading gaps are
/// zero rows. The mel block ends at the mel frame nearest (ties: earlier) to
/// the newest FLAME timestamp. nullopt only when the FLAME queue is empty.
std::optional<FusionWindow> assemble_window(const ModalityQueue& flame_q, const ModalityQueue& mel_q,
                                            const ModalityQueue& history_q, const PipelineConfig& cfg);

/// Appends predicted rows (each expr_dim + 6 wide); the queue keeps the
/// newest t_history. Row r is stamped first_ts_us + r frame periods.
void push_history(ModalityQueue& history_q, const RowMatrix& predicted, std::uint64_t first_ts_us);

/// Window producer for autoregressive generation.
class WindowStream {
public:
  virtual ~WindowStream() = default;
  virtual std::optional<FusionWindow> next() = 0;
  /// Called with the w_out predicted rows of the window just returned.
  virtual void feedback(const RowMatrix& predicted) = 0;
};

/// Consumer side of the behavior generator's front half. Producers' frames
/// are staged, then released into the modality queues in timestamp order so
/// that window j sees exactly the FLAME frames captured at or before
/// t_j = j x stride_frames / F_fps and the mel frames up to that FLAME edge.
/// Window content therefore depends only on the input data, never on
/// arrival interleaving.
class FusionEngine : public WindowStream {
public:
  enum class Readiness { ready, need_flame, need_mel, finished };

  explicit FusionEngine(const PipelineConfig& cfg);

  void on_flame(std::span<const FlameFrame> frames);
  void on_mel(std::span<const MelFrame> frames);
  void end_flame() { flame_eos_ = true; }
  void end_mel() { mel_eos_ = true; }

  Readiness readiness() const;
  /// Window for the current step when ready; with allow_stale_mel a window
  /// is also produced while mel lags (the newest mel block is re-used).
  std::optional<FusionWindow> next_window(bool allow_stale_mel = false);
  /// Pushes the prediction into the listener history and advances a step.
  void commit(const RowMatrix& predicted);

  std::optional<FusionWindow> next() override { return next_window(false); }
  void feedback(const RowMatrix& predicted) override { commit(predicted); }

  std::uint64_t step() const { return step_; }
  std::uint64_t skipped_steps() const { return skipped_; }
  /// First output slot predicted by step j.
  std::uint64_t first_slot(std::uint64_t j) const { return j * static_cast<std::uint64_t>(cfg_.stride_frames); }
  std::uint64_t step_time_us(std::uint64_t j) const;

  const ModalityQueue& flame_queue() const { return flame_q_; }
  const ModalityQueue& mel_queue() const { return mel_q_; }
  const ModalityQueue& history_queue() const { return history_q_; }

private:
  void release_up_to(std::uint64_t t_us);

  PipelineConfig cfg_;
  ModalityQueue flame_q_;
  ModalityQueue mel_q_;
  ModalityQueue history_q_;
  std::deque<FlameFrame> flame_stage_;
  std::deque<MelFrame> mel_stage_;
  std::uint64_t flame_period_us_;
  std::optional<std::uint64_t> newest_flame_ts_;
  std::optional<std::uint64_t> newest_mel_ts_;
  bool flame_eos_ = false;
  bool mel_eos_ = false;
  std::uint64_t step_ = 0;
  std::uint64_t skipped_ = 0;
  bool window_out_ = false;
};

}  // namespace relisten

#endif  // RELISTEN_FUSION_HPP_
