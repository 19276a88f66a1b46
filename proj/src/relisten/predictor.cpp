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

#include "relisten/predictor.hpp"

#include <algorithm>
#include <cmath>
#include <type_traits>

#include "relisten/error.hpp"
#include "relisten/io.hpp"
#include "relisten/wire.hpp"

namespace relisten {

namespace {

constexpr float kExprScale = 3.0f;
constexpr float kPoseScale = 0.5f;

void fill_normal(RowMatrix& m, Eigen::Index rows, Eigen::Index cols, double scale, Rng& rng) {
  m.resize(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = static_cast<float>(rng.normal() * scale);
}

template <typename M>
auto blocks(M& m) {
  using Ptr = std::conditional_t<std::is_const_v<M>, const RowMatrix*, RowMatrix*>;
  return std::vector<Ptr>{&m.encoder, &m.w_flame, &m.w_mel, &m.embed, &m.w_logits, &m.b_logits, &m.decoder, &m.codebook.entries};
}

struct Shape {
  Eigen::Index rows, cols;
};

std::vector<Shape> block_shapes(const PredictorDims& d) {
  const auto cd = static_cast<Eigen::Index>(d.code_dim);
  const auto K = static_cast<Eigen::Index>(d.K);
  return {{cd, d.chunk_dim()}, {cd, d.frame_dim()}, {cd, d.l}, {K, cd},
          {K, 3 * cd},         {1, K},              {d.chunk_dim(), cd}, {K, cd}};
}

// Mean of rows [skip, rows).
Eigen::VectorXf pooled(const RowMatrix& m, std::size_t skip) {
  Eigen::VectorXf v = Eigen::VectorXf::Zero(m.cols());
  const auto first = static_cast<Eigen::Index>(std::min<std::size_t>(skip, static_cast<std::size_t>(m.rows())));
  const Eigen::Index n = m.rows() - first;
  if (n > 0) v = m.bottomRows(n).colwise().mean().transpose();
  return v;
}

}  // namespace

PredictorDims PredictorDims::from_config(const PipelineConfig& cfg) {
  return {static_cast<std::uint32_t>(cfg.expr_dim), static_cast<std::uint32_t>(cfg.l),
          static_cast<std::uint32_t>(cfg.K), static_cast<std::uint32_t>(cfg.code_dim),
          static_cast<std::uint32_t>(cfg.w_out)};
}

PredictorModel PredictorModel::seeded(const PredictorDims& dims, std::uint64_t seed) {
  if (dims.expr_dim == 0 || dims.l == 0 || dims.K == 0 || dims.code_dim == 0 || dims.w_out == 0) {
    fail(Errc::parameter, "predictor dimensions must be positive");
  }
  PredictorModel m;
  m.dims = dims;
  Rng rng(seed);
  const auto shapes = block_shapes(dims);
  auto bs = blocks(m);
  for (std::size_t b = 0; b < bs.size(); ++b) {
    double scale = 1.0 / std::sqrt(static_cast<double>(shapes[b].cols));
    if (bs[b] == &m.b_logits) scale = 0.1;
    if (bs[b] == &m.embed || bs[b] == &m.codebook.entries) scale = 1.0;
    fill_normal(*bs[b], shapes[b].rows, shapes[b].cols, scale, rng);
  }
  return m;
}

PredictorModel PredictorModel::from_config(const PipelineConfig& cfg) {
  auto m = seeded(PredictorDims::from_config(cfg), cfg.seed);
  m.temperature = cfg.temperature;
  m.greedy = cfg.greedy;
  return m;
}

void PredictorModel::check_config(const PipelineConfig& cfg) const {
  if (!(dims == PredictorDims::from_config(cfg))) {
    fail(Errc::contract, "model dimensions (expr_dim, l, K, code_dim, w_out) do not match the configuration");
  }
  if (cfg.t_history % cfg.w_out != 0) fail(Errc::contract, "t_history must be a multiple of w_out");
}

std::size_t PredictorModel::encode_chunk(std::span<const float> chunk) const {
  if (chunk.size() != dims.chunk_dim()) fail(Errc::contract, "encode_chunk: wrong chunk size");
  const Eigen::Map<const Eigen::VectorXf> v(chunk.data(), static_cast<Eigen::Index>(chunk.size()));
  const Eigen::VectorXf z = encoder * v;
  return quantize(std::span<const float>(z.data(), static_cast<std::size_t>(z.size())), codebook);
}

StepResult predict_step(const PredictorModel& model, const FusionWindow& window, Rng& rng) {
  const auto& d = model.dims;
  if (static_cast<std::uint32_t>(window.speaker_flame.cols()) != d.frame_dim() ||
      static_cast<std::uint32_t>(window.listener_past.cols()) != d.frame_dim() ||
      static_cast<std::uint32_t>(window.speaker_mel.cols()) != d.l || window.speaker_flame.rows() == 0 ||
      window.listener_past.rows() % d.w_out != 0) {
    fail(Errc::contract, "predict_step: window shape does not match the model");
  }
  if (!(model.temperature > 0.0)) fail(Errc::parameter, "predict_step: temperature must be positive");
  const auto cd = static_cast<Eigen::Index>(d.code_dim);

  Eigen::VectorXf ctx(3 * cd);
  ctx.segment(0, cd) = (model.w_flame * pooled(window.speaker_flame, window.flame_padding)).array().tanh();
  ctx.segment(cd, cd) = (model.w_mel * pooled(window.speaker_mel, window.mel_padding)).array().tanh();

  Eigen::VectorXf past = Eigen::VectorXf::Zero(cd);
  const auto w = static_cast<std::size_t>(d.w_out);
  const auto chunks = static_cast<std::size_t>(window.listener_past.rows()) / w;
  std::size_t used = 0;
  for (std::size_t c = 0; c < chunks; ++c) {
    if ((c + 1) * w <= window.history_padding) continue;  // all padding
    const float* p = window.listener_past.data() + c * w * d.frame_dim();
    const auto idx = model.encode_chunk(std::span<const float>(p, d.chunk_dim()));
    past += model.embed.row(static_cast<Eigen::Index>(idx)).transpose();
    ++used;
  }
  if (used > 0) past /= static_cast<float>(used);
  ctx.segment(2 * cd, cd) = past;

  StepResult r;
  const Eigen::VectorXd logits =
      (model.w_logits.cast<double>() * ctx.cast<double>()) + model.b_logits.row(0).transpose().cast<double>();
  r.logits.assign(logits.data(), logits.data() + logits.size());
  if (!logits.allFinite()) fail(Errc::numeric, "predict_step: non-finite logits");

  const double mx = logits.maxCoeff();
  r.probs.resize(r.logits.size());
  double z = 0.0;
  for (std::size_t k = 0; k < r.logits.size(); ++k) {
    r.probs[k] = std::exp((r.logits[k] - mx) / model.temperature);
    z += r.probs[k];
  }
  for (auto& p : r.probs) p /= z;

  if (model.greedy) {
    r.code_index = static_cast<std::size_t>(std::max_element(r.logits.begin(), r.logits.end()) - r.logits.begin());
  } else {
    const double u = rng.uniform();
    double acc = 0.0;
    r.code_index = r.probs.size() - 1;
    for (std::size_t k = 0; k < r.probs.size(); ++k) {
      acc += r.probs[k];
      if (u < acc) {
        r.code_index = k;
        break;
      }
    }
    while (r.probs[r.code_index] == 0.0 && r.code_index > 0) --r.code_index;
  }

  const Eigen::VectorXf out = model.decoder * model.codebook.entries.row(static_cast<Eigen::Index>(r.code_index)).transpose();
  r.frames.resize(d.w_out, d.frame_dim());
  for (std::uint32_t i = 0; i < d.w_out; ++i) {
    for (std::uint32_t j = 0; j < d.frame_dim(); ++j) {
      const float v = std::tanh(out[i * d.frame_dim() + j]);
      r.frames(i, j) = j < d.expr_dim ? kExprScale * v : kPoseScale * v;
    }
  }
  return r;
}

RowMatrix generate(const PredictorModel& model, WindowStream& stream, std::size_t n_steps, Rng& rng) {
  RowMatrix out(0, model.dims.frame_dim());
  for (std::size_t s = 0; s < n_steps; ++s) {
    auto win = stream.next();
    if (!win) break;
    auto r = predict_step(model, *win, rng);
    const auto at = out.rows();
    out.conservativeResize(at + r.frames.rows(), Eigen::NoChange);
    out.bottomRows(r.frames.rows()) = r.frames;
    stream.feedback(r.frames);
  }
  return out;
}

double l2_loss(const RowMatrix& pred, const RowMatrix& gt) {
  if (pred.rows() != gt.rows() || pred.cols() != gt.cols()) {
    fail(Errc::contract, "l2_loss: sequences differ in length or dimension");
  }
  if (pred.rows() == 0) fail(Errc::contract, "l2_loss: empty sequences");
  double total = 0.0;
  for (Eigen::Index i = 0; i < pred.size(); ++i) {
    const double e = static_cast<double>(pred.data()[i]) - static_cast<double>(gt.data()[i]);
    total += e * e;
  }
  return total / static_cast<double>(pred.rows());
}

std::vector<std::uint8_t> encode_model(const PredictorModel& model) {
  wire::Writer w;
  w.raw("L2L1");
  const auto& d = model.dims;
  for (auto v : {d.expr_dim, d.l, d.K, d.code_dim, d.w_out}) w.u32(v);
  const auto shapes = block_shapes(d);
  const auto bs = blocks(model);
  for (std::size_t b = 0; b < bs.size(); ++b) {
    if (bs[b]->rows() != shapes[b].rows || bs[b]->cols() != shapes[b].cols) {
      fail(Errc::contract, "encode_model: parameter block " + std::to_string(b) + " has the wrong shape");
    }
    for (Eigen::Index i = 0; i < bs[b]->size(); ++i) w.f32(bs[b]->data()[i]);
  }
  return w.take();
}

PredictorModel decode_model(std::span<const std::uint8_t> bytes) {
  wire::Reader r(bytes);
  if (r.str(4) != "L2L1") fail(Errc::format, "weight file: bad magic");
  PredictorModel m;
  m.dims.expr_dim = r.u32();
  m.dims.l = r.u32();
  m.dims.K = r.u32();
  m.dims.code_dim = r.u32();
  m.dims.w_out = r.u32();
  const auto& d = m.dims;
  if (d.expr_dim == 0 || d.l == 0 || d.K == 0 || d.code_dim == 0 || d.w_out == 0 || d.expr_dim > 4096 ||
      d.l > 4096 || d.K > 65536 || d.code_dim > 4096 || d.w_out > 1024) {
    fail(Errc::format, "weight file: implausible dimensions");
  }
  const auto shapes = block_shapes(d);
  std::size_t total = 0;
  for (const auto& s : shapes) total += static_cast<std::size_t>(s.rows * s.cols);
  if (r.remaining() != total * 4) {
    fail(Errc::format, "weight file: expected " + std::to_string(total * 4) + " parameter bytes, found " +
                           std::to_string(r.remaining()));
  }
  auto bs = blocks(m);
  for (std::size_t b = 0; b < bs.size(); ++b) {
    bs[b]->resize(shapes[b].rows, shapes[b].cols);
    for (Eigen::Index i = 0; i < bs[b]->size(); ++i) bs[b]->data()[i] = r.f32();
    if (!bs[b]->allFinite()) fail(Errc::format, "weight file: non-finite parameter");
  }
  return m;
}

void save_model(const PredictorModel& model, const std::string& path) { write_file(path, encode_model(model)); }

PredictorModel load_model(const std::string& path) { return decode_model(read_file(path)); }

RowMatrix motion_chunks(const RowMatrix& motion, std::size_t w_out) {
  if (w_out == 0) fail(Errc::parameter, "motion_chunks: w_out must be positive");
  const auto n = static_cast<std::size_t>(motion.rows());
  if (n < w_out) return RowMatrix(0, static_cast<Eigen::Index>(w_out) * motion.cols());
  const std::size_t count = n - w_out + 1;
  const auto width = static_cast<Eigen::Index>(w_out) * motion.cols();
  RowMatrix out(static_cast<Eigen::Index>(count), width);
  for (std::size_t i = 0; i < count; ++i) {
    out.row(static_cast<Eigen::Index>(i)) =
        Eigen::Map<const Eigen::RowVectorXf>(motion.data() + i * static_cast<std::size_t>(motion.cols()), width);
  }
  return out;
}

}  // namespace relisten
