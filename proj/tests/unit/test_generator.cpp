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

#include <cmath>
#include <cstring>
#include <set>

#include "relisten/codebook.hpp"
#include "relisten/error.hpp"
#include "relisten/features.hpp"
#include "relisten/fusion.hpp"
#include "relisten/predictor.hpp"
#include "relisten/rng.hpp"
#include "test_util.hpp"

using namespace relisten;

namespace {

PredictorDims small_dims(std::uint32_t K = 16) {
  PredictorDims d;
  d.expr_dim = 6;
  d.l = 5;
  d.K = K;
  d.code_dim = 8;
  d.w_out = 4;
  return d;
}

PipelineConfig config_for(const PredictorDims& d) {
  PipelineConfig c;
  c.expr_dim = static_cast<int>(d.expr_dim);
  c.l = static_cast<int>(d.l);
  c.K = static_cast<int>(d.K);
  c.code_dim = static_cast<int>(d.code_dim);
  c.w_out = static_cast<int>(d.w_out);
  c.t_history = 2 * c.w_out;
  c.T_window = 12;
  c.stride_frames = c.w_out;
  return c;
}

FusionWindow random_window(const PipelineConfig& c, Rng& rng) {
  FusionWindow w;
  w.speaker_flame = RowMatrix(c.T_window, c.flame_dim());
  w.speaker_mel = RowMatrix(4 * c.T_window, c.l);
  w.listener_past = RowMatrix(c.t_history, c.flame_dim());
  for (auto* m : {&w.speaker_flame, &w.speaker_mel, &w.listener_past}) {
    for (Eigen::Index i = 0; i < m->size(); ++i) m->data()[i] = static_cast<float>(rng.normal());
  }
  return w;
}

RowMatrix random_matrix(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
  RowMatrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = static_cast<float>(rng.normal());
  return m;
}

// Engine fed with a whole FLAME sequence and matching mel frames.
std::unique_ptr<FusionEngine> engine_over(const PipelineConfig& c, const FlameSequence& seq) {
  auto eng = std::make_unique<FusionEngine>(c);
  eng->on_flame(seq.frames);
  std::vector<MelFrame> mel(seq.frames.size() * 4);
  for (std::size_t i = 0; i < mel.size(); ++i) {
    mel[i].capture_ts_us = frame_ts_us(i, c.M_fps);
    mel[i].coeffs.assign(static_cast<std::size_t>(c.l), std::sin(0.01f * static_cast<float>(i)));
  }
  eng->on_mel(mel);
  eng->end_flame();
  eng->end_mel();
  return eng;
}

}  // namespace

TEST(Quantize, NearestEntryWithTiesToLowestIndex) {
  Codebook cb;
  cb.entries = RowMatrix(3, 2);
  cb.entries << 0, 0, 1, 0, 0, 1;
  const float a[2] = {0.9f, 0.1f}, b[2] = {0.5f, 0.0f}, c[2] = {0.1f, 0.8f}, d[2] = {0.5f, 0.5f};
  EXPECT_EQ(quantize(a, cb), 1u);
  EXPECT_EQ(quantize(b, cb), 0u);
  EXPECT_EQ(quantize(c, cb), 2u);
  EXPECT_EQ(quantize(d, cb), 0u);  // equidistant from all three
  const float wrong[3] = {0, 0, 0};
  EXPECT_THROW(quantize(wrong, cb), Error);
  EXPECT_THROW(quantize(a, Codebook{}), Error);
}

TEST(Quantize, EntriesMapToThemselves) {
  Rng rng(4);
  for (int t = 0; t < 20; ++t) {
    Codebook cb{random_matrix(1 + static_cast<Eigen::Index>(rng.below(50)), 6, rng)};
    for (std::size_t k = 0; k < cb.size(); ++k) {
      const auto row = cb.entries.row(static_cast<Eigen::Index>(k));
      EXPECT_EQ(quantize(std::span<const float>(row.data(), 6), cb), k);
    }
  }
}

TEST(Quantize, MatchesBruteForceOracle) {
  Rng rng(8);
  Codebook cb{random_matrix(40, 5, rng)};
  for (int t = 0; t < 500; ++t) {
    std::vector<float> x(5);
    for (auto& v : x) v = static_cast<float>(rng.normal());
    std::size_t best = 0;
    double best_d = INFINITY;
    for (std::size_t k = 0; k < 40; ++k) {
      double dist = 0;
      for (int j = 0; j < 5; ++j) {
        const double e = static_cast<double>(x[j]) - cb.entries(static_cast<Eigen::Index>(k), j);
        dist += e * e;
      }
      if (dist < best_d) best_d = dist, best = k;
    }
    EXPECT_EQ(quantize(x, cb), best);
  }
}

TEST(TrainCodebook, KDistinctPointsAreRecoveredExactly) {
  Rng rng(1);
  const auto data = random_matrix(12, 3, rng);
  const auto r = train_codebook(data, 12, 50, 5);
  EXPECT_TRUE(r.converged);
  EXPECT_NEAR(r.errors.back(), 0.0, 1e-9);
  for (Eigen::Index i = 0; i < 12; ++i) {
    const auto k = quantize(std::span<const float>(data.row(i).data(), 3), r.codebook);
    EXPECT_EQ(r.codebook.entries.row(static_cast<Eigen::Index>(k)), data.row(i));
  }
}

TEST(TrainCodebook, TwoBlobsGiveTwoCentres) {
  Rng rng(2);
  const double sigma = 0.5;
  RowMatrix data(400, 2);
  for (Eigen::Index i = 0; i < 400; ++i) {
    const double cx = i < 200 ? -5.0 : 5.0;
    data(i, 0) = static_cast<float>(cx + sigma * rng.normal());
    data(i, 1) = static_cast<float>(sigma * rng.normal());
  }
  const auto r = train_codebook(data, 2, 100, 3);
  std::vector<double> xs{r.codebook.entries(0, 0), r.codebook.entries(1, 0)};
  std::sort(xs.begin(), xs.end());
  EXPECT_NEAR(xs[0], -5.0, 3 * sigma);
  EXPECT_NEAR(xs[1], 5.0, 3 * sigma);
  for (int k = 0; k < 2; ++k) EXPECT_NEAR(r.codebook.entries(k, 1), 0.0, 3 * sigma);
}

TEST(TrainCodebook, ErrorNeverIncreasesAndRunsAreReproducible) {
  Rng rng(3);
  for (int t = 0; t < 10; ++t) {
    const auto data = random_matrix(200 + static_cast<Eigen::Index>(rng.below(200)), 4, rng);
    const std::size_t K = 2 + rng.below(20);
    const auto r = train_codebook(data, K, 100, rng.next_u64());
    ASSERT_FALSE(r.errors.empty());
    for (std::size_t i = 1; i < r.errors.size(); ++i) {
      EXPECT_LE(r.errors[i], r.errors[i - 1] * (1 + 1e-12) + 1e-12);
    }
    EXPECT_EQ(r.codebook.size(), K);
    const auto again = train_codebook(data, K, 100, 77);
    const auto again2 = train_codebook(data, K, 100, 77);
    EXPECT_EQ(again.codebook.entries, again2.codebook.entries);
  }
}

TEST(TrainCodebook, RetrainingOnCentresIsAFixedPoint) {
  Rng rng(5);
  const auto data = random_matrix(300, 3, rng);
  const auto r = train_codebook(data, 6, 200, 1);
  const auto r2 = train_codebook(r.codebook.entries, 6, 200, 9);
  for (Eigen::Index k = 0; k < 6; ++k) {
    const auto idx = quantize(std::span<const float>(r.codebook.entries.row(k).data(), 3), r2.codebook);
    EXPECT_EQ(r2.codebook.entries.row(static_cast<Eigen::Index>(idx)), r.codebook.entries.row(k));
  }
}

TEST(TrainCodebook, BadArguments) {
  Rng rng(6);
  const auto data = random_matrix(3, 2, rng);
  auto code = [](auto fn) {
    try {
      fn();
    } catch (const Error& e) {
      return e.code();
    }
    return Errc::timeout;
  };
  EXPECT_EQ(code([&] { train_codebook(data, 4, 10, 0); }), Errc::contract);
  EXPECT_EQ(code([&] { train_codebook(data, 2, 0, 0); }), Errc::parameter);
  auto bad = data;
  bad(0, 0) = NAN;
  EXPECT_EQ(code([&] { train_codebook(bad, 2, 10, 0); }), Errc::numeric);
}

TEST(Predictor, ProbabilitiesFormADistribution) {
  const auto d = small_dims();
  const auto c = config_for(d);
  Rng rng(10);
  for (double temp : {0.1, 0.5, 1.0, 3.0}) {
    auto m = PredictorModel::seeded(d, 3);
    m.temperature = temp;
    for (int t = 0; t < 50; ++t) {
      const auto r = predict_step(m, random_window(c, rng), rng);
      ASSERT_EQ(r.probs.size(), d.K);
      double sum = 0;
      for (double p : r.probs) {
        EXPECT_GE(p, 0.0);
        sum += p;
      }
      EXPECT_NEAR(sum, 1.0, 1e-9);
      EXPECT_LT(r.code_index, d.K);
      EXPECT_EQ(r.frames.rows(), d.w_out);
      EXPECT_EQ(r.frames.cols(), d.frame_dim());
    }
  }
}

TEST(Predictor, OutputStaysInRange) {
  const auto d = small_dims();
  const auto c = config_for(d);
  const auto m = PredictorModel::seeded(d, 1);
  Rng rng(11);
  for (int t = 0; t < 100; ++t) {
    const auto r = predict_step(m, random_window(c, rng), rng);
    EXPECT_TRUE(r.frames.allFinite());
    EXPECT_LE(r.frames.leftCols(d.expr_dim).cwiseAbs().maxCoeff(), 3.0f);
    EXPECT_LE(r.frames.rightCols(6).cwiseAbs().maxCoeff(), 0.5f);
  }
}

TEST(Predictor, GreedyPicksArgmaxAndDrawsNothing) {
  const auto d = small_dims();
  const auto c = config_for(d);
  auto m = PredictorModel::seeded(d, 2);
  m.greedy = true;
  Rng data(12);
  for (int t = 0; t < 50; ++t) {
    Rng rng(5);
    const auto r = predict_step(m, random_window(c, data), rng);
    const auto argmax = static_cast<std::size_t>(std::max_element(r.logits.begin(), r.logits.end()) - r.logits.begin());
    EXPECT_EQ(r.code_index, argmax);
    EXPECT_EQ(rng, Rng(5));
  }
}

TEST(Predictor, SamplingFollowsTheDistribution) {
  const auto d = small_dims(6);
  const auto c = config_for(d);
  auto m = PredictorModel::seeded(d, 4);
  m.temperature = 2.0;
  Rng data(13);
  const auto w = random_window(c, data);
  Rng rng(14);
  const int n = 20000;
  std::vector<int> counts(d.K, 0);
  std::vector<double> probs;
  for (int i = 0; i < n; ++i) {
    const auto r = predict_step(m, w, rng);
    ++counts[r.code_index];
    probs = r.probs;
  }
  for (std::size_t k = 0; k < d.K; ++k) {
    const double sd = std::sqrt(probs[k] * (1 - probs[k]) / n);
    EXPECT_NEAR(static_cast<double>(counts[k]) / n, probs[k], 5 * sd + 1e-4) << k;
  }
}

TEST(Predictor, SeededRunsAreIdentical) {
  const auto d = small_dims();
  const auto c = config_for(d);
  const auto seq = synth_flame(3.0, 30, 2, d.expr_dim);
  auto run = [&](std::uint64_t seed) {
    const auto m = PredictorModel::seeded(d, 7);
    auto eng = engine_over(c, seq);
    Rng rng(seed);
    return generate(m, *eng, 100, rng);
  };
  EXPECT_EQ(run(1), run(1));
  EXPECT_NE(run(1), run(2));
}

TEST(Predictor, FourStepsGiveFourChunks) {
  const auto d = small_dims();
  const auto c = config_for(d);
  const auto m = PredictorModel::seeded(d, 7);
  auto eng = engine_over(c, synth_flame(3.0, 30, 2, d.expr_dim));
  Rng rng(0);
  const auto out = generate(m, *eng, 4, rng);
  EXPECT_EQ(out.rows(), 4 * d.w_out);
  EXPECT_EQ(eng->step(), 4u);

  auto defaults = PredictorModel::seeded(PredictorDims{}, 1);
  PipelineConfig dc;
  auto eng2 = engine_over(dc, synth_flame(3.0, 30, 2, 100));
  EXPECT_EQ(generate(defaults, *eng2, 4, rng).rows(), 32);
}

TEST(Predictor, FutureInputDoesNotChangeEarlierOutput) {
  const auto d = small_dims();
  const auto c = config_for(d);
  const auto m = PredictorModel::seeded(d, 7);
  const auto a = synth_flame(4.0, 30, 2, d.expr_dim);
  auto b = a;
  const std::size_t cut = 60;  // frames from 2 s on differ
  for (std::size_t i = cut; i < b.frames.size(); ++i) {
    for (auto& v : b.frames[i].expr) v = -v;
  }
  auto ea = engine_over(c, a);
  auto eb = engine_over(c, b);
  Rng ra(3), rb(3);
  const auto oa = generate(m, *ea, 100, ra);
  const auto ob = generate(m, *eb, 100, rb);
  // Steps whose window ends before the cut see identical inputs.
  const std::size_t same_steps = (cut - 1) / d.w_out + 1;
  const auto rows = static_cast<Eigen::Index>(same_steps * d.w_out);
  ASSERT_GE(oa.rows(), rows);
  EXPECT_EQ(oa.topRows(rows), ob.topRows(rows));
  EXPECT_NE(oa, ob);
}

TEST(Predictor, ShapeMismatchIsContractError) {
  const auto d = small_dims();
  auto c = config_for(d);
  const auto m = PredictorModel::seeded(d, 1);
  c.l = 7;
  Rng rng(1);
  try {
    predict_step(m, random_window(c, rng), rng);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::contract);
  }
}

TEST(L2, Examples) {
  RowMatrix gt = RowMatrix::Zero(32, 106);
  EXPECT_EQ(l2_loss(gt, gt), 0.0);
  RowMatrix ones = RowMatrix::Ones(32, 106);
  EXPECT_DOUBLE_EQ(l2_loss(ones, gt), 106.0);
  RowMatrix one_frame = RowMatrix::Zero(32, 106);
  one_frame.row(3).setConstant(2.0f);
  EXPECT_DOUBLE_EQ(l2_loss(one_frame, gt), 4.0 * 106 / 32);
  EXPECT_THROW(l2_loss(RowMatrix::Zero(31, 106), gt), Error);
  EXPECT_THROW(l2_loss(RowMatrix(0, 106), RowMatrix(0, 106)), Error);
}

TEST(L2, MatchesPerFrameNormOracle) {
  Rng rng(20);
  for (int t = 0; t < 100; ++t) {
    const auto n = 1 + static_cast<Eigen::Index>(rng.below(64));
    const auto a = random_matrix(n, 106, rng);
    const auto b = random_matrix(n, 106, rng);
    double sum = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
      sum += (a.row(i).cast<double>() - b.row(i).cast<double>()).squaredNorm();
    }
    const double want = sum / static_cast<double>(n);
    EXPECT_NEAR(l2_loss(a, b), want, 1e-9 * want);
  }
}

TEST(ModelFile, RoundTripAndCorruption) {
  test::TempDir dir;
  const auto d = small_dims();
  auto m = PredictorModel::seeded(d, 9);
  save_model(m, dir.file("w.bin"));
  const auto back = load_model(dir.file("w.bin"));
  EXPECT_EQ(back.dims, m.dims);
  EXPECT_EQ(back.encoder, m.encoder);
  EXPECT_EQ(back.codebook.entries, m.codebook.entries);
  EXPECT_EQ(back.decoder, m.decoder);
  EXPECT_EQ(encode_model(back), encode_model(m));

  auto bytes = encode_model(m);
  auto code = [](const std::vector<std::uint8_t>& b) {
    try {
      decode_model(b);
    } catch (const Error& e) {
      return e.code();
    }
    return Errc::timeout;
  };
  auto bad_magic = bytes;
  bad_magic[0] = 'X';
  EXPECT_EQ(code(bad_magic), Errc::format);
  auto short_bytes = bytes;
  short_bytes.pop_back();
  EXPECT_EQ(code(short_bytes), Errc::format);
  auto nan_bytes = bytes;
  const float nan = NAN;
  std::memcpy(nan_bytes.data() + 24, &nan, 4);
  EXPECT_EQ(code(nan_bytes), Errc::format);
}

TEST(ModelFile, DimensionsMustMatchConfig) {
  const auto d = small_dims();
  auto c = config_for(d);
  const auto m = PredictorModel::seeded(d, 9);
  EXPECT_NO_THROW(m.check_config(c));
  c.K = 17;
  EXPECT_THROW(m.check_config(c), Error);
}

TEST(MotionChunks, SlidingWindows) {
  RowMatrix motion(5, 2);
  motion << 0, 1, 2, 3, 4, 5, 6, 7, 8, 9;
  const auto ch = motion_chunks(motion, 2);
  ASSERT_EQ(ch.rows(), 4);
  ASSERT_EQ(ch.cols(), 4);
  RowMatrix want(4, 4);
  want << 0, 1, 2, 3, 2, 3, 4, 5, 4, 5, 6, 7, 6, 7, 8, 9;
  EXPECT_EQ(ch, want);
  EXPECT_EQ(motion_chunks(motion, 6).rows(), 0);
}
