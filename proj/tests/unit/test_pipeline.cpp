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

#include <cstdio>
#include <fstream>
#include <sstream>

#include "relisten/error.hpp"
#include "relisten/features.hpp"
#include "relisten/mapper.hpp"
#include "relisten/pipeline.hpp"
#include "relisten/wav.hpp"
#include "test_util.hpp"

using namespace relisten;

namespace {

PipelineInputs synthetic(double seconds, int fps, std::uint64_t seed = 1) {
  PipelineInputs in;
  in.cfg.F_fps = fps;
  in.cfg.M_fps = 4 * fps;
  in.cfg.seed = seed;
  in.audio = synth_speech(seconds, 16000, seed);
  in.flame = synth_flame(seconds, static_cast<std::uint32_t>(fps), seed, 100);
  in.gl = build_gl(parse_mapping(example_mapping_text()), GlMode::difference, 100);
  return in;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST(Pipeline, TenSecondsOfferedAtThirtyFps) {
  const auto s = run_pipeline(synthetic(10.0, 30), PipelineOptions{});
  EXPECT_EQ(s.flame_frames_in, 300u);
  EXPECT_EQ(s.mel_frames_in, 1200u);
  EXPECT_GE(s.frames_out, 264u);
  EXPECT_EQ(s.frames_out, s.steps * 8);
  EXPECT_EQ(s.transport_dropped, 0u);
  EXPECT_EQ(s.weights_out_of_range, 0u);
  EXPECT_EQ(s.weights_total, s.frames_out * 52);
  EXPECT_FALSE(s.speech.empty());
  ASSERT_TRUE(s.latency);
  EXPECT_GE(s.latency->stages().size(), 5u);
  for (std::size_t i = 0; i < s.frames.size(); ++i) {
    EXPECT_EQ(s.frames[i].seq, i);
    EXPECT_EQ(s.frames[i].t_ms, static_cast<std::uint64_t>(std::llround(i * 1000.0 / 30)));
  }
}

TEST(Pipeline, TwentyFourFpsInput) {
  const auto s = run_pipeline(synthetic(10.0, 24), PipelineOptions{});
  EXPECT_EQ(s.flame_frames_in, 240u);
  EXPECT_EQ(s.mel_frames_in, 960u);
  EXPECT_GE(s.frames_out, 0.88 * 240);
  ASSERT_FALSE(s.frames.empty());
  EXPECT_EQ(s.frames[1].t_ms, 42u);
}

TEST(Pipeline, SeededRunsProduceIdenticalDumps) {
  test::TempDir dir;
  PipelineOptions a, b;
  a.frames_out = dir.file("a.jsonl");
  b.frames_out = dir.file("b.jsonl");
  run_pipeline(synthetic(4.0, 30, 5), a);
  run_pipeline(synthetic(4.0, 30, 5), b);
  const auto ta = slurp(a.frames_out);
  EXPECT_FALSE(ta.empty());
  EXPECT_EQ(ta, slurp(b.frames_out));
}

TEST(Pipeline, LiveAndOfflineRunsEmitTheSameFrames) {
  PipelineOptions live;
  live.mode = RunMode::live;
  const auto a = run_pipeline(synthetic(3.0, 30, 8), live);
  const auto b = run_pipeline(synthetic(3.0, 30, 8), PipelineOptions{});
  EXPECT_GT(a.first_output_s, 0.5);
  EXPECT_EQ(a.frames, b.frames);
}

TEST(Pipeline, FileSpecValidatesPathsFirst) {
  test::TempDir dir;
  write_flame(dir.file("in.flame"), synth_flame(2.0, 30, 1, 100));
  write_wav(dir.file("in.wav"), synth_speech(2.0, 16000, 1), 16000);
  RunSpec spec;
  spec.flame_path = dir.file("in.flame");
  spec.wav_path = dir.file("in.wav");
  spec.gl_path = dir.file("missing.bin");
  try {
    run_pipeline(spec);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::io);
    EXPECT_NE(std::string(e.what()).find("missing.bin"), std::string::npos);
  }
  save_gl(build_gl(parse_mapping(example_mapping_text()), GlMode::difference, 100), dir.file("gl.bin"));
  spec.gl_path = dir.file("gl.bin");
  spec.latency_csv = dir.file("lat.csv");
  const auto s = run_pipeline(spec);
  EXPECT_GT(s.frames_out, 0u);
  EXPECT_EQ(slurp(spec.latency_csv), format_csv(*s.latency));
}

TEST(Pipeline, MismatchedWeightsAreRejected) {
  auto in = synthetic(2.0, 30);
  PredictorDims d = PredictorDims::from_config(in.cfg);
  d.K = 10;
  in.model = PredictorModel::seeded(d, 1);
  EXPECT_THROW(run_pipeline(in, PipelineOptions{}), Error);
}

TEST(Pipeline, SummaryFormatting) {
  const auto s = run_pipeline(synthetic(2.0, 30), PipelineOptions{});
  const auto text = format_summary(s);
  EXPECT_NE(text.find("frames_out"), std::string::npos);
}
