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

#include "relisten/error.hpp"
#include "relisten/features.hpp"
#include "test_util.hpp"

using namespace relisten;

TEST(Flame, FileRoundTrip) {
  test::TempDir dir;
  auto seq = synth_flame(2.0, 30, 5, 50);
  write_flame(dir.file("a.flame"), seq);
  EXPECT_EQ(read_flame(dir.file("a.flame")), seq);

  for (auto& f : seq.frames) f.shape.emplace(kShapeDim, 0.25f);
  seq.has_shape = true;
  EXPECT_EQ(parse_flame(encode_flame(seq)), seq);
}

TEST(Flame, TruncatedFileIsFormatError) {
  auto bytes = encode_flame(synth_flame(0.5, 30, 1, 10));
  bytes.resize(bytes.size() - 3);
  try {
    parse_flame(bytes);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::format);
  }
}

TEST(Flame, SyntheticSequenceIsBoundedAndTimed) {
  for (std::uint32_t fps : {24u, 30u}) {
    const auto seq = synth_flame(3.0, fps, 17, 100);
    ASSERT_EQ(seq.frames.size(), 3u * fps);
    for (std::size_t i = 0; i < seq.frames.size(); ++i) {
      const auto& f = seq.frames[i];
      EXPECT_EQ(f.capture_ts_us, frame_ts_us(i, fps));
      ASSERT_EQ(f.expr.size(), 100u);
      for (float v : f.expr) EXPECT_LT(std::abs(v), 2.0f);
      double jaw = 0, head = 0;
      for (int k = 0; k < 3; ++k) {
        jaw += f.jaw_aa[k] * f.jaw_aa[k];
        head += f.head_aa[k] * f.head_aa[k];
      }
      EXPECT_LE(std::sqrt(jaw), 0.5);
      EXPECT_LE(std::sqrt(head), 0.5);
    }
  }
  EXPECT_EQ(synth_flame(1.0, 30, 3), synth_flame(1.0, 30, 3));
  EXPECT_NE(synth_flame(1.0, 30, 3), synth_flame(1.0, 30, 4));
}

TEST(Flame, BatchSizeIsFpsTimesBatchLength) {
  EXPECT_EQ(flame_batch_size(30, 1.0), 30u);
  EXPECT_EQ(flame_batch_size(24, 1.0), 24u);
  EXPECT_EQ(flame_batch_size(24, 0.1), 3u);
  EXPECT_EQ(flame_batch_size(30, 0.5), 15u);
  EXPECT_EQ(flame_batch_size(30, 0.01), 1u);
}

TEST(Flame, PartitionCoversSequenceInOrder) {
  const auto seq = synth_flame(2.5, 30, 2, 8);
  const auto parts = partition_batches(seq, 1.0);
  ASSERT_EQ(parts.size(), 3u);
  EXPECT_EQ(parts[0].size(), 30u);
  EXPECT_EQ(parts[2].size(), 15u);
  std::size_t i = 0;
  for (const auto& p : parts) {
    for (const auto& f : p) EXPECT_EQ(f, seq.frames[i++]);
  }
  EXPECT_EQ(i, seq.frames.size());
}
