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
#include <sys/wait.h>

#include <array>
#include <cstdio>
#include <fstream>
#include <set>
#include <string>

#include "test_util.hpp"

namespace {

struct Result {
  int code = -1;
  std::string out;
};

Result cli(const std::string& args) {
  const std::string cmd = std::string(RELISTEN_CLI_PATH) + " " + args + " 2>&1";
  Result r;
  FILE* p = ::popen(cmd.c_str(), "r");
  if (!p) return r;
  std::array<char, 4096> buf;
  std::size_t n;
  while ((n = std::fread(buf.data(), 1, buf.size(), p)) > 0) r.out.append(buf.data(), n);
  const int st = ::pclose(p);
  r.code = WIFEXITED(st) ? WEXITSTATUS(st) : -1;
  return r;
}

}  // namespace

TEST(Cli, UsageErrorsExitWithTwo) {
  EXPECT_EQ(cli("").code, 2);
  EXPECT_EQ(cli("no-such-command").code, 2);
  EXPECT_EQ(cli("eval-l2").code, 2);
  EXPECT_EQ(cli("--help").code, 0);
}

TEST(Cli, FilePipeline) {
  relisten::test::TempDir dir;
  const auto d = dir.path().string();
  auto r = cli("gen-synthetic --flame " + d + "/s.flame --wav " + d + "/s.wav --duration 3");
  ASSERT_EQ(r.code, 0) << r.out;

  r = cli("eval-l2 " + d + "/s.flame " + d + "/s.flame");
  ASSERT_EQ(r.code, 0) << r.out;
  EXPECT_EQ(r.out, "0.0\n");

  r = cli("build-gl --out " + d + "/gl.bin");
  ASSERT_EQ(r.code, 0) << r.out;
  std::ifstream gl(d + "/gl.bin", std::ios::binary);
  char magic[4] = {};
  gl.read(magic, 4);
  EXPECT_EQ(std::string(magic, 4), "GLM1");

  r = cli("extract-mel --in " + d + "/s.wav --out " + d + "/s.mel");
  ASSERT_EQ(r.code, 0) << r.out;

  r = cli("--fast run --wav " + d + "/s.wav --flame " + d + "/s.flame --gl " + d + "/gl.bin --frames-out " + d +
          "/f.jsonl");
  ASSERT_EQ(r.code, 0) << r.out;
  EXPECT_NE(r.out.find("frames_out="), std::string::npos);

  r = cli("--fast run --wav " + d + "/s.wav --flame " + d + "/s.flame --gl " + d + "/nope.bin");
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.out.find("nope.bin"), std::string::npos);
}

TEST(Cli, BenchWritesLatencyCsv) {
  relisten::test::TempDir dir;
  const auto csv = dir.file("lat.csv");
  const auto r = cli("bench --duration 3 --runs 20 --out " + csv);
  ASSERT_EQ(r.code, 0) << r.out;
  std::ifstream in(csv);
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "stage,metric,count,p50,p95,max");
  std::set<std::string> stages;
  while (std::getline(in, line)) stages.insert(line.substr(0, line.find(',')));
  EXPECT_GE(stages.size(), 5u);
}
