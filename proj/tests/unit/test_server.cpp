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

#include <nlohmann/json.hpp>

#include <algorithm>
#include <thread>

#include "relisten/clock.hpp"
#include "relisten/error.hpp"
#include "relisten/frame_json.hpp"
#include "relisten/rng.hpp"
#include "relisten/server.hpp"
#include "ws_client.hpp"

using namespace relisten;

namespace {

std::vector<ArkitFrame> frames(std::size_t n, std::uint64_t first = 0) {
  std::vector<ArkitFrame> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    out[i].seq = first + i;
    out[i].t_ms = (first + i) * 1000 / 30;
    out[i].weights[i % kArkitCount] = 0.5;
  }
  return out;
}

void wait_sessions(const FrameServer& s, std::size_t n) {
  for (int i = 0; i < 400 && s.sessions().size() < n; ++i) std::this_thread::sleep_for(std::chrono::milliseconds(5));
  ASSERT_GE(s.sessions().size(), n);
}

std::unique_ptr<FrameServer> started(int fps, std::size_t cap = 128) {
  ServerOptions o;
  o.addr = "127.0.0.1:0";
  o.fps = fps;
  o.queue_capacity = cap;
  auto s = std::make_unique<FrameServer>(o);
  s->start();
  return s;
}

}  // namespace

TEST(FrameJson, ZeroFrameHasCanonicalForm) {
  const auto text = encode_frame(ArkitFrame{});
  const auto j = nlohmann::json::parse(text);
  EXPECT_EQ(j["seq"], 0);
  EXPECT_EQ(j["t_ms"], 0);
  ASSERT_EQ(j["blendshapes"].size(), 52u);
  EXPECT_EQ(text.find("-0"), std::string::npos);
  EXPECT_EQ(text.rfind("{\"seq\":0,\"t_ms\":0,\"blendshapes\":{\"eyeBlinkLeft\":0.0,", 0), 0u);
  EXPECT_NE(text.find("\"jaw\":{\"x\":0.0,\"y\":0.0,\"z\":0.0}"), std::string::npos);
  EXPECT_EQ(decode_frame(text), ArkitFrame{});
}

TEST(FrameJson, NumberFormatting) {
  EXPECT_EQ(format_number(0.0), "0.0");
  EXPECT_EQ(format_number(-0.0), "0.0");
  EXPECT_EQ(format_number(-1e-9), "0.0");
  EXPECT_EQ(format_number(0.5), "0.5");
  EXPECT_EQ(format_number(1.0), "1.0");
  EXPECT_EQ(format_number(0.1234567), "0.123457");
  EXPECT_EQ(format_number(-2.25), "-2.25");
  EXPECT_THROW(format_number(NAN), Error);
}

TEST(FrameJson, RandomFramesSurviveARoundTrip) {
  Rng rng(3);
  for (int t = 0; t < 1000; ++t) {
    ArkitFrame f;
    for (auto& w : f.weights) w = rng.uniform();
    for (auto& v : f.jaw_euler) v = rng.uniform(-3.14, 3.14);
    for (auto& v : f.head_euler) v = rng.uniform(-3.14, 3.14);
    f.seq = rng.next_u64() >> 12;
    f.t_ms = rng.next_u64() >> 12;
    const auto text = encode_frame(f);
    const auto j = nlohmann::json::parse(text);
    EXPECT_EQ(j.size(), 5u);
    const auto back = decode_frame(text);
    EXPECT_EQ(back.seq, f.seq);
    EXPECT_EQ(back.t_ms, f.t_ms);
    for (std::size_t k = 0; k < kArkitCount; ++k) EXPECT_NEAR(back.weights[k], f.weights[k], 5e-7);
    for (int k = 0; k < 3; ++k) {
      EXPECT_NEAR(back.jaw_euler[k], f.jaw_euler[k], 5e-7);
      EXPECT_NEAR(back.head_euler[k], f.head_euler[k], 5e-7);
    }
    EXPECT_EQ(encode_frame(back), text);
  }
}

TEST(FrameJson, SchemaViolationsAreFormatErrors) {
  const auto good = nlohmann::json::parse(encode_frame(ArkitFrame{}));
  auto check = [](const nlohmann::json& j) {
    try {
      decode_frame(j.dump());
    } catch (const Error& e) {
      return e.code() == Errc::format;
    }
    return false;
  };
  auto extra = good;
  extra["more"] = 1;
  EXPECT_TRUE(check(extra));
  auto missing = good;
  missing["blendshapes"].erase("jawOpen");
  EXPECT_TRUE(check(missing));
  auto neg = good;
  neg["seq"] = -1;
  EXPECT_TRUE(check(neg));
  auto str = good;
  str["jaw"]["x"] = "0";
  EXPECT_TRUE(check(str));
  EXPECT_THROW(decode_frame("{"), Error);
}

TEST(Hello, Validation) {
  EXPECT_TRUE(is_valid_hello(hello_message()));
  EXPECT_TRUE(is_valid_hello(R"({"version":1,"hello":"relisten"})"));
  EXPECT_FALSE(is_valid_hello(R"({"hello":"relisten","version":2})"));
  EXPECT_FALSE(is_valid_hello(R"({"hello":"other","version":1})"));
  EXPECT_FALSE(is_valid_hello("hello"));
}

TEST(FrameServer, BadAddressIsStartupError) {
  ServerOptions o;
  o.addr = "256.0.0.1:1";
  FrameServer s(o);
  try {
    s.start();
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::startup);
  }
}

TEST(FrameServer, PacesFramesWithoutClients) {
  auto s = started(200);
  std::vector<std::uint64_t> released;
  s->set_observer([&](const ArkitFrame&, std::uint64_t t) { released.push_back(t); });
  s->submit(frames(40));
  s->finish_input();
  EXPECT_TRUE(s->wait_drained(5000));
  const auto st = s->stats();
  EXPECT_EQ(st.frames_in, 40u);
  EXPECT_EQ(st.frames_paced + st.frames_late, 40u);
  ASSERT_GE(released.size(), 2u);
  // 200 fps: 40 frames take at least 39 periods.
  EXPECT_GE(released.back() - released.front(), 39u * 5000u - 2000u);
}

TEST(FrameServer, GreetedClientReceivesFramesInOrder) {
  auto s = started(120);
  test::WsClient c(s->address());
  c.send(hello_message());
  const auto reply = c.read();
  ASSERT_TRUE(reply);
  const auto j = nlohmann::json::parse(*reply);
  EXPECT_EQ(j["fps"], 120);
  EXPECT_EQ(j["queue_capacity"], 128);
  wait_sessions(*s, 1);
  s->submit(frames(30));
  s->finish_input();
  std::uint64_t prev = 0;
  for (int i = 0; i < 30; ++i) {
    const auto m = c.read();
    ASSERT_TRUE(m);
    const auto f = decode_frame(*m);
    if (i > 0) {
      EXPECT_GT(f.seq, prev);
    }
    prev = f.seq;
  }
  EXPECT_EQ(prev, 29u);
  EXPECT_TRUE(s->wait_drained(2000));
}

TEST(FrameServer, BadHelloIsClosedWithPolicyError) {
  auto s = started(30);
  test::WsClient c(s->address());
  c.send(R"({"hello":"nope","version":1})");
  EXPECT_FALSE(c.read());
  EXPECT_EQ(c.close_code(), 1008);
}

TEST(FrameServer, SilentClientOverflowsItsQueue) {
  auto s = started(300);
  test::WsClient c(s->address());  // never sends hello
  wait_sessions(*s, 1);
  s->submit(frames(300));
  s->finish_input();
  for (int i = 0; i < 400 && s->stats().frames_paced + s->stats().frames_late < 300; ++i) {
    std::this_thread::sleep_for(std::chrono::milliseconds(10));
  }
  const auto sess = s->sessions();
  ASSERT_EQ(sess.size(), 1u);
  EXPECT_FALSE(sess[0].greeted);
  EXPECT_EQ(sess[0].sent, 0u);
  EXPECT_LE(sess[0].pending, 128u);
  EXPECT_GE(sess[0].dropped, 172u - s->stats().frames_late);
  EXPECT_EQ(sess[0].enqueued, s->stats().frames_paced);
}

TEST(FrameServer, DisconnectDoesNotDisturbOtherClients) {
  auto s = started(100);
  test::WsClient a(s->address()), b(s->address());
  a.send(hello_message());
  b.send(hello_message());
  ASSERT_TRUE(a.read());
  ASSERT_TRUE(b.read());
  wait_sessions(*s, 2);
  s->submit(frames(60));
  s->finish_input();
  for (int i = 0; i < 5; ++i) ASSERT_TRUE(a.read());
  a.abort();
  int got = 0;
  std::uint64_t last = 0;
  while (got < 60) {
    const auto m = b.read();
    ASSERT_TRUE(m);
    last = decode_frame(*m).seq;
    ++got;
  }
  EXPECT_EQ(last, 59u);
  EXPECT_TRUE(s->wait_drained(3000));
  s->stop();
  EXPECT_EQ(s->stats().sessions_opened, 2u);
}

TEST(FrameServer, StopIsIdempotentAndUnblocksClients) {
  auto s = started(30);
  test::WsClient c(s->address());
  c.send(hello_message());
  ASSERT_TRUE(c.read());
  std::thread t([&] { s->stop(); });
  EXPECT_FALSE(c.read());
  t.join();
  s->stop();
}
