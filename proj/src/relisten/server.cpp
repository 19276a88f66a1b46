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

#include "relisten/server.hpp"

#include <sys/socket.h>

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <deque>
#include <mutex>
#include <thread>

#include <boost/asio/ip/tcp.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/websocket.hpp>
#include <nlohmann/json.hpp>

#include "relisten/clock.hpp"
#include "relisten/error.hpp"
#include "relisten/frame_json.hpp"
#include "relisten/log.hpp"
#include "relisten/transport.hpp"

namespace relisten {

namespace net = boost::asio;
namespace beast = boost::beast;
namespace websocket = beast::websocket;
using tcp = net::ip::tcp;

std::string hello_message() { return R"({"hello":"relisten","version":1})"; }

bool is_valid_hello(const std::string& text) {
  const auto j = nlohmann::json::parse(text, nullptr, false);
  if (j.is_discarded() || !j.is_object()) return false;
  const auto h = j.find("hello");
  const auto v = j.find("version");
  return h != j.end() && v != j.end() && h->is_string() && *h == "relisten" && v->is_number_integer() && *v == 1;
}

std::string FrameServer::default_summary(int fps, std::size_t queue_capacity) {
  nlohmann::json j;
  j["server"] = "relisten";
  j["version"] = 1;
  j["fps"] = fps;
  j["queue_capacity"] = queue_capacity;
  j["blendshapes"] = kArkitCount;
  return j.dump();
}

namespace {

using Message = std::shared_ptr<const std::string>;

struct Session {
  std::mutex mu;
  std::condition_variable cv;
  std::deque<Message> q;
  SessionStats st;
  int fd = -1;
  bool closing = false;
  std::thread th;
};

}  // namespace

struct FrameServer::Impl {
  ServerOptions opt;
  net::io_context ioc;
  tcp::acceptor acceptor{ioc};
  std::string bound;
  std::thread accept_th;
  std::thread pace_th;
  std::atomic<bool> stopping{false};
  bool started = false;

  mutable std::mutex src_mu;
  std::condition_variable src_cv;
  std::deque<ArkitFrame> source;
  bool input_done = false;
  bool in_flight = false;
  ServerStats stats;
  std::function<void(const ArkitFrame&, std::uint64_t)> observer;

  mutable std::mutex sess_mu;
  std::vector<std::shared_ptr<Session>> sessions;
  std::uint64_t next_id = 0;

  void accept_loop();
  void pace_loop();
  void run_session(const std::shared_ptr<Session>& s, tcp::socket sock);
  void dispatch(const ArkitFrame& f);
};

FrameServer::FrameServer(ServerOptions options) : impl_(std::make_unique<Impl>()) {
  if (options.fps <= 0) fail(Errc::parameter, "server fps must be positive");
  if (options.queue_capacity == 0) fail(Errc::parameter, "server queue capacity must be positive");
  if (options.hello_reply.empty()) options.hello_reply = default_summary(options.fps, options.queue_capacity);
  impl_->opt = std::move(options);
}

FrameServer::~FrameServer() {
  try {
    stop();
  } catch (...) {
  }
}

void FrameServer::start() {
  auto& m = *impl_;
  if (m.started) fail(Errc::contract, "server already started");
  Endpoint ep;
  try {
    ep = Endpoint::parse(m.opt.addr);
  } catch (const Error& e) {
    fail(Errc::startup, e.what());
  }
  const std::string host = ep.host == "localhost" ? "127.0.0.1" : ep.host;
  beast::error_code ec;
  const auto address = net::ip::make_address(host, ec);
  if (ec) fail(Errc::startup, "cannot bind " + m.opt.addr + ": " + ec.message());
  const tcp::endpoint endpoint(address, ep.port);
  m.acceptor.open(endpoint.protocol(), ec);
  if (!ec) m.acceptor.set_option(net::socket_base::reuse_address(true), ec);
  if (!ec) m.acceptor.bind(endpoint, ec);
  if (!ec) m.acceptor.listen(net::socket_base::max_listen_connections, ec);
  if (ec) fail(Errc::startup, "cannot bind " + m.opt.addr + ": " + ec.message());
  const auto local = m.acceptor.local_endpoint();
  m.bound = local.address().to_string() + ":" + std::to_string(local.port());
  m.started = true;
  m.accept_th = std::thread([&m] { m.accept_loop(); });
  m.pace_th = std::thread([&m] { m.pace_loop(); });
  log::info("frame server listening on " + m.bound);
}

std::string FrameServer::address() const { return impl_->bound; }

void FrameServer::set_observer(std::function<void(const ArkitFrame&, std::uint64_t)> fn) {
  std::lock_guard lk(impl_->src_mu);
  impl_->observer = std::move(fn);
}

void FrameServer::submit(std::vector<ArkitFrame> frames) {
  std::lock_guard lk(impl_->src_mu);
  if (impl_->input_done) fail(Errc::contract, "submit after finish_input");
  impl_->stats.frames_in += frames.size();
  for (auto& f : frames) impl_->source.push_back(std::move(f));
  impl_->src_cv.notify_all();
}

void FrameServer::finish_input() {
  std::lock_guard lk(impl_->src_mu);
  impl_->input_done = true;
  impl_->src_cv.notify_all();
}

bool FrameServer::wait_drained(int timeout_ms) {
  const auto deadline = std::chrono::steady_clock::now() + std::chrono::milliseconds(timeout_ms);
  for (;;) {
    bool idle = false;
    {
      std::lock_guard lk(impl_->src_mu);
      idle = impl_->source.empty() && !impl_->in_flight;
    }
    if (idle) {
      for (const auto& s : sessions()) {
        if (s.open && s.greeted && s.pending > 0) idle = false;
      }
    }
    if (idle) return true;
    if (std::chrono::steady_clock::now() >= deadline) return false;
    std::this_thread::sleep_for(std::chrono::milliseconds(2));
  }
}

void FrameServer::stop() {
  auto& m = *impl_;
  if (!m.started || m.stopping.exchange(true)) return;
  {
    std::lock_guard lk(m.src_mu);
    m.src_cv.notify_all();
  }
  ::shutdown(m.acceptor.native_handle(), SHUT_RDWR);
  if (m.accept_th.joinable()) m.accept_th.join();
  if (m.pace_th.joinable()) m.pace_th.join();
  std::vector<std::shared_ptr<Session>> all;
  {
    std::lock_guard lk(m.sess_mu);
    all = m.sessions;
  }
  for (const auto& s : all) {
    std::lock_guard lk(s->mu);
    s->closing = true;
    if (s->fd >= 0) ::shutdown(s->fd, SHUT_RDWR);
    s->cv.notify_all();
  }
  for (const auto& s : all) {
    if (s->th.joinable()) s->th.join();
  }
  beast::error_code ec;
  m.acceptor.close(ec);
}

std::vector<SessionStats> FrameServer::sessions() const {
  std::vector<std::shared_ptr<Session>> all;
  {
    std::lock_guard lk(impl_->sess_mu);
    all = impl_->sessions;
  }
  std::vector<SessionStats> out;
  out.reserve(all.size());
  for (const auto& s : all) {
    std::lock_guard lk(s->mu);
    out.push_back(s->st);
  }
  return out;
}

ServerStats FrameServer::stats() const {
  ServerStats st;
  {
    std::lock_guard lk(impl_->src_mu);
    st = impl_->stats;
  }
  std::lock_guard lk(impl_->sess_mu);
  st.sessions_opened = impl_->sessions.size();
  st.sessions_closed = 0;
  for (const auto& s : impl_->sessions) {
    std::lock_guard sl(s->mu);
    st.sessions_closed += s->st.open ? 0 : 1;
  }
  return st;
}

void FrameServer::Impl::accept_loop() {
  while (!stopping) {
    tcp::socket sock(ioc);
    beast::error_code ec;
    acceptor.accept(sock, ec);
    if (ec) {
      if (stopping) break;
      log::warn("accept failed: " + ec.message());
      std::this_thread::sleep_for(std::chrono::milliseconds(10));
      continue;
    }
    if (opt.sndbuf_bytes > 0) sock.set_option(net::socket_base::send_buffer_size(opt.sndbuf_bytes), ec);
    sock.set_option(tcp::no_delay(true), ec);
    auto s = std::make_shared<Session>();
    s->fd = sock.native_handle();
    {
      std::lock_guard lk(sess_mu);
      s->st.id = next_id++;
      sessions.push_back(s);
    }
    s->th = std::thread([this, s, sk = std::move(sock)]() mutable { run_session(s, std::move(sk)); });
  }
}

void FrameServer::Impl::run_session(const std::shared_ptr<Session>& s, tcp::socket sock) {
  auto ws = std::make_unique<websocket::stream<tcp::socket>>(std::move(sock));
  Message in_flight;
  try {
    ws->accept();
    beast::flat_buffer buf;
    ws->read(buf);
    const std::string hello = beast::buffers_to_string(buf.data());
    if (!is_valid_hello(hello)) {
      log::warn("session " + std::to_string(s->st.id) + ": rejected handshake");
      ws->close(websocket::close_code::policy_error);
    } else {
      ws->text(true);
      ws->write(net::buffer(opt.hello_reply));
      {
        std::lock_guard lk(s->mu);
        s->st.greeted = true;
      }
      for (;;) {
        {
          std::unique_lock lk(s->mu);
          s->cv.wait(lk, [&] { return s->closing || !s->q.empty(); });
          if (s->closing) break;
          in_flight = std::move(s->q.front());
          s->q.pop_front();
          s->st.pending = s->q.size();
        }
        ws->write(net::buffer(*in_flight));
        std::lock_guard lk(s->mu);
        ++s->st.sent;
        in_flight.reset();
      }
    }
  } catch (const std::exception& e) {
    log::info("session " + std::to_string(s->st.id) + " closed: " + e.what());
  }
  {
    std::lock_guard lk(s->mu);
    if (in_flight) ++s->st.dropped;
    s->st.open = false;
    s->fd = -1;
  }
  beast::error_code ec;
  ws->next_layer().close(ec);
}

void FrameServer::Impl::dispatch(const ArkitFrame& f) {
  const auto msg = std::make_shared<const std::string>(encode_frame(f));
  std::vector<std::shared_ptr<Session>> all;
  {
    std::lock_guard lk(sess_mu);
    all = sessions;
  }
  for (const auto& s : all) {
    std::lock_guard lk(s->mu);
    if (!s->st.open || s->closing) continue;
    if (s->q.size() >= opt.queue_capacity) {
      s->q.pop_front();
      ++s->st.dropped;
    }
    s->q.push_back(msg);
    ++s->st.enqueued;
    s->st.pending = s->q.size();
    s->cv.notify_one();
  }
}

void FrameServer::Impl::pace_loop() {
  using clock = std::chrono::steady_clock;
  const auto period = std::chrono::nanoseconds(static_cast<std::int64_t>(1e9 / opt.fps));
  auto next = clock::now();
  for (;;) {
    ArkitFrame f;
    std::function<void(const ArkitFrame&, std::uint64_t)> obs;
    {
      std::unique_lock lk(src_mu);
      if (source.empty()) {
        src_cv.wait(lk, [&] { return stopping || input_done || !source.empty(); });
        if (source.empty()) {
          if (stopping || input_done) break;
          continue;
        }
        // Resume the schedule from now after an idle gap.
        next = std::max(next, clock::now());
      }
    }
    std::this_thread::sleep_until(next);
    if (stopping) break;
    {
      std::lock_guard lk(src_mu);
      const auto late = clock::now() - next;
      if (late > period) {
        auto skip = static_cast<std::size_t>(late / period);
        skip = std::min(skip, source.size() - 1);
        for (std::size_t i = 0; i < skip; ++i) source.pop_front();
        stats.frames_late += skip;
        next += period * static_cast<std::int64_t>(skip);
      }
      f = std::move(source.front());
      source.pop_front();
      in_flight = true;
      obs = observer;
    }
    dispatch(f);
    if (obs) obs(f, now_us());
    {
      std::lock_guard lk(src_mu);
      ++stats.frames_paced;
      in_flight = false;
    }
    next += period;
  }
}

}  // namespace relisten
