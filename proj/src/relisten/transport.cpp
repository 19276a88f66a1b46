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

#include "relisten/transport.hpp"

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <sys/socket.h>
#include <sys/time.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <cstring>

#include "relisten/clock.hpp"
#include "relisten/envelope.hpp"
#include "relisten/error.hpp"
#include "relisten/log.hpp"
#include "relisten/wire.hpp"

namespace relisten {
namespace {

constexpr char kHello[4] = {'R', 'L', 'S', '1'};

bool send_all(int fd, const std::uint8_t* p, std::size_t n) {
  while (n > 0) {
    const ssize_t k = ::send(fd, p, n, MSG_NOSIGNAL);
    if (k < 0) {
      if (errno == EINTR) continue;
      return false;
    }
    p += k;
    n -= static_cast<std::size_t>(k);
  }
  return true;
}

bool recv_all(int fd, std::uint8_t* p, std::size_t n) {
  while (n > 0) {
    const ssize_t k = ::recv(fd, p, n, 0);
    if (k == 0) return false;
    if (k < 0) {
      if (errno == EINTR) continue;
      return false;
    }
    p += k;
    n -= static_cast<std::size_t>(k);
  }
  return true;
}

void set_recv_timeout(int fd, int timeout_ms) {
  timeval tv{};
  tv.tv_sec = timeout_ms / 1000;
  tv.tv_usec = (timeout_ms % 1000) * 1000;
  ::setsockopt(fd, SOL_SOCKET, SO_RCVTIMEO, &tv, sizeof(tv));
}

void set_nodelay(int fd) {
  int one = 1;
  ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
}

sockaddr_in resolve(const Endpoint& ep) {
  addrinfo hints{};
  hints.ai_family = AF_INET;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* res = nullptr;
  if (::getaddrinfo(ep.host.c_str(), nullptr, &hints, &res) != 0 || res == nullptr) {
    fail(Errc::transport, "cannot resolve host '" + ep.host + "'");
  }
  sockaddr_in sa{};
  std::memcpy(&sa, res->ai_addr, sizeof(sa));
  ::freeaddrinfo(res);
  sa.sin_port = htons(ep.port);
  return sa;
}

}  // namespace

Endpoint Endpoint::parse(const std::string& addr) {
  const auto colon = addr.rfind(':');
  if (colon == std::string::npos || colon == 0 || colon + 1 == addr.size()) {
    fail(Errc::parse, "address must be host:port, got '" + addr + "'");
  }
  Endpoint ep;
  ep.host = addr.substr(0, colon);
  const std::string port = addr.substr(colon + 1);
  unsigned long p = 0;
  try {
    std::size_t used = 0;
    p = std::stoul(port, &used);
    if (used != port.size()) throw std::invalid_argument(port);
  } catch (const std::exception&) {
    fail(Errc::parse, "bad port in address '" + addr + "'");
  }
  if (p > 65535) fail(Errc::parse, "bad port in address '" + addr + "'");
  ep.port = static_cast<std::uint16_t>(p);
  return ep;
}

// ---------------------------------------------------------------------------
// Publisher

Publisher::Publisher(std::string topic, const std::string& addr) : topic_(std::move(topic)) {
  if (topic_.empty() || topic_.size() > 0xFFFF) fail(Errc::parameter, "bad topic name");
  bound_ = Endpoint::parse(addr);
  sockaddr_in sa = resolve(bound_);
  listen_fd_ = ::socket(AF_INET, SOCK_STREAM | SOCK_CLOEXEC, 0);
  if (listen_fd_ < 0) fail(Errc::transport, "socket(): " + std::string(std::strerror(errno)));
  int one = 1;
  ::setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
  if (::bind(listen_fd_, reinterpret_cast<sockaddr*>(&sa), sizeof(sa)) != 0 ||
      ::listen(listen_fd_, 16) != 0) {
    const std::string why = std::strerror(errno);
    ::close(listen_fd_);
    fail(Errc::transport, "cannot bind " + addr + ": " + why);
  }
  socklen_t len = sizeof(sa);
  ::getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&sa), &len);
  bound_.port = ntohs(sa.sin_port);
  acceptor_ = std::thread([this] { accept_loop(); });
}

Publisher::~Publisher() {
  close();
  ::shutdown(listen_fd_, SHUT_RDWR);
  if (acceptor_.joinable()) acceptor_.join();
  ::close(listen_fd_);
}

void Publisher::accept_loop() {
  for (;;) {
    const int fd = ::accept4(listen_fd_, nullptr, nullptr, SOCK_CLOEXEC);
    if (fd < 0) {
      if (errno == EINTR || errno == ECONNABORTED) continue;
      return;
    }
    set_recv_timeout(fd, 2000);
    std::uint8_t head[6];
    bool ok = recv_all(fd, head, sizeof(head)) && std::memcmp(head, kHello, 4) == 0;
    std::string want;
    if (ok) {
      want.resize(static_cast<std::size_t>(head[4]) | (static_cast<std::size_t>(head[5]) << 8));
      ok = recv_all(fd, reinterpret_cast<std::uint8_t*>(want.data()), want.size());
    }
    const std::uint8_t verdict = (ok && want == topic_) ? 1 : 0;
    std::unique_lock lk(mu_);
    if (closed_ || !verdict) {
      const std::uint8_t no = 0;
      send_all(fd, &no, 1);
      ::close(fd);
      continue;
    }
    set_nodelay(fd);
    if (!send_all(fd, &verdict, 1)) {
      ::close(fd);
      continue;
    }
    conns_.push_back(fd);
    cv_.notify_all();
  }
}

std::uint64_t Publisher::publish(PayloadKind kind, std::vector<std::uint8_t> payload,
                                 std::uint64_t capture_ts_us) {
  if (payload.size() > kMaxPayloadBytes) fail(Errc::size, "payload exceeds 16 MiB");
  std::unique_lock lk(mu_);
  if (closed_) fail(Errc::transport, "publisher for '" + topic_ + "' is closed");
  if (capture_ts_us < last_capture_) {
    fail(Errc::contract, "capture timestamps must be non-decreasing per topic");
  }
  TimedEnvelope env;
  env.topic = topic_;
  env.seq = next_seq_;
  env.capture_ts_us = capture_ts_us;
  env.publish_ts_us = now_us();
  if (env.publish_ts_us < capture_ts_us) {
    fail(Errc::contract, "capture timestamp lies in the future");
  }
  env.kind = kind;
  env.payload = std::move(payload);
  const auto body = encode_envelope(env);
  std::vector<std::uint8_t> frame;
  frame.reserve(body.size() + 4);
  wire::Writer w;
  w.u32(static_cast<std::uint32_t>(body.size()));
  frame = w.take();
  frame.insert(frame.end(), body.begin(), body.end());

  for (auto it = conns_.begin(); it != conns_.end();) {
    if (send_all(*it, frame.data(), frame.size())) {
      ++it;
    } else {
      log::warn("dropping subscriber of '" + topic_ + "' after send failure");
      ::close(*it);
      it = conns_.erase(it);
    }
  }
  last_capture_ = capture_ts_us;
  return next_seq_++;
}

bool Publisher::wait_for_subscribers(std::size_t n, int timeout_ms) const {
  std::unique_lock lk(mu_);
  return cv_.wait_for(lk, std::chrono::milliseconds(timeout_ms),
                      [&] { return conns_.size() >= n; });
}

std::size_t Publisher::subscriber_count() const {
  std::lock_guard lk(mu_);
  return conns_.size();
}

void Publisher::close() {
  std::lock_guard lk(mu_);
  if (closed_) return;
  closed_ = true;
  for (int fd : conns_) {
    ::shutdown(fd, SHUT_RDWR);
    ::close(fd);
  }
  conns_.clear();
}

// ---------------------------------------------------------------------------
// Subscriber

Subscriber::Subscriber(std::size_t capacity) : capacity_(capacity) {
  if (capacity_ == 0) fail(Errc::parameter, "inbox capacity must be positive");
}

Subscriber::~Subscriber() {
  std::vector<std::unique_ptr<Upstream>> ups;
  {
    std::lock_guard lk(mu_);
    ups.swap(upstreams_);
  }
  for (auto& up : ups) ::shutdown(up->fd, SHUT_RDWR);
  for (auto& up : ups) {
    if (up->reader.joinable()) up->reader.join();
    ::close(up->fd);
  }
}

void Subscriber::subscribe(const std::string& topic, const std::string& addr, int timeout_ms) {
  if (topic.empty() || topic.size() > 0xFFFF) fail(Errc::parameter, "bad topic name");
  const Endpoint ep = Endpoint::parse(addr);
  sockaddr_in sa = resolve(ep);
  const int fd = ::socket(AF_INET, SOCK_STREAM | SOCK_CLOEXEC, 0);
  if (fd < 0) fail(Errc::transport, "socket(): " + std::string(std::strerror(errno)));
  if (::connect(fd, reinterpret_cast<sockaddr*>(&sa), sizeof(sa)) != 0) {
    const std::string why = std::strerror(errno);
    ::close(fd);
    fail(Errc::transport, "cannot connect to " + addr + ": " + why);
  }
  set_nodelay(fd);
  wire::Writer w;
  w.raw(std::string_view(kHello, 4));
  w.u16(static_cast<std::uint16_t>(topic.size()));
  w.raw(topic);
  set_recv_timeout(fd, timeout_ms);
  std::uint8_t ack = 0;
  if (!send_all(fd, w.data().data(), w.data().size()) || !recv_all(fd, &ack, 1) || ack != 1) {
    ::close(fd);
    fail(Errc::transport, "subscription to '" + topic + "' at " + addr + " rejected");
  }
  set_recv_timeout(fd, 0);

  std::lock_guard lk(mu_);
  topics_.insert(topic);
  auto up = std::make_unique<Upstream>();
  up->fd = fd;
  Upstream* raw = up.get();
  upstreams_.push_back(std::move(up));
  raw->reader = std::thread([this, raw] { read_loop(raw); });
}

void Subscriber::read_loop(Upstream* up) {
  std::vector<std::uint8_t> buf;
  for (;;) {
    std::uint8_t len_bytes[4];
    if (!recv_all(up->fd, len_bytes, 4)) break;
    const std::uint32_t len = static_cast<std::uint32_t>(len_bytes[0]) |
                              (static_cast<std::uint32_t>(len_bytes[1]) << 8) |
                              (static_cast<std::uint32_t>(len_bytes[2]) << 16) |
                              (static_cast<std::uint32_t>(len_bytes[3]) << 24);
    if (len > kMaxPayloadBytes + (1u << 17)) {
      log::error("oversized frame from publisher; closing upstream");
      break;
    }
    buf.resize(len);
    if (!recv_all(up->fd, buf.data(), len)) break;
    Delivery d;
    try {
      d.envelope = decode_envelope(buf);
    } catch (const Error& e) {
      log::error(std::string("undecodable envelope: ") + e.what());
      break;
    }
    d.recv_ts_us = now_us();
    std::lock_guard lk(mu_);
    if (!topics_.contains(d.envelope.topic)) {
      ++stats_.foreign;
      continue;
    }
    ++stats_.received;
    if (inbox_.size() >= capacity_) {
      inbox_.pop_front();
      ++stats_.dropped;
    }
    inbox_.push_back(std::move(d));
    cv_.notify_one();
  }
  std::lock_guard lk(mu_);
  up->open = false;
  cv_.notify_all();
}

std::optional<Delivery> Subscriber::next(int timeout_ms) {
  std::unique_lock lk(mu_);
  auto all_closed = [&] {
    if (upstreams_.empty()) return false;
    for (const auto& up : upstreams_) {
      if (up->open) return false;
    }
    return true;
  };
  cv_.wait_for(lk, std::chrono::milliseconds(timeout_ms),
               [&] { return !inbox_.empty() || all_closed(); });
  if (inbox_.empty()) return std::nullopt;
  Delivery d = std::move(inbox_.front());
  inbox_.pop_front();
  return d;
}

bool Subscriber::drained() const {
  std::lock_guard lk(mu_);
  if (!inbox_.empty() || upstreams_.empty()) return false;
  for (const auto& up : upstreams_) {
    if (up->open) return false;
  }
  return true;
}

SubscriberStats Subscriber::stats() const {
  std::lock_guard lk(mu_);
  SubscriberStats s = stats_;
  s.buffered = inbox_.size();
  return s;
}

}  // namespace relisten
