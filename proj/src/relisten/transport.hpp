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

#ifndef RELISTEN_TRANSPORT_HPP_
#define RELISTEN_TRANSPORT_HPP_

#include <condition_variable>
#include <cstdint>
#include <deque>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include "relisten/types.hpp"

namespace relisten {

struct Endpoint {
  std::string host;
  std::uint16_t port = 0;

  /// Parses "host:port"; throws Error(parse).
  static Endpoint parse(const std::string& addr);
  std::string str() const { return host + ":" + std::to_string(port); }
};

/// Binds a TCP listener for one topic. Subscribers connect, send the topic
/// name and are acknowledged; every publish() then reaches all acknowledged
/// subscribers as a u32-length-prefixed envelope.
///
/// publish() may be called from one thread at a time.
class Publisher {
public:
  /// addr "host:0" binds an ephemeral port; see address().
  Publisher(std::string topic, const std::string& addr);
  ~Publisher();
  Publisher(const Publisher&) = delete;
  Publisher& operator=(const Publisher&) = delete;

  const std::string& topic() const { return topic_; }
  std::string address() const { return bound_.str(); }

  /// Returns the assigned seq. Throws Error(size) for payloads over 16 MiB,
  /// Error(transport) once closed, Error(contract) when capture_ts_us goes
  /// backwards or lies in the future.
  std::uint64_t publish(PayloadKind kind, std::vector<std::uint8_t> payload,
                        std::uint64_t capture_ts_us);

  bool wait_for_subscribers(std::size_t n, int timeout_ms) const;
  std::size_t subscriber_count() const;

  /// Disconnects all subscribers, which then observe end of stream.
  void close();

private:
  void accept_loop();

  std::string topic_;
  Endpoint bound_;
  int listen_fd_ = -1;
  std::thread acceptor_;
  mutable std::mutex mu_;
  mutable std::condition_variable cv_;
  std::vector<int> conns_;
  bool closed_ = false;
  std::uint64_t next_seq_ = 0;
  std::uint64_t last_capture_ = 0;
};

struct Delivery {
  TimedEnvelope envelope;
  std::uint64_t recv_ts_us = 0;
};

struct SubscriberStats {
  std::uint64_t received = 0;
  std::uint64_t dropped = 0;   ///< evicted by drop-oldest overflow
  std::uint64_t foreign = 0;   ///< envelopes for topics never subscribed
  std::size_t buffered = 0;
};

/// Bounded inbox filled by one receive thread per upstream connection and
/// drained by a single consumer. On overflow the oldest envelope is dropped.
class Subscriber {
public:
  explicit Subscriber(std::size_t capacity = 256);
  ~Subscriber();
  Subscriber(const Subscriber&) = delete;
  Subscriber& operator=(const Subscriber&) = delete;

  /// Blocks until the publisher acknowledged the subscription.
  void subscribe(const std::string& topic, const std::string& addr, int timeout_ms = 2000);

  /// Oldest buffered envelope, or nullopt after timeout_ms (or at drain).
  std::optional<Delivery> next(int timeout_ms);

  /// True when every upstream has closed and the inbox is empty.
  bool drained() const;
  SubscriberStats stats() const;
  std::size_t capacity() const { return capacity_; }

private:
  struct Upstream {
    int fd = -1;
    std::thread reader;
    bool open = true;
  };
  void read_loop(Upstream* up);

  std::size_t capacity_;
  mutable std::mutex mu_;
  std::condition_variable cv_;
  std::deque<Delivery> inbox_;
  std::set<std::string> topics_;
  std::vector<std::unique_ptr<Upstream>> upstreams_;
  SubscriberStats stats_;
};

}  // namespace relisten

#endif  // RELISTEN_TRANSPORT_HPP_
