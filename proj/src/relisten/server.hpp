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

#ifndef RELISTEN_SERVER_HPP_
#define RELISTEN_SERVER_HPP_

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "relisten/types.hpp"

namespace relisten {

struct ServerOptions {
  std::string addr = "127.0.0.1:9001";  ///< port 0 picks an ephemeral port
  int fps = 30;
  std::size_t queue_capacity = 128;
  int sndbuf_bytes = 16384;             ///< per-client socket send buffer; 0 keeps the OS default
  std::string hello_reply;              ///< sent after a valid hello; empty builds a default summary
};

struct SessionStats {
  std::uint64_t id = 0;
  std::uint64_t enqueued = 0;
  std::uint64_t sent = 0;
  std::uint64_t dropped = 0;
  std::uint64_t pending = 0;
  bool greeted = false;  ///< hello received and answered
  bool open = true;
};

struct ServerStats {
  std::uint64_t frames_in = 0;
  std::uint64_t frames_paced = 0;
  std::uint64_t frames_late = 0;  ///< skipped because their pacing slot had passed
  std::uint64_t sessions_opened = 0;
  std::uint64_t sessions_closed = 0;
};

/// Paced JSON frame streamer over WebSocket. Frames submitted by the
/// pipeline are released one per 1/fps tick to every client's bounded
/// drop-oldest queue. Clients must send {"hello":"relisten","version":1}
/// before anything is written to them; frames queue from connect time.
class FrameServer {
public:
  explicit FrameServer(ServerOptions options);
  ~FrameServer();
  FrameServer(const FrameServer&) = delete;
  FrameServer& operator=(const FrameServer&) = delete;

  /// Binds and starts the accept and pacing threads; Error(startup) when the
  /// address cannot be bound.
  void start();
  /// Bound host:port.
  std::string address() const;

  void submit(std::vector<ArkitFrame> frames);
  /// Signals that no more frames will be submitted.
  void finish_input();
  /// True once every submitted frame was paced and every greeted client's
  /// queue is empty, false on timeout.
  bool wait_drained(int timeout_ms);
  void stop();

  /// Called on the pacing thread for each released frame, with its release time.
  void set_observer(std::function<void(const ArkitFrame&, std::uint64_t release_us)> fn);

  std::vector<SessionStats> sessions() const;
  ServerStats stats() const;

  /// Default hello reply for `fps` and `queue_capacity`.
  static std::string default_summary(int fps, std::size_t queue_capacity);

private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// {"hello":"relisten","version":1}
std::string hello_message();
/// True for a well-formed hello with a supported version.
bool is_valid_hello(const std::string& text);

}  // namespace relisten

#endif  // RELISTEN_SERVER_HPP_
