#pragma once

#include <atomic>
#include <cstdint>
#include <mutex>
#include <string>
#include <string_view>
#include <thread>
#include <utility>
#include <vector>

#include "raekit/rae.hpp"

// Streaming mediator: accepts windows over a TCP socket, applies a loaded
// model to each section and returns the transformed section. Frames are
// length-prefixed: version byte, kind byte, u32 LE payload length, payload.
// Window payloads carry k*d little-endian float32 values, row-major
// channels-first, in raw sensor units; the server normalizes with the
// model's stored statistics and de-normalizes before replying.
namespace raekit::mediator {

inline constexpr std::uint8_t kProtocolVersion = 1;
inline constexpr std::size_t kFrameHeaderSize = 6;
// Declared payload lengths above this are treated as malformed frames.
inline constexpr std::size_t kMaxPayloadBytes = std::size_t{1} << 24;

enum class FrameKind : std::uint8_t {
  Hello = 0,
  Window = 1,
  Transformed = 2,
  Error = 3,
};

struct Frame {
  std::uint8_t version = kProtocolVersion;
  FrameKind kind = FrameKind::Hello;
  std::string payload;

  bool operator==(const Frame&) const = default;
};

std::string encode_frame(const Frame& frame);
std::string encode_frame(FrameKind kind, std::string payload);

// Throws IncompleteFrameError when bytes end before the declared length and
// ProtocolError on an unknown version or kind.
Frame decode_frame(std::string_view bytes);

// Header peek: total size of the frame starting at bytes[0], or
// IncompleteFrameError if even the header is missing.
std::size_t frame_size(std::string_view bytes);

// Hello payload: u32 LE k, u32 LE d.
std::string hello_payload(std::uint32_t channels, std::uint32_t window_len);
std::pair<std::uint32_t, std::uint32_t> parse_hello(std::string_view payload);

std::string window_payload(const nn::Matrix& window_values);
nn::Matrix parse_window_payload(std::string_view payload, Eigen::Index channels,
                                Eigen::Index window_len);

enum class ErrorCode : std::uint8_t {
  ShapeMismatch = 1,
  MalformedFrame = 2,
  Protocol = 3,
  BadPayload = 4,
};

// Error payload: one code byte followed by a UTF-8 message.
std::string error_payload(ErrorCode code, std::string_view message);
std::pair<ErrorCode, std::string> parse_error(std::string_view payload);

// One handler thread per connection over an immutable shared model. Binding
// port 0 picks an ephemeral port, reported by port().
class MediatorServer {
 public:
  MediatorServer(rae::TrainedRae model, std::string host, std::uint16_t port);
  ~MediatorServer();

  MediatorServer(const MediatorServer&) = delete;
  MediatorServer& operator=(const MediatorServer&) = delete;

  void start();
  void stop();
  std::uint16_t port() const { return port_; }

 private:
  void accept_loop();
  void handle_connection(int fd);

  rae::TrainedRae model_;
  std::string host_;
  std::uint16_t port_;
  int listen_fd_ = -1;
  std::thread accept_thread_;
  std::atomic<bool> stopping_{false};
  std::mutex mutex_;
  std::vector<int> connection_fds_;
  std::vector<std::thread> connection_threads_;
};

// Blocking entry point for the CLI; runs until SIGINT/SIGTERM.
void serve(rae::TrainedRae model, const std::string& host, std::uint16_t port);

// Minimal synchronous client, used by tests and the CLI's send mode.
class MediatorClient {
 public:
  MediatorClient(const std::string& host, std::uint16_t port);
  ~MediatorClient();

  MediatorClient(const MediatorClient&) = delete;
  MediatorClient& operator=(const MediatorClient&) = delete;

  // Sends a frame and blocks for the next one from the server.
  Frame round_trip(const Frame& frame);
  void send_frame(const Frame& frame);
  Frame read_frame();

  // Hello handshake; throws ProtocolError if the server rejects the shape.
  void handshake(std::uint32_t channels, std::uint32_t window_len);

  // Raw-scale window in, raw-scale transformed window out.
  nn::Matrix transform(const nn::Matrix& window_values);

 private:
  int fd_ = -1;
  std::string buffer_;
  Eigen::Index channels_ = 0;
  Eigen::Index window_len_ = 0;
};

}  // namespace raekit::mediator
