#include "raekit/mediator.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <bit>
#include <cerrno>
#include <cmath>
#include <csignal>
#include <cstring>

namespace raekit::mediator {

namespace {

void put_u32_le(std::string& out, std::uint32_t v) {
  out.push_back(static_cast<char>(v & 0xFF));
  out.push_back(static_cast<char>((v >> 8) & 0xFF));
  out.push_back(static_cast<char>((v >> 16) & 0xFF));
  out.push_back(static_cast<char>((v >> 24) & 0xFF));
}

std::uint32_t get_u32_le(std::string_view bytes, std::size_t pos) {
  return static_cast<std::uint8_t>(bytes[pos]) |
         (static_cast<std::uint32_t>(static_cast<std::uint8_t>(bytes[pos + 1])) << 8) |
         (static_cast<std::uint32_t>(static_cast<std::uint8_t>(bytes[pos + 2])) << 16) |
         (static_cast<std::uint32_t>(static_cast<std::uint8_t>(bytes[pos + 3])) << 24);
}

bool send_all(int fd, std::string_view bytes) {
  std::size_t sent = 0;
  while (sent < bytes.size()) {
    const ssize_t n = ::send(fd, bytes.data() + sent, bytes.size() - sent, MSG_NOSIGNAL);
    if (n <= 0) {
      if (n < 0 && errno == EINTR) continue;
      return false;
    }
    sent += static_cast<std::size_t>(n);
  }
  return true;
}

// Reads until buffer holds at least `needed` bytes; false on EOF/error.
bool read_until(int fd, std::string& buffer, std::size_t needed) {
  char chunk[4096];
  while (buffer.size() < needed) {
    const ssize_t n = ::recv(fd, chunk, sizeof(chunk), 0);
    if (n <= 0) {
      if (n < 0 && errno == EINTR) continue;
      return false;
    }
    buffer.append(chunk, static_cast<std::size_t>(n));
  }
  return true;
}

sockaddr_in make_address(const std::string& host, std::uint16_t port) {
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(port);
  const std::string name = host == "localhost" ? "127.0.0.1" : host;
  if (name.empty() || name == "0.0.0.0") {
    addr.sin_addr.s_addr = htonl(INADDR_ANY);
  } else if (::inet_pton(AF_INET, name.c_str(), &addr.sin_addr) != 1) {
    throw IoError("bad IPv4 address: " + host);
  }
  return addr;
}

}  // namespace

std::string encode_frame(const Frame& frame) {
  std::string out;
  out.reserve(kFrameHeaderSize + frame.payload.size());
  out.push_back(static_cast<char>(frame.version));
  out.push_back(static_cast<char>(frame.kind));
  put_u32_le(out, static_cast<std::uint32_t>(frame.payload.size()));
  out += frame.payload;
  return out;
}

std::string encode_frame(FrameKind kind, std::string payload) {
  Frame frame;
  frame.kind = kind;
  frame.payload = std::move(payload);
  return encode_frame(frame);
}

std::size_t frame_size(std::string_view bytes) {
  if (bytes.size() < kFrameHeaderSize) {
    throw IncompleteFrameError("frame header incomplete");
  }
  return kFrameHeaderSize + get_u32_le(bytes, 2);
}

Frame decode_frame(std::string_view bytes) {
  const std::size_t total = frame_size(bytes);
  if (bytes.size() < total) {
    throw IncompleteFrameError("frame declares " +
                               std::to_string(total - kFrameHeaderSize) +
                               " payload bytes, got " +
                               std::to_string(bytes.size() - kFrameHeaderSize));
  }
  Frame frame;
  frame.version = static_cast<std::uint8_t>(bytes[0]);
  if (frame.version != kProtocolVersion) {
    throw ProtocolError("unsupported protocol version " + std::to_string(frame.version));
  }
  const auto kind = static_cast<std::uint8_t>(bytes[1]);
  if (kind > static_cast<std::uint8_t>(FrameKind::Error)) {
    throw ProtocolError("unknown frame kind " + std::to_string(kind));
  }
  frame.kind = static_cast<FrameKind>(kind);
  frame.payload = std::string(bytes.substr(kFrameHeaderSize, total - kFrameHeaderSize));
  return frame;
}

std::string hello_payload(std::uint32_t channels, std::uint32_t window_len) {
  std::string out;
  put_u32_le(out, channels);
  put_u32_le(out, window_len);
  return out;
}

std::pair<std::uint32_t, std::uint32_t> parse_hello(std::string_view payload) {
  if (payload.size() != 8) throw ProtocolError("hello payload must be 8 bytes");
  return {get_u32_le(payload, 0), get_u32_le(payload, 4)};
}

std::string window_payload(const nn::Matrix& window_values) {
  std::string out;
  out.reserve(static_cast<std::size_t>(window_values.size()) * 4);
  for (Eigen::Index c = 0; c < window_values.rows(); ++c) {
    for (Eigen::Index t = 0; t < window_values.cols(); ++t) {
      put_u32_le(out, std::bit_cast<std::uint32_t>(static_cast<float>(window_values(c, t))));
    }
  }
  return out;
}

nn::Matrix parse_window_payload(std::string_view payload, Eigen::Index channels,
                                Eigen::Index window_len) {
  const auto expected = static_cast<std::size_t>(channels * window_len) * 4;
  if (payload.size() != expected) {
    throw ProtocolError("window payload must be " + std::to_string(expected) +
                        " bytes, got " + std::to_string(payload.size()));
  }
  nn::Matrix values(channels, window_len);
  std::size_t pos = 0;
  for (Eigen::Index c = 0; c < channels; ++c) {
    for (Eigen::Index t = 0; t < window_len; ++t) {
      values(c, t) = std::bit_cast<float>(get_u32_le(payload, pos));
      pos += 4;
    }
  }
  return values;
}

std::string error_payload(ErrorCode code, std::string_view message) {
  std::string out;
  out.push_back(static_cast<char>(code));
  out += message;
  return out;
}

std::pair<ErrorCode, std::string> parse_error(std::string_view payload) {
  if (payload.empty()) throw ProtocolError("error payload missing code byte");
  return {static_cast<ErrorCode>(payload[0]), std::string(payload.substr(1))};
}

MediatorServer::MediatorServer(rae::TrainedRae model, std::string host,
                               std::uint16_t port)
    : model_(std::move(model)), host_(std::move(host)), port_(port) {}

MediatorServer::~MediatorServer() { stop(); }

void MediatorServer::start() {
  listen_fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
  if (listen_fd_ < 0) throw IoError("socket() failed");
  const int one = 1;
  ::setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
  sockaddr_in addr = make_address(host_, port_);
  if (::bind(listen_fd_, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0) {
    ::close(listen_fd_);
    listen_fd_ = -1;
    throw IoError("bind to " + host_ + ":" + std::to_string(port_) + " failed: " +
                  std::strerror(errno));
  }
  if (::listen(listen_fd_, 64) != 0) {
    ::close(listen_fd_);
    listen_fd_ = -1;
    throw IoError("listen() failed");
  }
  socklen_t len = sizeof(addr);
  if (::getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&addr), &len) == 0) {
    port_ = ntohs(addr.sin_port);
  }
  accept_thread_ = std::thread(&MediatorServer::accept_loop, this);
}

void MediatorServer::stop() {
  if (stopping_.exchange(true)) {
    if (accept_thread_.joinable()) accept_thread_.join();
    return;
  }
  if (listen_fd_ >= 0) {
    ::shutdown(listen_fd_, SHUT_RDWR);
    ::close(listen_fd_);
    listen_fd_ = -1;
  }
  {
    std::lock_guard<std::mutex> lock(mutex_);
    for (int fd : connection_fds_) ::shutdown(fd, SHUT_RDWR);
  }
  if (accept_thread_.joinable()) accept_thread_.join();
  std::vector<std::thread> workers;
  {
    std::lock_guard<std::mutex> lock(mutex_);
    workers.swap(connection_threads_);
  }
  for (auto& t : workers) {
    if (t.joinable()) t.join();
  }
}

void MediatorServer::accept_loop() {
  while (!stopping_.load()) {
    const int fd = ::accept(listen_fd_, nullptr, nullptr);
    if (fd < 0) {
      if (errno == EINTR) continue;
      break;  // listener closed
    }
    std::lock_guard<std::mutex> lock(mutex_);
    if (stopping_.load()) {
      ::close(fd);
      break;
    }
    connection_fds_.push_back(fd);
    connection_threads_.emplace_back(&MediatorServer::handle_connection, this, fd);
  }
}

void MediatorServer::handle_connection(int fd) {
  // Unregister before closing so stop() never shuts down a reused fd.
  struct FdGuard {
    MediatorServer* server;
    int fd;
    ~FdGuard() {
      {
        std::lock_guard<std::mutex> lock(server->mutex_);
        std::erase(server->connection_fds_, fd);
      }
      ::close(fd);
    }
  } guard{this, fd};

  const Eigen::Index k = model_.topology.channels;
  const Eigen::Index d = model_.topology.window_len;
  std::string buffer;
  bool greeted = false;

  const auto send_error_and_close = [&](ErrorCode code, std::string_view message) {
    send_all(fd, encode_frame(FrameKind::Error, error_payload(code, message)));
  };

  for (;;) {
    // Pull one complete frame off the stream.
    std::size_t need = kFrameHeaderSize;
    while (true) {
      if (!read_until(fd, buffer, need)) {
        return;  // peer closed or vanished
      }
      need = frame_size(buffer);
      if (need > kFrameHeaderSize + kMaxPayloadBytes) {
        send_error_and_close(ErrorCode::MalformedFrame, "frame too large");
        return;
      }
      if (buffer.size() >= need) break;
    }
    Frame frame;
    try {
      frame = decode_frame(buffer);
    } catch (const ProtocolError& e) {
      send_error_and_close(ErrorCode::MalformedFrame, e.what());
      return;
    }
    buffer.erase(0, frame_size(buffer));

    if (!greeted) {
      if (frame.kind != FrameKind::Hello) {
        send_error_and_close(ErrorCode::Protocol, "expected hello frame first");
        return;
      }
      std::uint32_t got_k = 0, got_d = 0;
      try {
        std::tie(got_k, got_d) = parse_hello(frame.payload);
      } catch (const ProtocolError& e) {
        send_error_and_close(ErrorCode::MalformedFrame, e.what());
        return;
      }
      if (got_k != static_cast<std::uint32_t>(k) ||
          got_d != static_cast<std::uint32_t>(d)) {
        send_error_and_close(ErrorCode::ShapeMismatch,
                             "model expects k=" + std::to_string(k) +
                                 " d=" + std::to_string(d));
        return;
      }
      if (!send_all(fd, encode_frame(FrameKind::Hello, hello_payload(got_k, got_d)))) {
        return;
      }
      greeted = true;
      continue;
    }

    if (frame.kind != FrameKind::Window) {
      send_error_and_close(ErrorCode::Protocol, "expected window frame");
      return;
    }
    nn::Matrix values;
    try {
      values = parse_window_payload(frame.payload, k, d);
    } catch (const ProtocolError& e) {
      send_error_and_close(ErrorCode::MalformedFrame, e.what());
      return;
    }
    if (!values.allFinite()) {
      send_error_and_close(ErrorCode::BadPayload, "window contains non-finite values");
      return;
    }
    data::Window window;
    window.values = std::move(values);
    const data::Window transformed = rae::transform_raw_window(model_, window);
    if (!send_all(fd, encode_frame(FrameKind::Transformed,
                                   window_payload(transformed.values)))) {
      return;
    }
  }
}

void serve(rae::TrainedRae model, const std::string& host, std::uint16_t port) {
  sigset_t signals;
  sigemptyset(&signals);
  sigaddset(&signals, SIGINT);
  sigaddset(&signals, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &signals, nullptr);

  MediatorServer server(std::move(model), host, port);
  server.start();
  int received = 0;
  sigwait(&signals, &received);
  server.stop();
}

MediatorClient::MediatorClient(const std::string& host, std::uint16_t port) {
  fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
  if (fd_ < 0) throw IoError("socket() failed");
  sockaddr_in addr = make_address(host.empty() ? "127.0.0.1" : host, port);
  if (::connect(fd_, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0) {
    ::close(fd_);
    fd_ = -1;
    throw IoError("connect to " + host + ":" + std::to_string(port) + " failed");
  }
}

MediatorClient::~MediatorClient() {
  if (fd_ >= 0) ::close(fd_);
}

void MediatorClient::send_frame(const Frame& frame) {
  if (!send_all(fd_, encode_frame(frame))) throw IoError("send failed");
}

Frame MediatorClient::read_frame() {
  std::size_t need = kFrameHeaderSize;
  while (true) {
    if (!read_until(fd_, buffer_, need)) throw IoError("connection closed by server");
    try {
      need = frame_size(buffer_);
    } catch (const IncompleteFrameError&) {
      need = kFrameHeaderSize;
      continue;
    }
    if (buffer_.size() >= need) break;
  }
  Frame frame = decode_frame(buffer_);
  buffer_.erase(0, frame_size(buffer_));
  return frame;
}

Frame MediatorClient::round_trip(const Frame& frame) {
  send_frame(frame);
  return read_frame();
}

void MediatorClient::handshake(std::uint32_t channels, std::uint32_t window_len) {
  Frame hello;
  hello.kind = FrameKind::Hello;
  hello.payload = hello_payload(channels, window_len);
  const Frame reply = round_trip(hello);
  if (reply.kind == FrameKind::Error) {
    const auto [code, message] = parse_error(reply.payload);
    throw ProtocolError("server rejected hello (code " +
                        std::to_string(static_cast<int>(code)) + "): " + message);
  }
  if (reply.kind != FrameKind::Hello) {
    throw ProtocolError("unexpected reply to hello");
  }
  channels_ = static_cast<Eigen::Index>(channels);
  window_len_ = static_cast<Eigen::Index>(window_len);
}

nn::Matrix MediatorClient::transform(const nn::Matrix& window_values) {
  Frame frame;
  frame.kind = FrameKind::Window;
  frame.payload = window_payload(window_values);
  const Frame reply = round_trip(frame);
  if (reply.kind == FrameKind::Error) {
    const auto [code, message] = parse_error(reply.payload);
    throw ProtocolError("server error (code " + std::to_string(static_cast<int>(code)) +
                        "): " + message);
  }
  if (reply.kind != FrameKind::Transformed) {
    throw ProtocolError("unexpected reply to window frame");
  }
  return parse_window_payload(reply.payload, channels_, window_len_);
}

}  // namespace raekit::mediator
