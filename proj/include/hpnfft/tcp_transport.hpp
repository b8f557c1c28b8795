#pragma once

// Stream-socket transport for multi-process runs.
//
// Bootstrap: rank 0 listens on a known address. Every other rank opens its
// own listener, connects to rank 0 and announces (rank, port) with HELLO.
// Once all ranks have checked in, rank 0 answers each with PEER_TABLE.
// Rank r then connects to every rank in [1, r) and accepts connections from
// the ranks above it, so each pair of ranks ends up with one socket.

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <cstring>
#include <string>
#include <utility>
#include <vector>

#include "hpnfft/errors.hpp"
#include "hpnfft/transport.hpp"
#include "hpnfft/wire.hpp"

namespace hpnfft {

struct Endpoint {
  std::string host;
  std::uint16_t port = 0;
};

/// Parses "HOST:PORT".
inline Endpoint parse_endpoint(const std::string& text) {
  const auto colon = text.rfind(':');
  if (colon == std::string::npos || colon == 0 || colon + 1 == text.size()) {
    throw Error("expected HOST:PORT, got '" + text + "'");
  }
  Endpoint e;
  e.host = text.substr(0, colon);
  const auto port = std::stoul(text.substr(colon + 1));
  if (port > 65535) throw Error("port out of range in '" + text + "'");
  e.port = static_cast<std::uint16_t>(port);
  return e;
}

namespace detail {

class Socket {
 public:
  Socket() = default;
  explicit Socket(int fd) : fd_(fd) {}
  Socket(const Socket&) = delete;
  Socket& operator=(const Socket&) = delete;
  Socket(Socket&& other) noexcept : fd_(std::exchange(other.fd_, -1)) {}
  Socket& operator=(Socket&& other) noexcept {
    if (this != &other) {
      reset();
      fd_ = std::exchange(other.fd_, -1);
    }
    return *this;
  }
  ~Socket() { reset(); }

  int fd() const noexcept { return fd_; }
  bool valid() const noexcept { return fd_ >= 0; }
  void reset() {
    if (fd_ >= 0) ::close(fd_);
    fd_ = -1;
  }

 private:
  int fd_ = -1;
};

inline std::string errno_text() { return std::strerror(errno); }

inline in_addr resolve_ipv4(const std::string& host, int peer) {
  addrinfo hints{};
  hints.ai_family = AF_INET;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* res = nullptr;
  if (::getaddrinfo(host.c_str(), nullptr, &hints, &res) != 0 || res == nullptr) {
    throw CommunicationError(peer, "cannot resolve host '" + host + "'");
  }
  const in_addr addr = reinterpret_cast<sockaddr_in*>(res->ai_addr)->sin_addr;
  ::freeaddrinfo(res);
  return addr;
}

inline Socket listen_on(in_addr addr, std::uint16_t port, int backlog) {
  Socket s(::socket(AF_INET, SOCK_STREAM, 0));
  if (!s.valid()) throw CommunicationError(-1, "socket: " + errno_text());
  int one = 1;
  ::setsockopt(s.fd(), SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
  sockaddr_in sa{};
  sa.sin_family = AF_INET;
  sa.sin_addr = addr;
  sa.sin_port = htons(port);
  if (::bind(s.fd(), reinterpret_cast<sockaddr*>(&sa), sizeof(sa)) != 0) {
    throw CommunicationError(-1, "bind: " + errno_text());
  }
  if (::listen(s.fd(), backlog) != 0) throw CommunicationError(-1, "listen: " + errno_text());
  return s;
}

inline std::uint16_t local_port(const Socket& s) {
  sockaddr_in sa{};
  socklen_t len = sizeof(sa);
  ::getsockname(s.fd(), reinterpret_cast<sockaddr*>(&sa), &len);
  return ntohs(sa.sin_port);
}

inline void set_nodelay(const Socket& s) {
  int one = 1;
  ::setsockopt(s.fd(), IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
}

inline Socket accept_one(const Socket& listener, int timeout_ms, in_addr* peer_addr) {
  pollfd pfd{listener.fd(), POLLIN, 0};
  const int ready = ::poll(&pfd, 1, timeout_ms);
  if (ready <= 0) throw CommunicationError(-1, ready == 0 ? "timed out waiting for peers" : "poll: " + errno_text());
  sockaddr_in sa{};
  socklen_t len = sizeof(sa);
  Socket s(::accept(listener.fd(), reinterpret_cast<sockaddr*>(&sa), &len));
  if (!s.valid()) throw CommunicationError(-1, "accept: " + errno_text());
  if (peer_addr != nullptr) *peer_addr = sa.sin_addr;
  set_nodelay(s);
  return s;
}

inline Socket connect_to(in_addr addr, std::uint16_t port, int peer, int timeout_ms) {
  const auto deadline = std::chrono::steady_clock::now() + std::chrono::milliseconds(timeout_ms);
  while (true) {
    Socket s(::socket(AF_INET, SOCK_STREAM, 0));
    if (!s.valid()) throw CommunicationError(peer, "socket: " + errno_text());
    sockaddr_in sa{};
    sa.sin_family = AF_INET;
    sa.sin_addr = addr;
    sa.sin_port = htons(port);
    if (::connect(s.fd(), reinterpret_cast<sockaddr*>(&sa), sizeof(sa)) == 0) {
      set_nodelay(s);
      return s;
    }
    if (std::chrono::steady_clock::now() > deadline) throw CommunicationError(peer, "connect: " + errno_text());
    ::usleep(20000);
  }
}

inline void write_all(const Socket& s, std::span<const std::byte> bytes, int peer) {
  std::size_t done = 0;
  while (done < bytes.size()) {
    const auto n = ::send(s.fd(), bytes.data() + done, bytes.size() - done, MSG_NOSIGNAL);
    if (n < 0 && errno == EINTR) continue;
    if (n <= 0) throw CommunicationError(peer, "send: " + errno_text());
    done += static_cast<std::size_t>(n);
  }
}

inline void read_all(const Socket& s, std::span<std::byte> bytes, int peer) {
  std::size_t done = 0;
  while (done < bytes.size()) {
    const auto n = ::recv(s.fd(), bytes.data() + done, bytes.size() - done, 0);
    if (n < 0 && errno == EINTR) continue;
    if (n == 0) throw CommunicationError(peer, "connection closed");
    if (n < 0) throw CommunicationError(peer, "recv: " + errno_text());
    done += static_cast<std::size_t>(n);
  }
}

inline Frame read_frame(const Socket& s, int peer) {
  std::vector<std::byte> header(kFrameHeaderSize);
  read_all(s, header, peer);
  const auto h = decode_frame_header(header);
  Frame f;
  f.type = h.type;
  f.payload.resize(h.payload_len);
  read_all(s, f.payload, peer);
  return f;
}

inline void write_frame(const Socket& s, const Frame& f, int peer) { write_all(s, encode_frame(f), peer); }

struct PeerAddress {
  std::uint32_t ipv4 = 0;  // network byte order
  std::uint16_t port = 0;
};

inline Frame encode_hello(int rank, PeerAddress addr) {
  Frame f{MsgType::hello, {}};
  ByteWriter w(f.payload);
  w.put<std::uint32_t>(static_cast<std::uint32_t>(rank));
  w.put<std::uint32_t>(addr.ipv4);
  w.put<std::uint16_t>(addr.port);
  return f;
}

inline std::pair<int, PeerAddress> decode_hello(const Frame& f) {
  expect_type(f, MsgType::hello);
  ByteReader r(f.payload);
  const auto rank = static_cast<int>(r.get<std::uint32_t>());
  PeerAddress a;
  a.ipv4 = r.get<std::uint32_t>();
  a.port = r.get<std::uint16_t>();
  r.expect_end();
  return {rank, a};
}

inline Frame encode_peer_table(const std::vector<PeerAddress>& table) {
  Frame f{MsgType::peer_table, {}};
  ByteWriter w(f.payload);
  w.put<std::uint32_t>(static_cast<std::uint32_t>(table.size()));
  for (const auto& a : table) {
    w.put<std::uint32_t>(a.ipv4);
    w.put<std::uint16_t>(a.port);
  }
  return f;
}

inline std::vector<PeerAddress> decode_peer_table(const Frame& f) {
  expect_type(f, MsgType::peer_table);
  ByteReader r(f.payload);
  const auto n = r.get<std::uint32_t>();
  if (n > r.remaining() / 6) throw ProtocolError("peer table size exceeds payload");
  std::vector<PeerAddress> table(n);
  for (auto& a : table) {
    a.ipv4 = r.get<std::uint32_t>();
    a.port = r.get<std::uint16_t>();
  }
  r.expect_end();
  return table;
}

}  // namespace detail

/// One rank of a multi-process group connected by TCP sockets.
class TcpTransport final : public Transport {
 public:
  int rank() const override { return rank_; }
  int size() const override { return static_cast<int>(peers_.size()); }

  /// Rank 0: listens on an already-bound socket and waits for `size - 1`
  /// ranks to check in.
  static TcpTransport host(detail::Socket listener, int size, int timeout_ms = 30000) {
    if (size < 1) throw InvalidTopology("topology needs at least one rank");
    TcpTransport t;
    t.rank_ = 0;
    t.peers_.resize(static_cast<std::size_t>(size));
    std::vector<detail::PeerAddress> table(static_cast<std::size_t>(size));
    for (int i = 1; i < size; ++i) {
      in_addr from{};
      auto s = detail::accept_one(listener, timeout_ms, &from);
      const auto [rank, addr] = detail::decode_hello(detail::read_frame(s, -1));
      if (rank < 1 || rank >= size || t.peers_[static_cast<std::size_t>(rank)].valid()) {
        throw ProtocolError("bad or duplicate rank " + std::to_string(rank) + " in HELLO");
      }
      table[static_cast<std::size_t>(rank)] = {from.s_addr, addr.port};
      t.peers_[static_cast<std::size_t>(rank)] = std::move(s);
    }
    const auto table_frame = detail::encode_peer_table(table);
    for (int i = 1; i < size; ++i) detail::write_frame(t.peers_[static_cast<std::size_t>(i)], table_frame, i);
    return t;
  }

  /// Convenience for rank 0: bind HOST:PORT (port 0 picks a free one) and
  /// report the bound port through `bound_port` before blocking.
  static detail::Socket bind_listener(const Endpoint& at, int backlog, std::uint16_t* bound_port) {
    auto listener = detail::listen_on(detail::resolve_ipv4(at.host, 0), at.port, backlog);
    if (bound_port != nullptr) *bound_port = detail::local_port(listener);
    return listener;
  }

  /// Rank r > 0: joins the group hosted at `root`.
  static TcpTransport join(const Endpoint& root, int rank, int timeout_ms = 30000) {
    if (rank < 1) throw InvalidTopology("joining ranks must be >= 1");
    in_addr any{};
    any.s_addr = htonl(INADDR_ANY);
    auto listener = detail::listen_on(any, 0, 64);
    const auto my_port = detail::local_port(listener);

    TcpTransport t;
    t.rank_ = rank;
    auto root_socket = detail::connect_to(detail::resolve_ipv4(root.host, 0), root.port, 0, timeout_ms);
    detail::write_frame(root_socket, detail::encode_hello(rank, {0, my_port}), 0);
    const auto table = detail::decode_peer_table(detail::read_frame(root_socket, 0));
    const int size = static_cast<int>(table.size());
    if (rank >= size) throw ProtocolError("rank " + std::to_string(rank) + " outside peer table");
    t.peers_.resize(table.size());
    t.peers_[0] = std::move(root_socket);

    for (int s = 1; s < rank; ++s) {
      in_addr addr{};
      addr.s_addr = table[static_cast<std::size_t>(s)].ipv4;
      auto sock = detail::connect_to(addr, table[static_cast<std::size_t>(s)].port, s, timeout_ms);
      detail::write_frame(sock, detail::encode_hello(rank, {0, my_port}), s);
      t.peers_[static_cast<std::size_t>(s)] = std::move(sock);
    }
    for (int i = rank + 1; i < size; ++i) {
      auto sock = detail::accept_one(listener, timeout_ms, nullptr);
      const auto [from, addr] = detail::decode_hello(detail::read_frame(sock, -1));
      (void)addr;
      if (from <= rank || from >= size || t.peers_[static_cast<std::size_t>(from)].valid()) {
        throw ProtocolError("unexpected HELLO from rank " + std::to_string(from));
      }
      t.peers_[static_cast<std::size_t>(from)] = std::move(sock);
    }
    return t;
  }

  TcpTransport(TcpTransport&& other) noexcept : rank_(other.rank_), peers_(std::move(other.peers_)) {}

 protected:
  void send_bytes(int peer, std::vector<std::byte> bytes) override {
    detail::write_all(peers_[static_cast<std::size_t>(peer)], bytes, peer);
  }

  Frame recv_frame(int peer) override { return detail::read_frame(peers_[static_cast<std::size_t>(peer)], peer); }

 private:
  TcpTransport() = default;

  int rank_ = 0;
  std::vector<detail::Socket> peers_;
};

}  // namespace hpnfft
