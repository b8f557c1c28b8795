#pragma once

#include <atomic>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <exception>
#include <memory>
#include <mutex>
#include <thread>
#include <type_traits>
#include <vector>

#include "hpnfft/errors.hpp"
#include "hpnfft/wire.hpp"

namespace hpnfft {

/// Rank-addressed, ordered point-to-point delivery of frames. Frames pass
/// through the wire encoding on every transport.
class Transport {
 public:
  virtual ~Transport() = default;

  virtual int rank() const = 0;
  virtual int size() const = 0;

  void send(int peer, const Frame& frame) {
    check_peer(peer);
    send_bytes(peer, encode_frame(frame));
    sends_.fetch_add(1, std::memory_order_relaxed);
  }

  Frame recv(int peer) {
    check_peer(peer);
    return recv_frame(peer);
  }

  /// Number of frames sent by this endpoint since construction.
  std::uint64_t sends() const noexcept { return sends_.load(std::memory_order_relaxed); }

 protected:
  virtual void send_bytes(int peer, std::vector<std::byte> bytes) = 0;
  virtual Frame recv_frame(int peer) = 0;

 private:
  void check_peer(int peer) const {
    if (peer < 0 || peer >= size() || peer == rank()) {
      throw CommunicationError(peer, "not a remote rank of a " + std::to_string(size()) + "-rank topology");
    }
  }

  std::atomic<std::uint64_t> sends_{0};
};

/// This participant's view of a collective: its rank, the node count, and
/// the transport reaching its peers. Rank 0 is the major node.
class Topology {
 public:
  explicit Topology(Transport& transport) : transport_(&transport) {}

  int rank() const { return transport_->rank(); }
  int num_nodes() const { return transport_->size(); }
  bool is_root() const { return rank() == 0; }
  Transport& transport() const { return *transport_; }

 private:
  Transport* transport_;
};

namespace detail {

class Mailbox {
 public:
  void push(std::vector<std::byte> bytes) {
    {
      std::lock_guard lock(mutex_);
      queue_.push_back(std::move(bytes));
    }
    cv_.notify_one();
  }

  /// Blocks for the next message; false once closed and drained.
  bool pop(std::vector<std::byte>& out) {
    std::unique_lock lock(mutex_);
    cv_.wait(lock, [&] { return !queue_.empty() || closed_; });
    if (queue_.empty()) return false;
    out = std::move(queue_.front());
    queue_.pop_front();
    return true;
  }

  void close() {
    {
      std::lock_guard lock(mutex_);
      closed_ = true;
    }
    cv_.notify_all();
  }

 private:
  std::mutex mutex_;
  std::condition_variable cv_;
  std::deque<std::vector<std::byte>> queue_;
  bool closed_ = false;
};

struct InProcessHub {
  explicit InProcessHub(int n) : size(n), boxes(static_cast<std::size_t>(n) * static_cast<std::size_t>(n)) {}

  Mailbox& box(int from, int to) { return boxes[static_cast<std::size_t>(from * size + to)]; }

  void abort() {
    aborted.store(true);
    for (auto& b : boxes) b.close();
  }

  int size;
  std::vector<Mailbox> boxes;
  std::atomic<bool> aborted{false};
};

}  // namespace detail

/// One rank of a group of logical ranks living in the same process.
class InProcessTransport final : public Transport {
 public:
  InProcessTransport(std::shared_ptr<detail::InProcessHub> hub, int rank) : hub_(std::move(hub)), rank_(rank) {}

  int rank() const override { return rank_; }
  int size() const override { return hub_->size; }

 protected:
  void send_bytes(int peer, std::vector<std::byte> bytes) override {
    if (hub_->aborted.load()) throw CommunicationError(peer, "in-process group aborted");
    hub_->box(rank_, peer).push(std::move(bytes));
  }

  Frame recv_frame(int peer) override {
    std::vector<std::byte> bytes;
    if (!hub_->box(peer, rank_).pop(bytes)) throw CommunicationError(peer, "in-process group aborted");
    return decode_frame(bytes);
  }

 private:
  std::shared_ptr<detail::InProcessHub> hub_;
  int rank_;
};

/// Runs `fn(Topology&)` on `ranks` concurrent logical ranks and returns
/// their results in rank order. If any rank throws, the group is aborted
/// so blocked peers fail instead of waiting, and the first error thrown is
/// rethrown here.
template <class Fn>
auto run_in_process(int ranks, Fn&& fn) {
  if (ranks < 1) throw InvalidTopology("topology needs at least one rank");
  using Result = std::invoke_result_t<Fn&, Topology&>;
  auto hub = std::make_shared<detail::InProcessHub>(ranks);
  std::vector<std::unique_ptr<InProcessTransport>> endpoints;
  for (int r = 0; r < ranks; ++r) endpoints.push_back(std::make_unique<InProcessTransport>(hub, r));

  std::mutex failure_mutex;
  std::exception_ptr failure;
  auto guarded = [&](auto&& body) {
    try {
      body();
    } catch (...) {
      {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
      hub->abort();
    }
  };

  if constexpr (std::is_void_v<Result>) {
    std::vector<std::thread> threads;
    for (int r = 0; r < ranks; ++r) {
      threads.emplace_back([&, r] {
        guarded([&] {
          Topology topo(*endpoints[static_cast<std::size_t>(r)]);
          fn(topo);
        });
      });
    }
    for (auto& t : threads) t.join();
    if (failure) std::rethrow_exception(failure);
  } else {
    std::vector<Result> results(static_cast<std::size_t>(ranks));
    std::vector<std::thread> threads;
    for (int r = 0; r < ranks; ++r) {
      threads.emplace_back([&, r] {
        guarded([&] {
          Topology topo(*endpoints[static_cast<std::size_t>(r)]);
          results[static_cast<std::size_t>(r)] = fn(topo);
        });
      });
    }
    for (auto& t : threads) t.join();
    if (failure) std::rethrow_exception(failure);
    return results;
  }
}

}  // namespace hpnfft
