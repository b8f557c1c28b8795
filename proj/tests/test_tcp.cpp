#include <gtest/gtest.h>

#include <future>
#include <optional>
#include <thread>

#include "hpnfft/decomp.hpp"
#include "hpnfft/tcp_transport.hpp"
#include "support.hpp"

using namespace hpnfft;
using namespace testing_support;

namespace {

/// Builds a TCP group of `ranks` on localhost, one thread per rank, and runs
/// `fn(Topology&)` on each. Rank 0's result is returned.
template <class Fn>
auto run_tcp(int ranks, Fn fn) {
  std::uint16_t port = 0;
  auto listener = TcpTransport::bind_listener({"127.0.0.1", 0}, 64, &port);
  using Result = std::invoke_result_t<Fn&, Topology&>;
  std::vector<std::future<Result>> others;
  for (int r = 1; r < ranks; ++r) {
    others.push_back(std::async(std::launch::async, [&fn, port, r] {
      auto t = TcpTransport::join({"127.0.0.1", port}, r, 10000);
      Topology topo(t);
      return fn(topo);
    }));
  }
  auto t = TcpTransport::host(std::move(listener), ranks, 10000);
  Topology topo(t);
  auto root = fn(topo);
  for (auto& f : others) f.get();
  return root;
}

}  // namespace

TEST(TcpEndpoint, Parse) {
  const auto e = parse_endpoint("127.0.0.1:5555");
  EXPECT_EQ(e.host, "127.0.0.1");
  EXPECT_EQ(e.port, 5555);
  EXPECT_EQ(parse_endpoint("localhost:0").port, 0);
  EXPECT_THROW(parse_endpoint("nohost"), Error);
  EXPECT_THROW(parse_endpoint(":80"), Error);
  EXPECT_THROW(parse_endpoint("h:70000"), Error);
}

TEST(TcpTransport, SingleRankNeedsNoPeers) {
  const int got = run_tcp(1, [](Topology& topo) { return topo.num_nodes(); });
  EXPECT_EQ(got, 1);
}

TEST(TcpTransport, EveryPairCanExchangeFrames) {
  const int ranks = 4;
  run_tcp(ranks, [&](Topology& topo) {
    auto& tr = topo.transport();
    for (int peer = 0; peer < ranks; ++peer) {
      if (peer == topo.rank()) continue;
      tr.send(peer, encode_subcell_index(std::vector<std::uint64_t>{static_cast<std::uint64_t>(topo.rank())}));
    }
    for (int peer = 0; peer < ranks; ++peer) {
      if (peer == topo.rank()) continue;
      const auto got = decode_subcell_index(tr.recv(peer));
      EXPECT_EQ(got, std::vector<std::uint64_t>{static_cast<std::uint64_t>(peer)});
    }
    return 0;
  });
}

TEST(TcpTransport, TreeReduceAndCollectivesMatchSerial) {
  std::mt19937_64 rng(1);
  const auto cfg = make_nfft_config(make_index_set({8, 8, 8}), WindowKind::kaiser_bessel, 2.0, 4);
  const auto p = random_points(rng, 3, 1000);
  const auto v = random_values(rng, 1000);
  const auto c = random_coeffs(rng, cfg.index_set);
  const auto f_serial = nfft_forward(p, v, cfg);
  const auto a_serial = nfft_adjoint(c, p, cfg);
  for (int ranks : {2, 3, 5}) {
    const auto f = run_tcp(ranks, [&](Topology& topo) { return hp_forward(p, v, cfg, topo); });
    EXPECT_LT(relative_l2_error(f, f_serial), 1e-12) << ranks;
    const auto a = run_tcp(ranks, [&](Topology& topo) { return hp_adjoint(c, p, cfg, topo); });
    EXPECT_EQ(a, a_serial) << ranks;
  }
}

TEST(TcpTransport, ServeWorkerLoop) {
  std::mt19937_64 rng(2);
  const auto cfg = make_nfft_config(make_index_set({8, 8}), WindowKind::gaussian, 2.0, 5);
  const auto p = random_points(rng, 2, 500);
  const auto v = random_values(rng, 500);
  const auto serial = nfft_forward(p, v, cfg);
  const int served_by_root = run_tcp(3, [&](Topology& topo) {
    if (!topo.is_root()) {
      EXPECT_EQ(serve_worker(topo), 3);
      return 0;
    }
    for (int i = 0; i < 3; ++i) EXPECT_LT(relative_l2_error(hp_forward(p, v, cfg, topo), serial), 1e-12);
    shutdown_workers(topo);
    return 3;
  });
  EXPECT_EQ(served_by_root, 3);
}

TEST(TcpTransport, ClosedPeerIsCommunicationErrorNamingRank) {
  std::uint16_t port = 0;
  auto listener = TcpTransport::bind_listener({"127.0.0.1", 0}, 8, &port);
  std::promise<void> joined;
  std::thread worker([&] {
    auto t = TcpTransport::join({"127.0.0.1", port}, 1, 10000);
    joined.set_value();
  });  // transport destroyed here: rank 1 goes away
  auto t = TcpTransport::host(std::move(listener), 2, 10000);
  joined.get_future().wait();
  worker.join();
  Topology topo(t);
  try {
    topo.transport().recv(1);
    FAIL() << "expected CommunicationError";
  } catch (const CommunicationError& e) {
    EXPECT_EQ(e.peer(), 1);
  }
}

TEST(TcpTransport, HostTimesOutWithoutPeers) {
  auto listener = TcpTransport::bind_listener({"127.0.0.1", 0}, 8, nullptr);
  EXPECT_THROW(TcpTransport::host(std::move(listener), 2, 200), CommunicationError);
}

TEST(TcpTransport, GarbageHelloIsProtocolError) {
  std::uint16_t port = 0;
  auto listener = TcpTransport::bind_listener({"127.0.0.1", 0}, 8, &port);
  std::thread intruder([port] {
    in_addr addr{};
    addr.s_addr = htonl(INADDR_LOOPBACK);
    auto s = detail::connect_to(addr, port, 0, 5000);
    const char junk[16] = {'G', 'E', 'T', ' ', '/', ' ', 'H', 'T', 'T', 'P', '/', '1', '.', '1', '\r', '\n'};
    detail::write_all(s, std::as_bytes(std::span(junk)), 0);
    ::usleep(200000);
  });
  EXPECT_THROW(TcpTransport::host(std::move(listener), 2, 5000), ProtocolError);
  intruder.join();
}
