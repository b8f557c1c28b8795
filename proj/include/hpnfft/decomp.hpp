#pragma once

// Hybrid-parallel transforms. The point set is cut into spatial slabs
// (subcells), each rank transforms its own subcell, and the partial
// coefficient arrays are summed by a binary tree towards rank 0. The
// adjoint broadcasts the coefficients instead and gathers point values.
//
// Every rank of a topology must call the same collective in the same order.

#include <algorithm>
#include <bit>
#include <cstdint>
#include <optional>
#include <vector>

#include "hpnfft/errors.hpp"
#include "hpnfft/nfft.hpp"
#include "hpnfft/transport.hpp"
#include "hpnfft/types.hpp"
#include "hpnfft/wire.hpp"

namespace hpnfft {

struct Subcell {
  int id = 0;
  std::vector<std::uint64_t> indices;  // into the global point set, ascending
  PointSet points;
  SampleValues values;
};

/// Axis along which the points spread furthest; ties go to the lower axis.
inline std::size_t split_axis(const PointSet& points) {
  if (points.empty()) return 0;
  const std::size_t d = points.dim();
  std::vector<double> lo(d, 1.0), hi(d, -1.0);
  for (std::size_t j = 0; j < points.size(); ++j) {
    const auto x = points[j];
    for (std::size_t t = 0; t < d; ++t) {
      lo[t] = std::min(lo[t], x[t]);
      hi[t] = std::max(hi[t], x[t]);
    }
  }
  std::size_t best = 0;
  for (std::size_t t = 1; t < d; ++t) {
    if (hi[t] - lo[t] > hi[best] - lo[best]) best = t;
  }
  return best;
}

/// Cuts [-0.5, 0.5)^d into `parts` equal slabs along split_axis(points) and
/// assigns each point to the slab containing it. Empty slabs are kept.
inline std::vector<Subcell> partition_points(const PointSet& points, int parts) {
  if (parts < 1) throw InvalidTopology("subcell count must be at least 1");
  const std::size_t d = std::max<std::size_t>(points.dim(), 1);
  std::vector<Subcell> cells(static_cast<std::size_t>(parts));
  for (int i = 0; i < parts; ++i) {
    cells[static_cast<std::size_t>(i)].id = i;
    cells[static_cast<std::size_t>(i)].points = PointSet(d);
  }
  const std::size_t axis = split_axis(points);
  for (std::size_t j = 0; j < points.size(); ++j) {
    const double x = points[j][axis];
    auto slab = static_cast<int>(std::floor((x + 0.5) * parts));
    slab = std::clamp(slab, 0, parts - 1);
    auto& cell = cells[static_cast<std::size_t>(slab)];
    cell.indices.push_back(j);
    cell.points.push_back(points[j]);
  }
  return cells;
}

/// partition_points plus the sample values of each member.
inline std::vector<Subcell> partition_points(const PointSet& points, const SampleValues& values, int parts) {
  if (values.size() != points.size()) throw ShapeError("sample count does not match point count");
  auto cells = partition_points(points, parts);
  for (auto& cell : cells) {
    cell.values.reserve(cell.indices.size());
    for (auto j : cell.indices) cell.values.push_back(values[j]);
  }
  return cells;
}

/// What one rank did during a tree reduction.
struct ReduceTrace {
  int rounds = 0;
  int sends = 0;
  int receives = 0;
};

/// Binary-tree sum of equally shaped arrays towards rank 0. In round r
/// (offset = 2^r) a rank whose bit under `mask` is set sends its partial sum
/// to rank - offset and leaves; the others absorb rank + offset when that
/// rank exists. The result is complete on rank 0 only.
inline CoefficientArray tree_reduce_sum(CoefficientArray local, const Topology& topo, ReduceTrace* trace = nullptr) {
  const int size = topo.num_nodes();
  const int rank = topo.rank();
  ReduceTrace t;
  int offset = 1;
  int mask = 1;
  while (offset < size) {
    ++t.rounds;
    if ((rank & mask) != 0) {
      topo.transport().send(rank - offset, encode_coefficients(local));
      ++t.sends;
      break;
    }
    if (rank + offset < size) {
      const auto incoming = decode_coefficients(topo.transport().recv(rank + offset));
      if (!(incoming.index_set() == local.index_set())) throw ProtocolError("tree reduction operands differ in shape");
      local += incoming;
      ++t.receives;
    }
    offset += offset;
    mask = offset + mask;
  }
  if (trace != nullptr) *trace = t;
  return local;
}

namespace detail {

inline void verify_config(const WireConfig& received, const NfftConfig* local) {
  if (local != nullptr && !(WireConfig::from(*local) == received)) {
    throw ProtocolError("transform configuration differs between ranks");
  }
}

inline CoefficientArray forward_on_worker(const NfftConfig& cfg, const Frame& subcell_frame, const Topology& topo) {
  PointSet points;
  SampleValues values;
  decode_subcell(subcell_frame, points, values);
  auto partial = nfft_forward(points, values, cfg);
  return tree_reduce_sum(std::move(partial), topo);
}

inline SampleValues adjoint_on_worker(const NfftConfig& cfg, const Frame& coeff_frame, const Topology& topo) {
  auto& tr = topo.transport();
  const auto coeffs = decode_coefficients(coeff_frame);
  PointSet points;
  SampleValues ignored;
  decode_subcell(tr.recv(0), points, ignored);
  const auto indices = decode_subcell_index(tr.recv(0));
  if (indices.size() != points.size()) throw ProtocolError("subcell index count does not match subcell size");
  auto local = nfft_adjoint(coeffs, points, cfg);
  tr.send(0, encode_point_results(indices, local));
  return local;
}

}  // namespace detail

/// Collective forward transform. Rank 0 supplies the full point set, the
/// other ranks may pass empty inputs. Returns the full f^(k) on rank 0 and
/// an unspecified partial sum elsewhere.
inline CoefficientArray hp_forward(const PointSet& points, const SampleValues& values, const NfftConfig& cfg,
                                   const Topology& topo) {
  auto& tr = topo.transport();
  const int size = topo.num_nodes();
  if (topo.is_root()) {
    auto cells = partition_points(points, values, size);
    const auto config_frame = encode_config(WireConfig::from(cfg));
    for (int i = 1; i < size; ++i) {
      tr.send(i, config_frame);
      const auto& cell = cells[static_cast<std::size_t>(i)];
      tr.send(i, encode_subcell(cell.points, cell.values));
    }
    auto partial = nfft_forward(cells[0].points, cells[0].values, cfg);
    return tree_reduce_sum(std::move(partial), topo);
  }
  const auto received = decode_config(tr.recv(0));
  detail::verify_config(received, &cfg);
  return detail::forward_on_worker(cfg, tr.recv(0), topo);
}

/// Collective adjoint transform. Rank 0 supplies coefficients and points;
/// every rank evaluates its subcell against the full coefficient set and
/// rank 0 reassembles the values in the original point order. Other ranks
/// return the values of their own subcell.
inline SampleValues hp_adjoint(const CoefficientArray& coeffs, const PointSet& points, const NfftConfig& cfg,
                               const Topology& topo) {
  auto& tr = topo.transport();
  const int size = topo.num_nodes();
  if (!topo.is_root()) {
    const auto received = decode_config(tr.recv(0));
    detail::verify_config(received, &cfg);
    return detail::adjoint_on_worker(cfg, tr.recv(0), topo);
  }

  const auto cells = partition_points(points, size);
  const auto config_frame = encode_config(WireConfig::from(cfg));
  const auto coeff_frame = encode_coefficients(coeffs);
  for (int i = 1; i < size; ++i) {
    const auto& cell = cells[static_cast<std::size_t>(i)];
    tr.send(i, config_frame);
    tr.send(i, coeff_frame);
    tr.send(i, encode_subcell(cell.points, SampleValues(cell.points.size())));
    tr.send(i, encode_subcell_index(cell.indices));
  }

  SampleValues out(points.size());
  std::vector<bool> filled(points.size(), false);
  auto place = [&](std::uint64_t index, Complex value, int from) {
    if (index >= out.size() || filled[index]) {
      throw ProtocolError("rank " + std::to_string(from) + " returned invalid point index " + std::to_string(index));
    }
    out[index] = value;
    filled[index] = true;
  };

  const auto local = nfft_adjoint(coeffs, cells[0].points, cfg);
  for (std::size_t i = 0; i < local.size(); ++i) place(cells[0].indices[i], local[i], 0);
  for (int i = 1; i < size; ++i) {
    const auto results = decode_point_results(tr.recv(i));
    if (results.size() != cells[static_cast<std::size_t>(i)].indices.size()) {
      throw ProtocolError("rank " + std::to_string(i) + " returned the wrong number of point values");
    }
    for (const auto& iv : results) place(iv.index, iv.value, i);
  }
  return out;
}

/// Worker side of a multi-process run: services collectives issued by
/// rank 0 until SHUTDOWN. Each collective starts with CONFIG; a following
/// SUBCELL_ASSIGN selects the forward transform, COEFF_ARRAY the adjoint.
/// Returns the number of collectives served.
inline int serve_worker(const Topology& topo, int worker_threads = 1) {
  if (topo.is_root()) throw InvalidTopology("rank 0 drives collectives and cannot serve");
  auto& tr = topo.transport();
  int served = 0;
  while (true) {
    const auto frame = tr.recv(0);
    if (frame.type == MsgType::shutdown) return served;
    const auto wire = decode_config(frame);
    const auto cfg = wire.to_config(worker_threads);
    const auto next = tr.recv(0);
    if (next.type == MsgType::subcell_assign) {
      detail::forward_on_worker(cfg, next, topo);
    } else if (next.type == MsgType::coeff_array) {
      detail::adjoint_on_worker(cfg, next, topo);
    } else {
      throw ProtocolError("unexpected message type " + std::to_string(static_cast<int>(next.type)) +
                          " after CONFIG");
    }
    ++served;
  }
}

/// Sent by rank 0 to release every serve_worker loop.
inline void shutdown_workers(const Topology& topo) {
  for (int i = 1; i < topo.num_nodes(); ++i) topo.transport().send(i, shutdown_frame());
}

}  // namespace hpnfft
