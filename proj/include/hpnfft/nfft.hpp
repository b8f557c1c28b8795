#pragma once

// Fast approximate NDFT by gridding.
//
// Forward:  spread samples onto the oversampled lattice, FFT, then divide
//           the frequencies in I_N by |I_n| prod_t c_{k_t}.
// Adjoint:  divide f^(k) by prod_t c_{k_t} into a zero-padded lattice,
//           normalized inverse FFT, then interpolate at the points.
//
// With c_k the true Fourier coefficients of the periodized window, the
// |I_n| factors of both directions cancel exactly as above.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "hpnfft/fft.hpp"
#include "hpnfft/ndft.hpp"
#include "hpnfft/parallel.hpp"
#include "hpnfft/types.hpp"
#include "hpnfft/window.hpp"

namespace hpnfft {

struct NfftConfig {
  FrequencyIndexSet index_set;
  WindowSpec window;
  /// Threads used inside one transform.
  int worker_count_hint = 1;
  /// Points per work item. Tuning only, never changes results for a fixed
  /// worker count.
  std::size_t chunk_size = 1024;
};

inline NfftConfig make_nfft_config(const FrequencyIndexSet& index_set, WindowKind kind, double sigma, int m,
                                   int workers = 1) {
  return NfftConfig{index_set, WindowSpec(kind, sigma, m, index_set), std::max(1, workers), 1024};
}

namespace detail {

/// Per-dimension stencil of one point: window values and flat-offset
/// contributions for the 2m+1 lattice sites around it.
struct Stencil {
  std::size_t width = 0;
  std::vector<double> weights;         // dim * width
  std::vector<std::size_t> offsets;    // dim * width, already multiplied by stride

  void build(const WindowSpec& window, std::span<const double> x, std::span<const std::size_t> strides) {
    const std::size_t d = x.size();
    const int m = window.m();
    width = static_cast<std::size_t>(2 * m + 1);
    weights.resize(d * width);
    offsets.resize(d * width);
    for (std::size_t t = 0; t < d; ++t) {
      const int n = window.grid_size(t);
      const auto center = static_cast<int>(std::lround(n * x[t]));
      for (std::size_t s = 0; s < width; ++s) {
        const int l = center - m + static_cast<int>(s);
        weights[t * width + s] = window.spatial(t, x[t] - static_cast<double>(l) / n);
        offsets[t * width + s] = OversampledGrid::offset_of(l, n) * strides[t];
      }
    }
  }

  /// Calls fn(offset, weight) for every site of the tensor-product stencil.
  template <class Fn>
  void for_each(std::size_t d, Fn&& fn) const {
    std::vector<std::size_t> idx(d, 0);
    const std::size_t last = d - 1;
    while (true) {
      double w = 1.0;
      std::size_t off = 0;
      for (std::size_t t = 0; t < last; ++t) {
        w *= weights[t * width + idx[t]];
        off += offsets[t * width + idx[t]];
      }
      if (w != 0.0) {
        const double* wl = &weights[last * width];
        const std::size_t* ol = &offsets[last * width];
        for (std::size_t s = 0; s < width; ++s) fn(off + ol[s], w * wl[s]);
      }
      std::size_t t = last;
      while (t-- > 0) {
        if (++idx[t] < width) break;
        idx[t] = 0;
      }
      if (t == static_cast<std::size_t>(-1)) break;
    }
  }
};

inline std::vector<std::size_t> row_major_strides(const std::vector<int>& dims) {
  std::vector<std::size_t> strides(dims.size());
  std::size_t s = 1;
  for (std::size_t t = dims.size(); t-- > 0;) {
    strides[t] = s;
    s *= static_cast<std::size_t>(dims[t]);
  }
  return strides;
}

inline void check_config(const NfftConfig& cfg) {
  if (cfg.window.dim() != cfg.index_set.dim() || cfg.window.bandwidths() != cfg.index_set.dims()) {
    throw ShapeError("window was built for a different index set");
  }
}

/// Contiguous chunk ranges of [0, count) assigned to `workers` blocks.
inline int effective_workers(std::size_t count, std::size_t chunk, int hint) {
  const std::size_t chunks = chunk == 0 ? 1 : (count + chunk - 1) / chunk;
  return static_cast<int>(std::max<std::size_t>(1, std::min<std::size_t>(chunks, static_cast<std::size_t>(std::max(1, hint)))));
}

}  // namespace detail

/// g(l) = sum_j f_j prod_t phi_t(x_{j,t} - l_t / n_t), organized per point.
/// Each worker accumulates into a private lattice; the lattices are summed
/// in worker order afterwards.
inline OversampledGrid spread(const PointSet& points, const SampleValues& values, const NfftConfig& cfg) {
  detail::check_config(cfg);
  detail::check_points_values(points, values, cfg.index_set);
  OversampledGrid grid(cfg.window.grid_dims(), GridLayout::spatial);
  const std::size_t d = cfg.index_set.dim();
  const auto strides = detail::row_major_strides(grid.dims());
  const std::size_t chunk = std::max<std::size_t>(1, cfg.chunk_size);
  const std::size_t chunks = (points.size() + chunk - 1) / chunk;
  const int workers = detail::effective_workers(points.size(), chunk, cfg.worker_count_hint);

  auto accumulate = [&](std::vector<Complex>& target, std::size_t chunk_begin, std::size_t chunk_end) {
    detail::Stencil stencil;
    const std::size_t j_end = std::min(points.size(), chunk_end * chunk);
    for (std::size_t j = chunk_begin * chunk; j < j_end; ++j) {
      const Complex f = values[j];
      stencil.build(cfg.window, points[j], strides);
      stencil.for_each(d, [&](std::size_t off, double w) { target[off] += f * w; });
    }
  };

  if (workers == 1) {
    accumulate(grid.values(), 0, chunks);
    return grid;
  }

  std::vector<std::vector<Complex>> partial(static_cast<std::size_t>(workers));
  parallel_blocks(chunks, workers, [&](int w, std::size_t begin, std::size_t end) {
    auto& mine = partial[static_cast<std::size_t>(w)];
    mine.assign(grid.size(), Complex{});
    accumulate(mine, begin, end);
  });
  parallel_blocks(grid.size(), workers, [&](int, std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      Complex acc{};
      for (const auto& p : partial) acc += p[i];
      grid[i] = acc;
    }
  });
  return grid;
}

/// Equispaced transform of the whole lattice. Forward maps a spatial grid
/// to a frequency grid without scaling; inverse maps back with 1/|I_n|.
inline OversampledGrid fft_oversampled(OversampledGrid grid, Direction direction, int workers = 1) {
  const GridLayout expected = direction == Direction::forward ? GridLayout::spatial : GridLayout::frequency;
  if (grid.layout() != expected) throw ShapeError("grid layout does not match transform direction");
  for (int n : grid.dims()) {
    if (n % 2 != 0) throw ShapeError("grid size must be even");
  }
  fft_inplace(grid.values(), grid.dims(), direction, workers);
  grid.set_layout(direction == Direction::forward ? GridLayout::frequency : GridLayout::spatial);
  return grid;
}

/// f^(k) = g^(k) / (|I_n| prod_t c_{k_t}) for k in I_N.
inline CoefficientArray scale(const OversampledGrid& grid, const NfftConfig& cfg) {
  detail::check_config(cfg);
  if (grid.layout() != GridLayout::frequency) throw ShapeError("scaling needs a frequency-layout grid");
  if (grid.dims() != cfg.window.grid_dims()) throw ShapeError("grid does not match the configured lattice");
  const auto& index_set = cfg.index_set;
  const std::size_t d = index_set.dim();
  CoefficientArray out(index_set);
  const double inv_total = 1.0 / static_cast<double>(grid.size());
  std::vector<int> k(d);
  for (std::size_t pos = 0; pos < index_set.size(); ++pos) {
    index_set.index(pos, k);
    double c = 1.0;
    for (std::size_t t = 0; t < d; ++t) c *= cfg.window.weight(t, k[t]);
    out[pos] = grid.at(k) * (inv_total / c);
  }
  return out;
}

/// g^(k) = f^(k) / prod_t c_{k_t} on I_N, zero on I_n \ I_N.
inline OversampledGrid subdivide(const CoefficientArray& coeffs, const NfftConfig& cfg) {
  detail::check_config(cfg);
  if (!(coeffs.index_set() == cfg.index_set)) throw ShapeError("coefficients do not match the configured index set");
  const auto& index_set = cfg.index_set;
  const std::size_t d = index_set.dim();
  OversampledGrid grid(cfg.window.grid_dims(), GridLayout::frequency);
  std::vector<int> k(d);
  for (std::size_t pos = 0; pos < index_set.size(); ++pos) {
    index_set.index(pos, k);
    double c = 1.0;
    for (std::size_t t = 0; t < d; ++t) c *= cfg.window.weight(t, k[t]);
    grid.at(k) = coeffs[pos] / c;
  }
  return grid;
}

/// f(x_j) = sum_{l in support(x_j)} g(l) prod_t phi_t(x_{j,t} - l_t / n_t).
/// Every point is an independent gather.
inline SampleValues interpolate(const OversampledGrid& grid, const PointSet& points, const NfftConfig& cfg) {
  detail::check_config(cfg);
  if (grid.layout() != GridLayout::spatial) throw ShapeError("interpolation needs a spatial-layout grid");
  if (grid.dims() != cfg.window.grid_dims()) throw ShapeError("grid does not match the configured lattice");
  if (points.size() > 0 && points.dim() != cfg.index_set.dim()) throw ShapeError("point dimension mismatch");
  SampleValues out(points.size());
  const std::size_t d = cfg.index_set.dim();
  const auto strides = detail::row_major_strides(grid.dims());
  const std::size_t chunk = std::max<std::size_t>(1, cfg.chunk_size);
  const std::size_t chunks = (points.size() + chunk - 1) / chunk;
  const int workers = detail::effective_workers(points.size(), chunk, cfg.worker_count_hint);
  parallel_blocks(chunks, workers, [&](int, std::size_t begin, std::size_t end) {
    detail::Stencil stencil;
    const std::size_t j_end = std::min(points.size(), end * chunk);
    for (std::size_t j = begin * chunk; j < j_end; ++j) {
      stencil.build(cfg.window, points[j], strides);
      Complex acc{};
      stencil.for_each(d, [&](std::size_t off, double w) { acc += grid[off] * w; });
      out[j] = acc;
    }
  });
  return out;
}

/// Approximates f^(k) = sum_j f(x_j) exp(-2 pi i k.x_j).
inline CoefficientArray nfft_forward(const PointSet& points, const SampleValues& values, const NfftConfig& cfg) {
  auto grid = spread(points, values, cfg);
  grid = fft_oversampled(std::move(grid), Direction::forward, cfg.worker_count_hint);
  return scale(grid, cfg);
}

/// Approximates f(x_j) = sum_k f^(k) exp(+2 pi i k.x_j).
inline SampleValues nfft_adjoint(const CoefficientArray& coeffs, const PointSet& points, const NfftConfig& cfg) {
  auto grid = subdivide(coeffs, cfg);
  grid = fft_oversampled(std::move(grid), Direction::inverse, cfg.worker_count_hint);
  return interpolate(grid, points, cfg);
}

}  // namespace hpnfft
