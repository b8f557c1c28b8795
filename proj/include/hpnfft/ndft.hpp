#pragma once

// Direct O(M |I_N|) evaluations. These are the correctness oracles for the
// fast transforms and are deliberately slow.

#include <cmath>
#include <numbers>
#include <numeric>
#include <span>
#include <vector>

#include "hpnfft/parallel.hpp"
#include "hpnfft/types.hpp"

namespace hpnfft {

enum class Direction : std::uint8_t { forward, inverse };

namespace detail {

inline void check_points_values(const PointSet& points, const SampleValues& values, const FrequencyIndexSet& index_set) {
  if (values.size() != points.size()) throw ShapeError("sample count does not match point count");
  if (points.size() > 0 && points.dim() != index_set.dim()) {
    throw ShapeError("point dimension does not match index set dimension");
  }
}

}  // namespace detail

/// f^(k) = sum_j f(x_j) exp(-2 pi i k.x_j) for every k in I_N.
inline CoefficientArray ndft_direct_forward(const PointSet& points, const SampleValues& values,
                                            const FrequencyIndexSet& index_set, int workers = 1) {
  detail::check_points_values(points, values, index_set);
  CoefficientArray out(index_set);
  const std::size_t d = index_set.dim();
  parallel_blocks(index_set.size(), workers, [&](int, std::size_t begin, std::size_t end) {
    std::vector<int> k(d);
    for (std::size_t pos = begin; pos < end; ++pos) {
      index_set.index(pos, k);
      Complex acc{};
      for (std::size_t j = 0; j < points.size(); ++j) {
        const auto x = points[j];
        double phase = 0.0;
        for (std::size_t t = 0; t < d; ++t) phase += k[t] * x[t];
        acc += values[j] * std::polar(1.0, -2.0 * std::numbers::pi * phase);
      }
      out[pos] = acc;
    }
  });
  return out;
}

/// f(x_j) = sum_k f^(k) exp(+2 pi i k.x_j), no normalization.
inline SampleValues ndft_direct_adjoint(const CoefficientArray& coeffs, const PointSet& points, int workers = 1) {
  const auto& index_set = coeffs.index_set();
  if (points.size() > 0 && points.dim() != index_set.dim()) {
    throw ShapeError("point dimension does not match index set dimension");
  }
  SampleValues out(points.size());
  const std::size_t d = index_set.dim();
  parallel_blocks(points.size(), workers, [&](int, std::size_t begin, std::size_t end) {
    std::vector<int> k(d);
    for (std::size_t j = begin; j < end; ++j) {
      const auto x = points[j];
      Complex acc{};
      for (std::size_t pos = 0; pos < index_set.size(); ++pos) {
        index_set.index(pos, k);
        double phase = 0.0;
        for (std::size_t t = 0; t < d; ++t) phase += k[t] * x[t];
        acc += coeffs[pos] * std::polar(1.0, 2.0 * std::numbers::pi * phase);
      }
      out[j] = acc;
    }
  });
  return out;
}

/// Direct equispaced DFT over the grid's lattice. Forward has no scaling,
/// inverse carries 1/|I_n|. Phases are reduced exactly in integers.
inline OversampledGrid dft_direct_equispaced(const OversampledGrid& grid, Direction direction) {
  const auto& dims = grid.dims();
  const std::size_t d = dims.size();
  OversampledGrid out(dims, direction == Direction::forward ? GridLayout::frequency : GridLayout::spatial);

  // Common denominator so every k.l/n reduces to one integer residue.
  long long denom = 1;
  for (int n : dims) denom = std::lcm(denom, static_cast<long long>(n));
  const double sign = direction == Direction::forward ? -1.0 : 1.0;
  std::vector<Complex> roots(static_cast<std::size_t>(denom));
  for (long long r = 0; r < denom; ++r) {
    roots[static_cast<std::size_t>(r)] =
        std::polar(1.0, sign * 2.0 * std::numbers::pi * static_cast<double>(r) / static_cast<double>(denom));
  }

  std::vector<int> k(d), l(d);
  for (std::size_t kp = 0; kp < grid.size(); ++kp) {
    grid.signed_index(kp, k);
    Complex acc{};
    for (std::size_t lp = 0; lp < grid.size(); ++lp) {
      grid.signed_index(lp, l);
      long long r = 0;
      for (std::size_t t = 0; t < d; ++t) r += static_cast<long long>(k[t]) * l[t] * (denom / dims[t]);
      r %= denom;
      if (r < 0) r += denom;
      acc += grid[lp] * roots[static_cast<std::size_t>(r)];
    }
    out[kp] = acc;
  }
  if (direction == Direction::inverse) {
    const double scale = 1.0 / static_cast<double>(grid.size());
    for (auto& v : out.values()) v *= scale;
  }
  return out;
}

/// E = ||f - s||_2 / ||s||_2 over all entries.
inline double relative_l2_error(std::span<const Complex> f, std::span<const Complex> s) {
  if (f.size() != s.size()) throw ShapeError("relative error operands differ in length");
  double diff = 0.0;
  double ref = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) {
    diff += std::norm(f[i] - s[i]);
    ref += std::norm(s[i]);
  }
  if (ref == 0.0) throw UndefinedReference("reference vector has zero norm");
  return std::sqrt(diff / ref);
}

inline double relative_l2_error(const CoefficientArray& f, const CoefficientArray& s) {
  return relative_l2_error(std::span<const Complex>(f.values()), std::span<const Complex>(s.values()));
}

}  // namespace hpnfft
