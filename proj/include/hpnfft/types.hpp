#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "hpnfft/errors.hpp"

namespace hpnfft {

using Complex = std::complex<double>;

/// Values f(x_j), one per point of the paired PointSet.
using SampleValues = std::vector<Complex>;

/// The d-dimensional frequency set I_N: all integer k with
/// -N_t/2 <= k_t < N_t/2. Flat positions enumerate k lexicographically,
/// dimension 0 slowest.
class FrequencyIndexSet {
 public:
  FrequencyIndexSet() = default;

  explicit FrequencyIndexSet(std::vector<int> dims) : dims_(std::move(dims)) {
    if (dims_.empty()) throw InvalidBandwidth("index set needs at least one dimension");
    std::size_t total = 1;
    for (int n : dims_) {
      if (n < 2 || n % 2 != 0) {
        throw InvalidBandwidth("bandwidth " + std::to_string(n) + " is not a positive even integer");
      }
      if (total > std::numeric_limits<std::size_t>::max() / static_cast<std::size_t>(n)) {
        throw InvalidBandwidth("index set cardinality overflows");
      }
      total *= static_cast<std::size_t>(n);
    }
    size_ = total;
  }

  std::size_t dim() const noexcept { return dims_.size(); }
  std::size_t size() const noexcept { return size_; }
  const std::vector<int>& dims() const noexcept { return dims_; }
  int bandwidth(std::size_t t) const { return dims_.at(t); }

  /// Multi-index of flat position `pos`, written to `k` (length dim()).
  void index(std::size_t pos, std::span<int> k) const {
    for (std::size_t t = dims_.size(); t-- > 0;) {
      const auto n = static_cast<std::size_t>(dims_[t]);
      k[t] = static_cast<int>(pos % n) - dims_[t] / 2;
      pos /= n;
    }
  }

  std::vector<int> index(std::size_t pos) const {
    std::vector<int> k(dims_.size());
    index(pos, k);
    return k;
  }

  bool contains(std::span<const int> k) const {
    if (k.size() != dims_.size()) return false;
    for (std::size_t t = 0; t < dims_.size(); ++t) {
      if (k[t] < -dims_[t] / 2 || k[t] >= dims_[t] / 2) return false;
    }
    return true;
  }

  /// Flat position of multi-index k. k must be contained.
  std::size_t position(std::span<const int> k) const {
    std::size_t pos = 0;
    for (std::size_t t = 0; t < dims_.size(); ++t) {
      pos = pos * static_cast<std::size_t>(dims_[t]) + static_cast<std::size_t>(k[t] + dims_[t] / 2);
    }
    return pos;
  }

  friend bool operator==(const FrequencyIndexSet&, const FrequencyIndexSet&) = default;

 private:
  std::vector<int> dims_;
  std::size_t size_ = 0;
};

inline FrequencyIndexSet make_index_set(std::vector<int> dims) {
  return FrequencyIndexSet(std::move(dims));
}

/// Maps a coordinate onto the periodic cell [-0.5, 0.5).
inline double wrap_coordinate(double x) {
  double r = x - std::floor(x + 0.5);
  if (r >= 0.5) r -= 1.0;
  if (r < -0.5) r += 1.0;
  return r;
}

/// M nonequispaced points in [-0.5, 0.5)^d, stored point-major.
class PointSet {
 public:
  PointSet() = default;

  explicit PointSet(std::size_t dim) : dim_(dim) {
    if (dim == 0) throw ShapeError("point dimension must be positive");
  }

  /// Coordinates outside [-0.5, 0.5) are wrapped by the nearest integer.
  PointSet(std::size_t dim, std::vector<double> coords) : PointSet(dim) {
    if (coords.size() % dim != 0) throw ShapeError("coordinate count is not a multiple of the dimension");
    coords_ = std::move(coords);
    for (double& x : coords_) x = wrap_coordinate(x);
  }

  std::size_t dim() const noexcept { return dim_; }
  std::size_t size() const noexcept { return dim_ == 0 ? 0 : coords_.size() / dim_; }
  bool empty() const noexcept { return coords_.empty(); }

  std::span<const double> operator[](std::size_t j) const { return {coords_.data() + j * dim_, dim_}; }
  std::span<const double> coords() const noexcept { return coords_; }

  void push_back(std::span<const double> x) {
    if (x.size() != dim_) throw ShapeError("point has wrong dimension");
    for (double v : x) coords_.push_back(wrap_coordinate(v));
  }

  void reserve(std::size_t m) { coords_.reserve(m * dim_); }

 private:
  std::size_t dim_ = 0;
  std::vector<double> coords_;
};

/// Frequency-domain values f^(k) over an index set, in its flat order.
class CoefficientArray {
 public:
  CoefficientArray() = default;

  explicit CoefficientArray(FrequencyIndexSet index_set)
      : index_set_(std::move(index_set)), values_(index_set_.size()) {}

  CoefficientArray(FrequencyIndexSet index_set, std::vector<Complex> values)
      : index_set_(std::move(index_set)), values_(std::move(values)) {
    if (values_.size() != index_set_.size()) throw ShapeError("coefficient count does not match the index set");
  }

  const FrequencyIndexSet& index_set() const noexcept { return index_set_; }
  std::size_t size() const noexcept { return values_.size(); }

  Complex& operator[](std::size_t pos) { return values_[pos]; }
  const Complex& operator[](std::size_t pos) const { return values_[pos]; }

  Complex& at(std::span<const int> k) { return values_[index_set_.position(k)]; }
  const Complex& at(std::span<const int> k) const { return values_[index_set_.position(k)]; }

  std::vector<Complex>& values() noexcept { return values_; }
  const std::vector<Complex>& values() const noexcept { return values_; }

  CoefficientArray& operator+=(const CoefficientArray& other) {
    if (!(other.index_set_ == index_set_)) throw ShapeError("adding coefficient arrays of different shape");
    for (std::size_t i = 0; i < values_.size(); ++i) values_[i] += other.values_[i];
    return *this;
  }

 private:
  FrequencyIndexSet index_set_;
  std::vector<Complex> values_;
};

enum class GridLayout : std::uint8_t { spatial, frequency };

/// Equispaced complex lattice over I_n. Signed index l_t is stored at
/// offset (l_t + n_t) mod n_t, row-major with dimension 0 slowest.
class OversampledGrid {
 public:
  OversampledGrid() = default;

  OversampledGrid(std::vector<int> dims, GridLayout layout) : dims_(std::move(dims)), layout_(layout) {
    std::size_t total = 1;
    for (int n : dims_) {
      if (n < 2 || n % 2 != 0) throw ShapeError("grid size " + std::to_string(n) + " is not even");
      total *= static_cast<std::size_t>(n);
    }
    if (dims_.empty()) throw ShapeError("grid needs at least one dimension");
    values_.assign(total, Complex{});
  }

  std::size_t dim() const noexcept { return dims_.size(); }
  std::size_t size() const noexcept { return values_.size(); }
  const std::vector<int>& dims() const noexcept { return dims_; }
  GridLayout layout() const noexcept { return layout_; }
  void set_layout(GridLayout layout) noexcept { layout_ = layout; }

  static std::size_t offset_of(int signed_index, int n) {
    return static_cast<std::size_t>(((signed_index % n) + n) % n);
  }

  /// Array offset of signed multi-index l.
  std::size_t offset(std::span<const int> l) const {
    std::size_t pos = 0;
    for (std::size_t t = 0; t < dims_.size(); ++t) {
      pos = pos * static_cast<std::size_t>(dims_[t]) + offset_of(l[t], dims_[t]);
    }
    return pos;
  }

  /// Signed multi-index stored at array offset `pos`.
  void signed_index(std::size_t pos, std::span<int> l) const {
    for (std::size_t t = dims_.size(); t-- > 0;) {
      const auto n = static_cast<std::size_t>(dims_[t]);
      const int p = static_cast<int>(pos % n);
      l[t] = p >= dims_[t] / 2 ? p - dims_[t] : p;
      pos /= n;
    }
  }

  Complex& operator[](std::size_t pos) { return values_[pos]; }
  const Complex& operator[](std::size_t pos) const { return values_[pos]; }
  Complex& at(std::span<const int> l) { return values_[offset(l)]; }
  const Complex& at(std::span<const int> l) const { return values_[offset(l)]; }

  std::vector<Complex>& values() noexcept { return values_; }
  const std::vector<Complex>& values() const noexcept { return values_; }

 private:
  std::vector<int> dims_;
  GridLayout layout_ = GridLayout::spatial;
  std::vector<Complex> values_;
};

}  // namespace hpnfft
