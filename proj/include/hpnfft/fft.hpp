#pragma once

// Complex FFT: iterative radix-2 for power-of-two lengths, Bluestein's
// chirp-z convolution for every other length. Multidimensional transforms
// run 1-D passes along each axis.

#include <bit>
#include <cmath>
#include <cstddef>
#include <memory>
#include <numbers>
#include <span>
#include <vector>

#include "hpnfft/ndft.hpp"
#include "hpnfft/parallel.hpp"
#include "hpnfft/types.hpp"

namespace hpnfft {

namespace detail {

class Radix2 {
 public:
  explicit Radix2(std::size_t n) : n_(n), twiddles_(n / 2) {
    for (std::size_t i = 0; i < n / 2; ++i) {
      twiddles_[i] = std::polar(1.0, -2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(n));
    }
    bits_ = static_cast<unsigned>(std::countr_zero(n));
  }

  std::size_t size() const noexcept { return n_; }

  /// Unnormalized in-place transform, sign -1 (forward) or +1.
  void run(std::span<Complex> a, bool inverse) const {
    if (n_ == 1) return;
    for (std::size_t i = 0; i < n_; ++i) {
      const std::size_t j = reverse(i);
      if (i < j) std::swap(a[i], a[j]);
    }
    for (std::size_t len = 2; len <= n_; len <<= 1) {
      const std::size_t half = len / 2;
      const std::size_t step = n_ / len;
      for (std::size_t start = 0; start < n_; start += len) {
        for (std::size_t k = 0; k < half; ++k) {
          Complex w = twiddles_[k * step];
          if (inverse) w = std::conj(w);
          const Complex u = a[start + k];
          const Complex v = a[start + k + half] * w;
          a[start + k] = u + v;
          a[start + k + half] = u - v;
        }
      }
    }
  }

 private:
  std::size_t reverse(std::size_t i) const {
    std::size_t r = 0;
    for (unsigned b = 0; b < bits_; ++b) {
      r = (r << 1) | (i & 1);
      i >>= 1;
    }
    return r;
  }

  std::size_t n_;
  unsigned bits_ = 0;
  std::vector<Complex> twiddles_;
};

/// Length-n DFT as a circular convolution of power-of-two length.
class Bluestein {
 public:
  explicit Bluestein(std::size_t n) : n_(n), conv_(std::bit_ceil(2 * n - 1)), chirp_(n) {
    // exp(-i pi j^2 / n); j^2 is reduced modulo 2n to keep the phase exact.
    const std::size_t two_n = 2 * n;
    for (std::size_t j = 0; j < n; ++j) {
      const std::size_t r = (j * j) % two_n;
      chirp_[j] = std::polar(1.0, -std::numbers::pi * static_cast<double>(r) / static_cast<double>(n));
    }
    const std::size_t len = conv_.size();
    filter_.assign(len, Complex{});
    filter_[0] = std::conj(chirp_[0]);
    for (std::size_t j = 1; j < n; ++j) {
      filter_[j] = std::conj(chirp_[j]);
      filter_[len - j] = std::conj(chirp_[j]);
    }
    conv_.run(filter_, false);
  }

  std::size_t size() const noexcept { return n_; }

  void run(std::span<Complex> a, bool inverse, std::vector<Complex>& work) const {
    const std::size_t len = conv_.size();
    work.assign(len, Complex{});
    // The inverse transform is conj(F(conj(a))).
    for (std::size_t j = 0; j < n_; ++j) {
      const Complex v = inverse ? std::conj(a[j]) : a[j];
      work[j] = v * chirp_[j];
    }
    conv_.run(work, false);
    for (std::size_t j = 0; j < len; ++j) work[j] *= filter_[j];
    conv_.run(work, true);
    const double scale = 1.0 / static_cast<double>(len);
    for (std::size_t k = 0; k < n_; ++k) {
      const Complex v = work[k] * scale * chirp_[k];
      a[k] = inverse ? std::conj(v) : v;
    }
  }

 private:
  std::size_t n_;
  Radix2 conv_;
  std::vector<Complex> chirp_;
  std::vector<Complex> filter_;
};

}  // namespace detail

/// Plan for one-dimensional complex transforms of a fixed length.
class FftPlan1d {
 public:
  explicit FftPlan1d(std::size_t n) : n_(n) {
    if (n == 0) throw ShapeError("transform length must be positive");
    if (std::has_single_bit(n)) {
      radix2_ = std::make_unique<detail::Radix2>(n);
    } else {
      bluestein_ = std::make_unique<detail::Bluestein>(n);
    }
  }

  std::size_t size() const noexcept { return n_; }

  /// Unnormalized: forward uses exp(-2 pi i jk/n), inverse exp(+2 pi i jk/n).
  void execute(std::span<Complex> a, Direction direction, std::vector<Complex>& work) const {
    const bool inverse = direction == Direction::inverse;
    if (radix2_) {
      radix2_->run(a, inverse);
    } else {
      bluestein_->run(a, inverse, work);
    }
  }

 private:
  std::size_t n_;
  std::unique_ptr<detail::Radix2> radix2_;
  std::unique_ptr<detail::Bluestein> bluestein_;
};

/// In-place d-dimensional transform over row-major data with extents `dims`.
/// The inverse includes the 1/prod(dims) factor. Each 1-D line is
/// transformed identically whatever the worker count.
inline void fft_inplace(std::span<Complex> data, std::span<const int> dims, Direction direction, int workers = 1) {
  std::size_t total = 1;
  for (int n : dims) total *= static_cast<std::size_t>(n);
  if (total != data.size()) throw ShapeError("data length does not match transform extents");

  std::size_t stride = total;
  for (std::size_t axis = 0; axis < dims.size(); ++axis) {
    const auto n = static_cast<std::size_t>(dims[axis]);
    stride /= n;
    const FftPlan1d plan(n);
    const std::size_t lines = total / n;
    const std::size_t inner = stride;
    parallel_blocks(lines, workers, [&](int, std::size_t begin, std::size_t end) {
      std::vector<Complex> line(n);
      std::vector<Complex> work;
      for (std::size_t li = begin; li < end; ++li) {
        const std::size_t outer = li / inner;
        const std::size_t base = outer * n * inner + li % inner;
        for (std::size_t i = 0; i < n; ++i) line[i] = data[base + i * inner];
        plan.execute(line, direction, work);
        for (std::size_t i = 0; i < n; ++i) data[base + i * inner] = line[i];
      }
    });
  }
  if (direction == Direction::inverse) {
    const double scale = 1.0 / static_cast<double>(total);
    for (auto& v : data) v *= scale;
  }
}

}  // namespace hpnfft
