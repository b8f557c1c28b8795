#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <random>
#include <span>
#include <vector>

#include "hpnfft/types.hpp"

namespace testing_support {

using hpnfft::CoefficientArray;
using hpnfft::Complex;
using hpnfft::FrequencyIndexSet;
using hpnfft::PointSet;
using hpnfft::SampleValues;

inline PointSet random_points(std::mt19937_64& rng, std::size_t dim, std::size_t count) {
  std::uniform_real_distribution<double> u(-0.5, 0.5);
  std::vector<double> c(dim * count);
  for (auto& x : c) x = u(rng);
  return PointSet(dim, std::move(c));
}

inline SampleValues random_values(std::mt19937_64& rng, std::size_t count) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  SampleValues v(count);
  for (auto& z : v) {
    const double re = u(rng);
    z = Complex(re, u(rng));
  }
  return v;
}

inline CoefficientArray random_coeffs(std::mt19937_64& rng, const FrequencyIndexSet& is) {
  CoefficientArray c(is);
  auto v = random_values(rng, is.size());
  for (std::size_t i = 0; i < v.size(); ++i) c[i] = v[i];
  return c;
}

/// sum_i a_i conj(b_i)
inline Complex inner(std::span<const Complex> a, std::span<const Complex> b) {
  std::complex<long double> s{};
  for (std::size_t i = 0; i < a.size(); ++i) {
    s += std::complex<long double>(a[i]) * std::conj(std::complex<long double>(b[i]));
  }
  return Complex(static_cast<double>(s.real()), static_cast<double>(s.imag()));
}

inline double rel_diff(Complex a, Complex b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

inline double max_abs(std::span<const Complex> v) {
  double m = 0;
  for (auto z : v) m = std::max(m, std::abs(z));
  return m;
}

/// Independent reference for Eq. (forward NDFT): phases reduced exactly in
/// long double, sums compensated.
inline std::vector<Complex> reference_forward(const PointSet& points, std::span<const Complex> values,
                                              const FrequencyIndexSet& is) {
  std::vector<Complex> out(is.size());
  const long double two_pi = 2.0L * std::numbers::pi_v<long double>;
  for (std::size_t pos = 0; pos < is.size(); ++pos) {
    const auto k = is.index(pos);
    long double sr = 0, si = 0, cr = 0, ci = 0;
    for (std::size_t j = 0; j < points.size(); ++j) {
      long double phase = 0;
      for (std::size_t t = 0; t < points.dim(); ++t) phase += static_cast<long double>(k[t]) * points[j][t];
      phase -= std::floor(phase);
      const long double c = std::cos(two_pi * phase), s = -std::sin(two_pi * phase);
      const long double re = values[j].real() * c - values[j].imag() * s;
      const long double im = values[j].real() * s + values[j].imag() * c;
      long double y = re - cr, t2 = sr + y;
      cr = (t2 - sr) - y;
      sr = t2;
      y = im - ci;
      t2 = si + y;
      ci = (t2 - si) - y;
      si = t2;
    }
    out[pos] = Complex(static_cast<double>(sr), static_cast<double>(si));
  }
  return out;
}

}  // namespace testing_support
