#pragma once

// Localized gridding windows phi and the Fourier coefficients c_k of their
// 1-periodization. Spatial profiles are truncated to |n x| <= m; the
// coefficients are the exact Fourier transforms of the untruncated profile.
//
//   gaussian       phi(x) = (pi b)^{-1/2} exp(-(n x)^2 / b),  b = 2 sigma m / ((2 sigma - 1) pi)
//                  c_k    = exp(-b (pi k / n)^2) / n
//   b_spline       phi(x) = M_{2m}(n x), centered cardinal B-spline of order 2m
//                  c_k    = sinc(pi k / n)^{2m} / n
//   sinc_power     phi(x) = a sinc(pi a x)^{2m} / n,  a = N (2 sigma - 1) / (2m)
//                  c_k    = M_{2m}(k / a) / n
//   kaiser_bessel  phi(x) = I0(beta sqrt(1 - (n x / m)^2)),  beta = pi m (2 - 1 / sigma)
//                  c_k    = (2m / n) sinh(s) / s,  s = sqrt(beta^2 - (2 pi m k / n)^2)

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <numbers>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "hpnfft/errors.hpp"
#include "hpnfft/types.hpp"

namespace hpnfft {

enum class WindowKind : std::uint8_t { gaussian = 0, b_spline = 1, sinc_power = 2, kaiser_bessel = 3 };

inline constexpr std::array<WindowKind, 4> kAllWindowKinds = {WindowKind::gaussian, WindowKind::b_spline,
                                                              WindowKind::sinc_power, WindowKind::kaiser_bessel};

inline std::string_view window_name(WindowKind kind) {
  switch (kind) {
    case WindowKind::gaussian: return "gaussian";
    case WindowKind::b_spline: return "b_spline";
    case WindowKind::sinc_power: return "sinc_power";
    case WindowKind::kaiser_bessel: return "kaiser_bessel";
  }
  return "unknown";
}

/// Case-insensitive lookup of a window name.
inline std::optional<WindowKind> parse_window_kind(std::string_view name) {
  std::string lower(name);
  std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return std::tolower(c); });
  for (WindowKind kind : kAllWindowKinds) {
    if (window_name(kind) == lower) return kind;
  }
  return std::nullopt;
}

/// Centered cardinal B-spline of order `order` (support [-order/2, order/2]),
/// evaluated by the de Boor style recursion
///   M_k(y) = ((k/2 + y) M_{k-1}(y + 1/2) + (k/2 - y) M_{k-1}(y - 1/2)) / (k - 1).
inline double centered_bspline(int order, double y) {
  const double half = 0.5 * order;
  y = std::abs(y);
  if (y >= half) return 0.0;
  // Level j needs M_j at y + (s - (order - j)/2) for s = 0..order-j.
  std::vector<double> vals(static_cast<std::size_t>(order));
  for (int s = 0; s < order; ++s) {
    const double u = y + s - 0.5 * (order - 1);
    vals[static_cast<std::size_t>(s)] = (u >= -0.5 && u < 0.5) ? 1.0 : 0.0;
  }
  for (int j = 2; j <= order; ++j) {
    const int count = order - j + 1;
    for (int s = 0; s < count; ++s) {
      const double u = y + s - 0.5 * (order - j);
      const double left = vals[static_cast<std::size_t>(s) + 1];  // M_{j-1}(u + 1/2)
      const double right = vals[static_cast<std::size_t>(s)];     // M_{j-1}(u - 1/2)
      vals[static_cast<std::size_t>(s)] = ((0.5 * j + u) * left + (0.5 * j - u) * right) / (j - 1);
    }
  }
  return vals[0];
}

inline double sinc(double x) { return x == 0.0 ? 1.0 : std::sin(x) / x; }

/// Window family plus its (sigma, m) parameters and the derived grid sizes
/// n_t. Fourier weights over I_N are tabulated once at construction and
/// only read afterwards.
class WindowSpec {
 public:
  WindowSpec() = default;

  WindowSpec(WindowKind kind, double sigma, int m, const FrequencyIndexSet& index_set)
      : kind_(kind), sigma_(sigma), m_(m), bandwidths_(index_set.dims()) {
    if (!(sigma > 1.0)) throw InvalidParameter("oversampling factor must exceed 1");
    if (m < 1 || m > 15) throw InvalidParameter("cut-off m must lie in [1, 15]");
    for (int big_n : bandwidths_) {
      // sigma * N rounded to the nearest even integer, never below N.
      int n = 2 * static_cast<int>(std::lround(sigma * big_n / 2.0));
      n = std::max(n, big_n);
      grid_.push_back(n);
    }
    weights_.resize(bandwidths_.size());
    for (std::size_t t = 0; t < bandwidths_.size(); ++t) {
      const int big_n = bandwidths_[t];
      weights_[t].resize(static_cast<std::size_t>(big_n));
      for (int k = -big_n / 2; k < big_n / 2; ++k) {
        weights_[t][static_cast<std::size_t>(k + big_n / 2)] = evaluate_weight(t, k);
      }
    }
  }

  WindowKind kind() const noexcept { return kind_; }
  double sigma() const noexcept { return sigma_; }
  int m() const noexcept { return m_; }
  std::size_t dim() const noexcept { return grid_.size(); }
  const std::vector<int>& grid_dims() const noexcept { return grid_; }
  const std::vector<int>& bandwidths() const noexcept { return bandwidths_; }
  int grid_size(std::size_t t) const { return grid_.at(t); }

  /// 1-D window value in dimension t at offset x; 0 when |n_t x| > m.
  double spatial(std::size_t t, double x) const {
    const double n = grid_[t];
    x = std::abs(x);
    const double nx = n * x;
    if (nx > m_) return 0.0;
    switch (kind_) {
      case WindowKind::gaussian: {
        const double b = gaussian_b();
        return std::exp(-nx * nx / b) / std::sqrt(std::numbers::pi * b);
      }
      case WindowKind::b_spline:
        return centered_bspline(2 * m_, nx);
      case WindowKind::sinc_power: {
        const double a = sinc_power_a(t);
        return a * std::pow(sinc(std::numbers::pi * a * x), 2 * m_) / n;
      }
      case WindowKind::kaiser_bessel: {
        const double r = nx / m_;
        const double arg = kaiser_beta() * std::sqrt(std::max(0.0, 1.0 - r * r));
        return std::cyl_bessel_i(0.0, arg);
      }
    }
    return 0.0;
  }

  /// Tabulated c_k for k in [-N_t/2, N_t/2).
  double weight(std::size_t t, int k) const {
    return weights_[t][static_cast<std::size_t>(k + bandwidths_[t] / 2)];
  }

  /// c_k evaluated from its closed form for any integer k.
  double evaluate_weight(std::size_t t, int k) const {
    const double n = grid_[t];
    double c = 0.0;
    switch (kind_) {
      case WindowKind::gaussian: {
        const double u = std::numbers::pi * k / n;
        c = std::exp(-gaussian_b() * u * u) / n;
        break;
      }
      case WindowKind::b_spline:
        c = std::pow(sinc(std::numbers::pi * k / n), 2 * m_) / n;
        break;
      case WindowKind::sinc_power:
        c = centered_bspline(2 * m_, k / sinc_power_a(t)) / n;
        break;
      case WindowKind::kaiser_bessel: {
        const double beta = kaiser_beta();
        const double w = 2.0 * std::numbers::pi * m_ * k / n;
        const double s2 = beta * beta - w * w;
        double ratio = 1.0;
        if (s2 > 0) {
          const double s = std::sqrt(s2);
          ratio = std::sinh(s) / s;
        } else if (s2 < 0) {
          const double s = std::sqrt(-s2);
          ratio = std::sin(s) / s;
        }
        c = 2.0 * m_ / n * ratio;
        break;
      }
    }
    if (!(std::abs(c) >= 1e-300) || !std::isfinite(c)) {
      throw DegenerateWindow("window " + std::string(window_name(kind_)) + " has weight " + std::to_string(c) +
                             " at k=" + std::to_string(k));
    }
    return c;
  }

  double gaussian_b() const { return 2.0 * sigma_ / (2.0 * sigma_ - 1.0) * m_ / std::numbers::pi; }
  double kaiser_beta() const { return std::numbers::pi * m_ * (2.0 - 1.0 / sigma_); }
  double sinc_power_a(std::size_t t) const { return bandwidths_[t] * (2.0 * sigma_ - 1.0) / (2.0 * m_); }

 private:
  WindowKind kind_ = WindowKind::gaussian;
  double sigma_ = 2.0;
  int m_ = 1;
  std::vector<int> bandwidths_;
  std::vector<int> grid_;
  std::vector<std::vector<double>> weights_;
};

inline double window_spatial(const WindowSpec& spec, std::size_t t, double x) { return spec.spatial(t, x); }

inline double window_fourier_weight(const WindowSpec& spec, std::size_t t, int k) {
  return spec.evaluate_weight(t, k);
}

/// The 2m+1 lattice indices centered at round(n_t x), wrapped into [0, n_t).
inline std::vector<int> window_support(const WindowSpec& spec, std::size_t t, double x) {
  const int n = spec.grid_size(t);
  const int m = spec.m();
  const auto center = static_cast<int>(std::lround(n * x));
  std::vector<int> out;
  out.reserve(static_cast<std::size_t>(2 * m + 1));
  for (int l = center - m; l <= center + m; ++l) out.push_back(((l % n) + n) % n);
  return out;
}

}  // namespace hpnfft
