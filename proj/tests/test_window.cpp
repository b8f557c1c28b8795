#include <gtest/gtest.h>

#include <cmath>
#include <functional>
#include <numbers>

#include "hpnfft/window.hpp"

using namespace hpnfft;

namespace {

constexpr double kPi = std::numbers::pi;

/// Gauss-Legendre nodes and weights on [-1, 1].
struct GaussLegendre {
  explicit GaussLegendre(int n) : x(n), w(n) {
    for (int i = 0; i < n; ++i) {
      double z = std::cos(kPi * (i + 0.75) / (n + 0.5));
      for (int it = 0; it < 100; ++it) {
        double p0 = 1, p1 = z;
        for (int k = 2; k <= n; ++k) {
          const double p2 = ((2 * k - 1) * z * p1 - (k - 1) * p0) / k;
          p0 = p1;
          p1 = p2;
        }
        const double dp = n * (z * p1 - p0) / (z * z - 1);
        const double dz = p1 / dp;
        z -= dz;
        if (std::abs(dz) < 1e-16) break;
      }
      double p0 = 1, p1 = z;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2 * k - 1) * z * p1 - (k - 1) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      const double dp = n * (z * p1 - p0) / (z * z - 1);
      x[static_cast<std::size_t>(i)] = z;
      w[static_cast<std::size_t>(i)] = 2 / ((1 - z * z) * dp * dp);
    }
  }
  std::vector<double> x, w;
};

double binomial(int n, int k) {
  double r = 1;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

/// Centered cardinal B-spline of order k by its truncated-power sum.
double bspline_truncated_powers(int k, double y) {
  // evaluate on the left flank, where fewer terms cancel
  y = -std::abs(y);
  if (y <= -k / 2.0) return 0;
  double s = 0;
  for (int j = 0; j <= k; ++j) {
    const double u = y + k / 2.0 - j;
    if (u > 0) s += (j % 2 == 0 ? 1 : -1) * binomial(k, j) * std::pow(u, k - 1);
  }
  return s / std::tgamma(k);
}

/// Untruncated windows, written out independently of the library.
double reference_phi(WindowKind kind, double sigma, int m, int big_n, int n, double x) {
  switch (kind) {
    case WindowKind::gaussian: {
      const double b = 2 * sigma / (2 * sigma - 1) * m / kPi;
      return std::exp(-(n * x) * (n * x) / b) / std::sqrt(kPi * b);
    }
    case WindowKind::b_spline:
      return bspline_truncated_powers(2 * m, n * x);
    case WindowKind::sinc_power: {
      const double a = big_n * (2 * sigma - 1) / (2 * m);
      const double u = kPi * a * x;
      const double s = u == 0 ? 1 : std::sin(u) / u;
      return a * std::pow(s, 2 * m) / n;
    }
    case WindowKind::kaiser_bessel: {
      const double beta = kPi * m * (2 - 1 / sigma);
      const double u = n * x / m;
      if (std::abs(u) > 1) return 0;
      return std::cyl_bessel_i(0.0, beta * std::sqrt(1 - u * u));
    }
  }
  return 0;
}

/// int phi(x) e^{-2 pi i k x} dx over the real line, for k in [-8, 8).
std::vector<double> fourier_by_quadrature(WindowKind kind, double sigma, int m, int big_n, int n) {
  auto phi = [&](double x) { return reference_phi(kind, sigma, m, big_n, n, x); };
  std::vector<double> out(16, 0.0);
  if (kind == WindowKind::gaussian || kind == WindowKind::sinc_power) {
    // periodic trapezoid rule on the 1-periodization, 10^4 nodes
    const int q = 10000;
    const int images = kind == WindowKind::sinc_power ? 200 : 2;
    for (int i = 0; i < q; ++i) {
      const double x = -0.5 + static_cast<double>(i) / q;
      double p = 0;
      for (int r = -images; r <= images; ++r) p += phi(x + r);
      for (int k = -8; k < 8; ++k) out[static_cast<std::size_t>(k + 8)] += p * std::cos(2 * kPi * k * x) / q;
    }
    return out;
  }
  // compact support [-m/n, m/n]; panels of width 1/n on the spline knots
  static const GaussLegendre gl(24);
  for (int panel = -m; panel < m; ++panel) {
    const double lo = static_cast<double>(panel) / n, hi = static_cast<double>(panel + 1) / n;
    for (std::size_t i = 0; i < gl.x.size(); ++i) {
      const double x = 0.5 * (lo + hi) + 0.5 * (hi - lo) * gl.x[i];
      const double f = 0.5 * (hi - lo) * gl.w[i] * phi(x);
      for (int k = -8; k < 8; ++k) out[static_cast<std::size_t>(k + 8)] += f * std::cos(2 * kPi * k * x);
    }
  }
  return out;
}

/// int phi over |n x| <= m.
double integral_over_support(WindowKind kind, double sigma, int m, int big_n, int n) {
  static const GaussLegendre gl(24);
  double s = 0;
  for (int panel = -m; panel < m; ++panel) {
    const double lo = static_cast<double>(panel) / n, hi = static_cast<double>(panel + 1) / n;
    for (std::size_t i = 0; i < gl.x.size(); ++i) {
      s += 0.5 * (hi - lo) * gl.w[i] * reference_phi(kind, sigma, m, big_n, n, 0.5 * (lo + hi) + 0.5 * (hi - lo) * gl.x[i]);
    }
  }
  return s;
}

WindowSpec spec1d(WindowKind kind, double sigma, int m, int big_n = 16) {
  return WindowSpec(kind, sigma, m, make_index_set({big_n}));
}

}  // namespace

TEST(Window, NamesParseCaseInsensitively) {
  for (auto kind : kAllWindowKinds) {
    std::string upper(window_name(kind));
    for (auto& ch : upper) ch = static_cast<char>(std::toupper(static_cast<unsigned char>(ch)));
    EXPECT_EQ(parse_window_kind(upper), kind);
    EXPECT_EQ(parse_window_kind(window_name(kind)), kind);
  }
  EXPECT_EQ(parse_window_kind("Kaiser_Bessel"), WindowKind::kaiser_bessel);
  EXPECT_FALSE(parse_window_kind("hann").has_value());
}

TEST(Window, ParameterValidation) {
  const auto is = make_index_set({16});
  EXPECT_THROW(WindowSpec(WindowKind::gaussian, 1.0, 4, is), InvalidParameter);
  EXPECT_THROW(WindowSpec(WindowKind::gaussian, 2.0, 0, is), InvalidParameter);
  EXPECT_THROW(WindowSpec(WindowKind::gaussian, 2.0, 16, is), InvalidParameter);
  EXPECT_NO_THROW(WindowSpec(WindowKind::gaussian, 2.0, 15, is));
}

TEST(Window, GridSizes) {
  EXPECT_EQ(spec1d(WindowKind::gaussian, 2.0, 4, 16).grid_size(0), 32);
  EXPECT_EQ(spec1d(WindowKind::gaussian, 1.5, 4, 16).grid_size(0), 24);
  // 1.3 * 16 = 20.8 -> nearest even 20, never below N
  EXPECT_EQ(spec1d(WindowKind::gaussian, 1.3, 4, 16).grid_size(0), 20);
  EXPECT_EQ(spec1d(WindowKind::gaussian, 1.01, 4, 16).grid_size(0), 16);
  for (double sigma : {1.1, 1.25, 1.7, 2.0, 2.3, 3.0}) {
    const int n = spec1d(WindowKind::b_spline, sigma, 3, 18).grid_size(0);
    EXPECT_EQ(n % 2, 0);
    EXPECT_GE(n, 18);
  }
}

TEST(Window, SpatialIsZeroOutsideSupport) {
  for (auto kind : kAllWindowKinds) {
    for (int m : {1, 3, 8}) {
      const auto w = spec1d(kind, 2.0, m);
      const int n = w.grid_size(0);
      for (double u : {m + 1e-9, m + 0.5, m + 3.0, 15.9}) {
        EXPECT_EQ(w.spatial(0, u / n), 0.0);
        EXPECT_EQ(w.spatial(0, -u / n), 0.0);
      }
      EXPECT_GT(w.spatial(0, 0.0), 0.0);
    }
  }
}

TEST(Window, SpatialIsEvenAndMatchesReferenceInsideSupport) {
  for (auto kind : kAllWindowKinds) {
    for (int m : {1, 2, 3, 4}) {
      const auto w = spec1d(kind, 2.0, m);
      const int n = w.grid_size(0);
      for (int i = 0; i <= 40; ++i) {
        const double x = m * (i / 40.0) / n * 0.999;
        EXPECT_EQ(w.spatial(0, x), w.spatial(0, -x));
        const double ref = reference_phi(kind, 2.0, m, 16, n, x);
        EXPECT_NEAR(w.spatial(0, x), ref, 1e-12 * std::max(1.0, std::abs(ref))) << window_name(kind) << " m=" << m;
      }
    }
  }
}

TEST(Window, GaussianPeakValue) {
  // sigma = 2, m = 4, n = 32
  const auto w = spec1d(WindowKind::gaussian, 2.0, 4, 16);
  ASSERT_EQ(w.grid_size(0), 32);
  const double b = (2.0 * 2 / (2.0 * 2 - 1)) * (4 / kPi);
  EXPECT_NEAR(w.spatial(0, 0.0), 1 / std::sqrt(kPi * b), 1e-15);
  EXPECT_NEAR(w.gaussian_b(), b, 1e-15);
}

TEST(Window, WeightsAreSymmetric) {
  for (auto kind : kAllWindowKinds) {
    const auto w = spec1d(kind, 2.0, 5);
    for (int k = 1; k < 8; ++k) EXPECT_EQ(w.weight(0, k), w.weight(0, -k)) << window_name(kind);
  }
}

TEST(Window, TabulatedWeightsMatchClosedForm) {
  for (auto kind : kAllWindowKinds) {
    const auto w = spec1d(kind, 2.0, 3);
    for (int k = -8; k < 8; ++k) EXPECT_EQ(w.weight(0, k), window_fourier_weight(w, 0, k));
  }
}

TEST(Window, GaussianWeightsMatchQuadratureForManyParameters) {
  for (double sigma : {1.5, 2.0, 2.5}) {
    for (int m : {1, 2, 4, 8, 12, 15}) {
      const auto w = spec1d(WindowKind::gaussian, sigma, m);
      const auto q = fourier_by_quadrature(WindowKind::gaussian, sigma, m, 16, w.grid_size(0));
      for (int k = -8; k < 8; ++k) {
        EXPECT_NEAR(w.weight(0, k) / q[static_cast<std::size_t>(k + 8)], 1.0, 1e-8) << "sigma=" << sigma << " m=" << m << " k=" << k;
      }
    }
  }
}

TEST(Window, OtherFamiliesWeightsMatchQuadrature) {
  struct Case {
    WindowKind kind;
    std::vector<int> ms;
  };
  const std::vector<Case> cases = {{WindowKind::b_spline, {1, 2, 3, 4}},
                                   {WindowKind::sinc_power, {2, 3, 4}},
                                   {WindowKind::kaiser_bessel, {1, 2, 4, 8}}};
  for (const auto& c : cases) {
    for (int m : c.ms) {
      const auto w = spec1d(c.kind, 2.0, m);
      const auto q = fourier_by_quadrature(c.kind, 2.0, m, 16, w.grid_size(0));
      for (int k = -8; k < 8; ++k) {
        EXPECT_NEAR(w.weight(0, k) / q[static_cast<std::size_t>(k + 8)], 1.0, 1e-8) << window_name(c.kind) << " m=" << m << " k=" << k;
      }
    }
  }
}

TEST(Window, ZerothWeightIsIntegralOverSupport) {
  for (auto kind : {WindowKind::b_spline, WindowKind::kaiser_bessel}) {
    for (int m : {1, 2, 3, 4}) {
      const auto w = spec1d(kind, 2.0, m);
      EXPECT_NEAR(w.weight(0, 0) / integral_over_support(kind, 2.0, m, 16, w.grid_size(0)), 1.0, 1e-12)
          << window_name(kind) << " m=" << m;
    }
  }
  // The Gaussian's mass beyond |n x| = m is below 1e-8 of the total at m = 8.
  const auto g = spec1d(WindowKind::gaussian, 2.0, 8);
  EXPECT_NEAR(g.weight(0, 0) / integral_over_support(WindowKind::gaussian, 2.0, 8, 16, g.grid_size(0)), 1.0, 1e-8);
}

TEST(Window, AllWeightsPositiveAcrossFamiliesAndCutoffs) {
  for (auto kind : kAllWindowKinds) {
    for (int m = 1; m <= 15; ++m) {
      const auto w = WindowSpec(kind, 2.0, m, make_index_set({16, 16, 16}));
      for (std::size_t t = 0; t < 3; ++t) {
        for (int k = -8; k < 8; ++k) {
          const double c = w.weight(t, k);
          EXPECT_TRUE(std::isfinite(c));
          EXPECT_GT(c, 1e-300) << window_name(kind) << " m=" << m << " k=" << k;
        }
      }
    }
  }
}

TEST(Window, DegenerateWeightIsReported) {
  const auto g = spec1d(WindowKind::gaussian, 2.0, 1);
  EXPECT_THROW(g.evaluate_weight(0, 40 * g.grid_size(0)), DegenerateWindow);
  const auto s = spec1d(WindowKind::sinc_power, 2.0, 2);
  // c_k vanishes identically once |k| exceeds m * a
  EXPECT_THROW(s.evaluate_weight(0, 1000), DegenerateWindow);
}

TEST(Window, GaussianTruncatedMassDecreasesWithCutoff) {
  double previous = 1e300;
  for (int m = 1; m <= 15; ++m) {
    const auto w = spec1d(WindowKind::gaussian, 2.0, m);
    const int n = w.grid_size(0);
    const double b = w.gaussian_b();
    // 2 * int_{m/n}^{m/n + 40 sqrt(b)/n} phi, composite Simpson
    const double lo = static_cast<double>(m) / n, hi = lo + 40 * std::sqrt(b) / n;
    const int panels = 4000;
    const double h = (hi - lo) / panels;
    double s = 0;
    for (int i = 0; i <= panels; ++i) {
      const double f = reference_phi(WindowKind::gaussian, 2.0, m, 16, n, lo + i * h);
      s += (i == 0 || i == panels ? 1 : (i % 2 == 1 ? 4 : 2)) * f;
    }
    const double tail = 2 * s * h / 3;
    EXPECT_LT(tail, previous) << "m=" << m;
    previous = tail;
  }
}

TEST(WindowSupport, CenteredAtOrigin) {
  const auto w = WindowSpec(WindowKind::gaussian, 2.0, 2, make_index_set({16}));
  ASSERT_EQ(w.grid_size(0), 32);
  EXPECT_EQ(window_support(w, 0, 0.0), (std::vector<int>{30, 31, 0, 1, 2}));
}

TEST(WindowSupport, WrapsAcrossPeriodicBoundary) {
  const auto w = WindowSpec(WindowKind::gaussian, 2.0, 1, make_index_set({16}));
  // n x = 15.68: lattice sites 15, 16, 17 where 16 and 17 are the signed
  // indices -16 and -15
  const auto s = window_support(w, 0, 0.49);
  EXPECT_EQ(s, (std::vector<int>{15, 16, 17}));
  std::vector<int> signed_idx;
  for (int off : s) signed_idx.push_back(off >= 16 ? off - 32 : off);
  EXPECT_EQ(signed_idx, (std::vector<int>{15, -16, -15}));
  const auto low = window_support(w, 0, -0.5);
  EXPECT_EQ(low, (std::vector<int>{15, 16, 17}));
}

TEST(WindowSupport, AlwaysTwoMPlusOneIndicesAndZeroBeyondCutoff) {
  for (auto kind : kAllWindowKinds) {
    for (int m : {1, 2, 5}) {
      const auto w = WindowSpec(kind, 2.0, m, make_index_set({16}));
      const int n = w.grid_size(0);
      for (double x : {-0.5, -0.31, -0.0157, 0.0, 0.015625, 0.2, 0.4999}) {
        const auto s = window_support(w, 0, x);
        ASSERT_EQ(s.size(), static_cast<std::size_t>(2 * m + 1));
        const long center = std::lround(n * x);
        for (long l = center - m; l <= center + m; ++l) {
          if (std::abs(n * x - static_cast<double>(l)) > m) {
            EXPECT_EQ(w.spatial(0, x - static_cast<double>(l) / n), 0.0);
          }
        }
      }
    }
  }
}

TEST(Bspline, RecursionMatchesTruncatedPowerForm) {
  for (int k = 1; k <= 10; ++k) {
    for (int i = -80; i <= 80; ++i) {
      const double y = i / 10.0 + 0.013;
      EXPECT_NEAR(centered_bspline(k, y), bspline_truncated_powers(k, y), 1e-11) << "order " << k << " y=" << y;
    }
  }
}
