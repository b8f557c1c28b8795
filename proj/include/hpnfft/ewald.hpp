#pragma once

// Ewald summation for point charges in a cubic periodic box, with the
// reciprocal-space structure factor evaluated either literally or through
// the NFFT. Lengths are in units of the shortest cation-anion distance r0
// and the Coulomb prefactor is 1.
//
//   U_real  = 1/2 sum'_{i,j,n} q_i q_j erfc(alpha |r_ij + nL|) / |r_ij + nL|
//   U_recip = 1/(2 pi L) sum_{n != 0} exp(-pi^2 |n|^2 / (alpha L)^2) / |n|^2 |S(n)|^2
//             - alpha / sqrt(pi) sum_i q_i^2
//   S(n)    = sum_i q_i exp(-2 pi i n.r_i / L)

#include <array>
#include <cmath>
#include <numbers>
#include <optional>
#include <vector>

#include "hpnfft/decomp.hpp"
#include "hpnfft/errors.hpp"
#include "hpnfft/nfft.hpp"
#include "hpnfft/parallel.hpp"
#include "hpnfft/types.hpp"

namespace hpnfft {

using Vec3 = std::array<double, 3>;
using IntVec3 = std::array<int, 3>;

struct ChargedSystem {
  std::vector<Vec3> positions;
  std::vector<double> charges;
  double box_length = 0.0;
  int ions_per_molecule = 1;
  int z_plus = 1;
  int z_minus = 1;

  std::size_t size() const noexcept { return positions.size(); }

  double net_charge() const {
    double q = 0.0;
    for (double c : charges) q += c;
    return q;
  }
};

struct EwaldParams {
  double alpha = 1.5;
  double real_cutoff = 0.0;
  int kmax = 1;
  /// Sum periodic images beyond the minimum image. Required when
  /// real_cutoff exceeds half the box.
  bool expand_images = true;
};

/// How the structure factor is evaluated.
enum class SumMode : std::uint8_t { direct, nfft };

/// Transform settings for nfft-mode structure factors.
struct EnufOptions {
  WindowKind window = WindowKind::kaiser_bessel;
  double sigma = 2.0;
  int m = 8;
  int workers = 1;
  /// Largest |n_t| the transform covers; 0 sizes it to the request.
  int bandwidth = 0;
  /// When set, the transform runs as a collective hp_forward on this
  /// topology; the result is meaningful on rank 0.
  const Topology* topology = nullptr;
};

/// Complementary error function, |error| well below 1e-12 for x >= 0.
inline double erfc(double x) { return std::erfc(x); }

/// Fluorite: per cubic cell, cations (+2) on the face-centred sites and
/// anions (-1) on the eight (1/4, 1/4, 1/4)-type sites. The cell edge is
/// 4/sqrt(3) so the nearest cation-anion distance is 1.
inline ChargedSystem build_fluorite(int cells_per_side) {
  if (cells_per_side < 1) throw InvalidSize("fluorite needs at least one cell per side");
  const double edge = 4.0 / std::sqrt(3.0);
  static constexpr std::array<Vec3, 4> kCations = {{{0, 0, 0}, {0.5, 0.5, 0}, {0.5, 0, 0.5}, {0, 0.5, 0.5}}};
  ChargedSystem sys;
  sys.box_length = cells_per_side * edge;
  sys.ions_per_molecule = 3;
  sys.z_plus = 2;
  sys.z_minus = 1;
  const auto c = static_cast<std::size_t>(cells_per_side);
  sys.positions.reserve(12 * c * c * c);
  sys.charges.reserve(12 * c * c * c);
  for (int a = 0; a < cells_per_side; ++a) {
    for (int b = 0; b < cells_per_side; ++b) {
      for (int g = 0; g < cells_per_side; ++g) {
        const Vec3 origin = {a * edge, b * edge, g * edge};
        for (const auto& f : kCations) {
          sys.positions.push_back({origin[0] + f[0] * edge, origin[1] + f[1] * edge, origin[2] + f[2] * edge});
          sys.charges.push_back(2.0);
        }
        for (double fx : {0.25, 0.75}) {
          for (double fy : {0.25, 0.75}) {
            for (double fz : {0.25, 0.75}) {
              sys.positions.push_back({origin[0] + fx * edge, origin[1] + fy * edge, origin[2] + fz * edge});
              sys.charges.push_back(-1.0);
            }
          }
        }
      }
    }
  }
  return sys;
}

/// Rock salt: alternating +1/-1 charges on a simple cubic lattice of unit
/// spacing; 2 * cells_per_side sites per box edge.
inline ChargedSystem build_rock_salt(int cells_per_side) {
  if (cells_per_side < 1) throw InvalidSize("rock salt needs at least one cell per side");
  const int sites = 2 * cells_per_side;
  ChargedSystem sys;
  sys.box_length = sites;
  sys.ions_per_molecule = 2;
  sys.z_plus = 1;
  sys.z_minus = 1;
  for (int a = 0; a < sites; ++a) {
    for (int b = 0; b < sites; ++b) {
      for (int g = 0; g < sites; ++g) {
        sys.positions.push_back({double(a), double(b), double(g)});
        sys.charges.push_back((a + b + g) % 2 == 0 ? 1.0 : -1.0);
      }
    }
  }
  return sys;
}

/// Cutoffs for which both sums are converged far below 1e-10: the real
/// sum stops where alpha r_c = 8, the reciprocal sum where the Gaussian
/// factor drops below 1e-12.
inline EwaldParams converged_params(const ChargedSystem& sys, double alpha) {
  EwaldParams p;
  p.alpha = alpha;
  p.real_cutoff = 8.0 / alpha;
  p.expand_images = p.real_cutoff > 0.5 * sys.box_length;
  const double al = alpha * sys.box_length;
  p.kmax = std::max(1, static_cast<int>(std::ceil(al * std::sqrt(std::log(1e12)) / std::numbers::pi)));
  return p;
}

namespace detail {

inline void check_system(const ChargedSystem& sys) {
  if (sys.positions.size() != sys.charges.size()) throw ShapeError("positions and charges differ in length");
  if (!(sys.box_length > 0)) throw InvalidSize("box length must be positive");
}

inline void check_params(const EwaldParams& p) {
  if (!(p.alpha > 0)) throw InvalidParameter("Ewald alpha must be positive");
  if (p.kmax < 1) throw InvalidParameter("kmax must be at least 1");
}

}  // namespace detail

inline double real_space_energy(const ChargedSystem& sys, const EwaldParams& p, int workers = 1) {
  detail::check_system(sys);
  detail::check_params(p);
  const double box = sys.box_length;
  const double rc = p.real_cutoff;
  if (!(rc > 0)) throw InvalidCutoff("real-space cutoff must be positive");
  if (rc > 0.5 * box && !p.expand_images) {
    throw InvalidCutoff("cutoff exceeds half the box; enable image expansion");
  }
  const double rc2 = rc * rc;
  const int shells = p.expand_images ? static_cast<int>(std::ceil(rc / box + 0.5)) : 0;
  const std::size_t n = sys.size();
  const int w = std::max(1, workers);
  std::vector<double> partial(static_cast<std::size_t>(w), 0.0);

  parallel_blocks(n, w, [&](int worker, std::size_t begin, std::size_t end) {
    double acc = 0.0;
    for (std::size_t i = begin; i < end; ++i) {
      const double qi = sys.charges[i];
      if (qi == 0.0) continue;
      for (std::size_t j = 0; j < n; ++j) {
        const double qj = sys.charges[j];
        if (qj == 0.0) continue;
        Vec3 r;
        for (int t = 0; t < 3; ++t) {
          const double d = sys.positions[i][t] - sys.positions[j][t];
          r[t] = d - box * std::nearbyint(d / box);
        }
        for (int a = -shells; a <= shells; ++a) {
          const double x = r[0] + a * box;
          if (std::abs(x) >= rc) continue;
          for (int b = -shells; b <= shells; ++b) {
            const double y = r[1] + b * box;
            if (std::abs(y) >= rc) continue;
            for (int c = -shells; c <= shells; ++c) {
              const double z = r[2] + c * box;
              const double d2 = x * x + y * y + z * z;
              if (d2 >= rc2) continue;
              if (i == j && a == 0 && b == 0 && c == 0) continue;
              const double d = std::sqrt(d2);
              acc += qi * qj * erfc(p.alpha * d) / d;
            }
          }
        }
      }
    }
    partial[static_cast<std::size_t>(worker)] = 0.5 * acc;
  });
  double total = 0.0;
  for (double e : partial) total += e;
  return total;
}

/// Bandwidth of the index set that covers every |n_t| <= kmax.
inline FrequencyIndexSet reciprocal_index_set(int kmax) { return FrequencyIndexSet({2 * kmax + 2, 2 * kmax + 2, 2 * kmax + 2}); }

/// Ion positions mapped into [-0.5, 0.5)^3 with the charges as sample
/// values, the form consumed by the transforms and the points file.
inline std::pair<PointSet, SampleValues> crystal_samples(const ChargedSystem& sys) {
  detail::check_system(sys);
  std::vector<double> coords;
  coords.reserve(3 * sys.size());
  SampleValues values;
  values.reserve(sys.size());
  for (std::size_t i = 0; i < sys.size(); ++i) {
    for (int t = 0; t < 3; ++t) coords.push_back(sys.positions[i][t] / sys.box_length - 0.5);
    values.emplace_back(sys.charges[i], 0.0);
  }
  return {PointSet(3, std::move(coords)), std::move(values)};
}

/// S(n) over all n in I_N with N_t = 2 kmax + 2, via one NFFT. The shift
/// r / L -> r / L - 1/2 multiplies every coefficient by (-1)^(n0+n1+n2),
/// which is undone here.
inline CoefficientArray structure_factor_grid(const ChargedSystem& sys, int kmax, const EnufOptions& opts) {
  const auto index_set = reciprocal_index_set(kmax);
  const auto cfg = make_nfft_config(index_set, opts.window, opts.sigma, opts.m, opts.workers);
  const auto [points, values] = crystal_samples(sys);
  auto coeffs = opts.topology != nullptr ? hp_forward(points, values, cfg, *opts.topology)
                                         : nfft_forward(points, values, cfg);
  std::vector<int> k(3);
  for (std::size_t pos = 0; pos < coeffs.size(); ++pos) {
    index_set.index(pos, k);
    if ((k[0] + k[1] + k[2]) % 2 != 0) coeffs[pos] = -coeffs[pos];
  }
  return coeffs;
}

/// S(n) for each requested integer vector.
inline std::vector<Complex> structure_factor(const ChargedSystem& sys, const std::vector<IntVec3>& kvecs, SumMode mode,
                                             const EnufOptions& opts = {}) {
  detail::check_system(sys);
  std::vector<Complex> out(kvecs.size());
  if (mode == SumMode::direct) {
    const double scale = -2.0 * std::numbers::pi / sys.box_length;
    for (std::size_t v = 0; v < kvecs.size(); ++v) {
      Complex acc{};
      for (std::size_t i = 0; i < sys.size(); ++i) {
        double phase = 0.0;
        for (int t = 0; t < 3; ++t) phase += kvecs[v][t] * sys.positions[i][t];
        acc += sys.charges[i] * std::polar(1.0, scale * phase);
      }
      out[v] = acc;
    }
    return out;
  }
  int kmax = opts.bandwidth;
  if (kmax <= 0) {
    for (const auto& kv : kvecs) {
      for (int t = 0; t < 3; ++t) kmax = std::max(kmax, std::abs(kv[t]));
    }
    kmax = std::max(kmax, 1);
  }
  const auto grid = structure_factor_grid(sys, kmax, opts);
  for (std::size_t v = 0; v < kvecs.size(); ++v) {
    const std::array<int, 3> k = kvecs[v];
    if (std::max({std::abs(k[0]), std::abs(k[1]), std::abs(k[2])}) > kmax) throw BandwidthError("k-vector outside transform bandwidth");
    out[v] = grid.at(k);
  }
  return out;
}

namespace detail {

/// 1/(2 pi L) sum_{0 < |n_t| <= kmax} exp(-pi^2 |n|^2 / (alpha L)^2) / |n|^2 |S(n)|^2,
/// with S supplied by `s_of(n)`.
template <class SOf>
double reciprocal_sum(const ChargedSystem& sys, const EwaldParams& p, SOf&& s_of) {
  const double al = p.alpha * sys.box_length;
  const double damp = std::numbers::pi * std::numbers::pi / (al * al);
  double sum = 0.0;
  for (int a = -p.kmax; a <= p.kmax; ++a) {
    for (int b = -p.kmax; b <= p.kmax; ++b) {
      for (int c = -p.kmax; c <= p.kmax; ++c) {
        if (a == 0 && b == 0 && c == 0) continue;
        const double n2 = double(a) * a + double(b) * b + double(c) * c;
        sum += std::exp(-damp * n2) / n2 * std::norm(s_of(a, b, c));
      }
    }
  }
  return sum / (2.0 * std::numbers::pi * sys.box_length);
}

inline double self_energy(const ChargedSystem& sys, double alpha) {
  double q2 = 0.0;
  for (double q : sys.charges) q2 += q * q;
  return alpha / std::sqrt(std::numbers::pi) * q2;
}

}  // namespace detail

inline double reciprocal_energy(const ChargedSystem& sys, const EwaldParams& p, SumMode mode,
                                const EnufOptions& opts = {}) {
  detail::check_system(sys);
  detail::check_params(p);
  const int k = p.kmax;
  const auto width = static_cast<std::size_t>(2 * k + 1);
  double sum = 0.0;
  if (mode == SumMode::direct) {
    // Per-axis phase tables: exp(-2 pi i n r_t / L) for n in [-kmax, kmax].
    const std::size_t n_ions = sys.size();
    std::vector<Complex> table(3 * n_ions * width);
    for (std::size_t i = 0; i < n_ions; ++i) {
      for (int t = 0; t < 3; ++t) {
        for (int n = -k; n <= k; ++n) {
          table[(i * 3 + static_cast<std::size_t>(t)) * width + static_cast<std::size_t>(n + k)] =
              std::polar(1.0, -2.0 * std::numbers::pi * n * sys.positions[i][t] / sys.box_length);
        }
      }
    }
    const int w = std::max(1, opts.workers);
    std::vector<Complex> s(width * width * width);
    parallel_blocks(s.size(), w, [&](int, std::size_t begin, std::size_t end) {
      for (std::size_t pos = begin; pos < end; ++pos) {
        const std::size_t a = pos / (width * width), b = (pos / width) % width, c = pos % width;
        Complex acc{};
        for (std::size_t i = 0; i < n_ions; ++i) {
          const Complex* row = &table[i * 3 * width];
          acc += sys.charges[i] * (row[a] * row[width + b] * row[2 * width + c]);
        }
        s[pos] = acc;
      }
    });
    sum = detail::reciprocal_sum(sys, p, [&](int a, int b, int c) {
      return s[(static_cast<std::size_t>(a + k) * width + static_cast<std::size_t>(b + k)) * width +
               static_cast<std::size_t>(c + k)];
    });
  } else {
    if (opts.bandwidth > 0 && opts.bandwidth < k) throw BandwidthError("kmax exceeds the transform bandwidth");
    const auto grid = structure_factor_grid(sys, opts.bandwidth > 0 ? opts.bandwidth : k, opts);
    sum = detail::reciprocal_sum(sys, p, [&](int a, int b, int c) {
      const std::array<int, 3> kv = {a, b, c};
      return grid.at(kv);
    });
  }
  return sum - detail::self_energy(sys, p.alpha);
}

struct EwaldEnergy {
  double real = 0.0;
  double reciprocal = 0.0;
  double total() const { return real + reciprocal; }
};

inline EwaldEnergy ewald_energy(const ChargedSystem& sys, const EwaldParams& p, SumMode mode,
                                const EnufOptions& opts = {}) {
  return {real_space_energy(sys, p, opts.workers), reciprocal_energy(sys, p, mode, opts)};
}

/// |U| m / (N Z+ Z-) for a total electrostatic energy U.
inline double madelung_from_energy(const ChargedSystem& sys, double total_energy) {
  return std::abs(total_energy) * sys.ions_per_molecule /
         (static_cast<double>(sys.size()) * sys.z_plus * sys.z_minus);
}

inline double madelung_constant(const ChargedSystem& sys, const EwaldParams& p, SumMode mode,
                                const EnufOptions& opts = {}) {
  return madelung_from_energy(sys, ewald_energy(sys, p, mode, opts).total());
}

}  // namespace hpnfft
