#pragma once

// Sweep drivers behind the command-line tool. Every sweep returns a
// SweepReport: a CSV table plus a metadata block written next to it as
// <csv>.meta.json. Tables are byte-reproducible for a fixed seed apart from
// the columns listed in SweepReport::timing_columns.

#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "hpnfft/decomp.hpp"
#include "hpnfft/errors.hpp"
#include "hpnfft/ewald.hpp"
#include "hpnfft/ndft.hpp"
#include "hpnfft/nfft.hpp"
#include "hpnfft/transport.hpp"
#include "hpnfft/types.hpp"
#include "hpnfft/window.hpp"

namespace hpnfft {

using Cell = std::variant<std::string, std::int64_t, double>;

/// Shortest decimal text that reads back to the same double.
inline std::string format_real(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string format_dims(const std::vector<int>& dims) {
  std::string s;
  for (std::size_t t = 0; t < dims.size(); ++t) {
    if (t != 0) s += 'x';
    s += std::to_string(dims[t]);
  }
  return s;
}

inline std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

class SweepReport {
 public:
  SweepReport(std::string command, std::vector<std::string> columns, std::vector<std::string> timing_columns = {})
      : command_(std::move(command)), columns_(std::move(columns)), timing_(std::move(timing_columns)) {}

  const std::string& command() const { return command_; }
  const std::vector<std::string>& columns() const { return columns_; }
  const std::vector<std::string>& timing_columns() const { return timing_; }
  const std::vector<std::vector<Cell>>& rows() const { return rows_; }

  /// Appends one row; numeric metrics must be finite.
  void add_row(std::vector<Cell> row) {
    if (row.size() != columns_.size()) throw ShapeError("row has " + std::to_string(row.size()) + " cells, expected " +
                                                        std::to_string(columns_.size()));
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (const double* v = std::get_if<double>(&row[c]); v != nullptr && !std::isfinite(*v)) {
        throw Error("non-finite value in column " + columns_[c]);
      }
    }
    rows_.push_back(std::move(row));
  }

  std::size_t column(const std::string& name) const {
    const auto it = std::find(columns_.begin(), columns_.end(), name);
    if (it == columns_.end()) throw Error("no column " + name);
    return static_cast<std::size_t>(it - columns_.begin());
  }

  double real(std::size_t row, const std::string& name) const {
    const auto& cell = rows_.at(row).at(column(name));
    if (const double* v = std::get_if<double>(&cell)) return *v;
    if (const std::int64_t* i = std::get_if<std::int64_t>(&cell)) return static_cast<double>(*i);
    throw Error("column " + name + " is not numeric");
  }

  nlohmann::json& config() { return config_; }
  const nlohmann::json& config() const { return config_; }
  void set_workers(int w) { workers_ = w; }
  int workers() const { return workers_; }

  std::string csv() const { return csv_excluding({}); }

  /// The CSV with the named columns dropped; used for determinism checks.
  std::string csv_excluding(const std::vector<std::string>& skip) const {
    std::vector<bool> keep(columns_.size());
    for (std::size_t c = 0; c < columns_.size(); ++c) {
      keep[c] = std::find(skip.begin(), skip.end(), columns_[c]) == skip.end();
    }
    std::string out;
    auto emit = [&](const std::vector<std::string>& cells) {
      bool first = true;
      for (std::size_t c = 0; c < cells.size(); ++c) {
        if (!keep[c]) continue;
        if (!first) out += ',';
        out += cells[c];
        first = false;
      }
      out += '\n';
    };
    emit(columns_);
    for (const auto& row : rows_) {
      std::vector<std::string> cells;
      cells.reserve(row.size());
      for (const auto& cell : row) {
        if (const auto* s = std::get_if<std::string>(&cell)) {
          cells.push_back(*s);
        } else if (const auto* i = std::get_if<std::int64_t>(&cell)) {
          cells.push_back(std::to_string(*i));
        } else {
          cells.push_back(format_real(std::get<double>(cell)));
        }
      }
      emit(cells);
    }
    return out;
  }

  nlohmann::json metadata(const std::string& timestamp = utc_timestamp()) const {
    return nlohmann::json{{"command", command_}, {"columns", columns_},     {"timing_columns", timing_},
                          {"config", config_},   {"workers", workers_},     {"rows", rows_.size()},
                          {"timestamp", timestamp}};
  }

  /// Writes the CSV to `path` and the metadata to `path`.meta.json.
  void write(const std::string& path) const {
    write_text(path, csv());
    write_text(path + ".meta.json", metadata().dump(2) + "\n");
  }

 private:
  static void write_text(const std::string& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw Error("cannot open " + path + " for writing");
    f << text;
    if (!f) throw Error("write failed: " + path);
  }

  std::string command_;
  std::vector<std::string> columns_;
  std::vector<std::string> timing_;
  std::vector<std::vector<Cell>> rows_;
  nlohmann::json config_ = nlohmann::json::object();
  int workers_ = 1;
};

// ---------------------------------------------------------------------------
// Seeded inputs

/// mt19937_64 with a fixed mapping of its 64-bit output to doubles, so the
/// generated inputs do not depend on the standard library's distributions.
class SampleGenerator {
 public:
  explicit SampleGenerator(std::uint64_t seed) : engine_(seed) {}

  /// Uniform on [0, 1) from the top 53 bits.
  double unit() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  PointSet points(std::size_t dim, std::size_t count) {
    std::vector<double> coords(dim * count);
    for (auto& x : coords) x = unit() - 0.5;
    return PointSet(dim, std::move(coords));
  }

  /// Real and imaginary parts uniform on [0, 1).
  SampleValues values(std::size_t count) {
    SampleValues v(count);
    for (auto& z : v) {
      const double re = unit();
      z = Complex(re, unit());
    }
    return v;
  }

  CoefficientArray coefficients(const FrequencyIndexSet& index_set) {
    CoefficientArray c(index_set);
    for (std::size_t i = 0; i < c.size(); ++i) {
      const double re = unit();
      c[i] = Complex(re, unit());
    }
    return c;
  }

 private:
  std::mt19937_64 engine_;
};

// ---------------------------------------------------------------------------
// Argument parsing helpers

namespace detail {

inline std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> parts;
  std::string cur;
  std::istringstream in(text);
  while (std::getline(in, cur, sep)) parts.push_back(cur);
  if (!text.empty() && text.back() == sep) parts.emplace_back();
  return parts;
}

inline long long to_integer(const std::string& s) {
  std::size_t used = 0;
  long long v = 0;
  try {
    v = std::stoll(s, &used);
  } catch (const std::exception&) {
    throw std::invalid_argument("not an integer: '" + s + "'");
  }
  if (used != s.size()) throw std::invalid_argument("not an integer: '" + s + "'");
  return v;
}

inline double to_real(const std::string& s) {
  std::size_t used = 0;
  double v = 0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    throw std::invalid_argument("not a number: '" + s + "'");
  }
  if (used != s.size() || !std::isfinite(v)) throw std::invalid_argument("not a number: '" + s + "'");
  return v;
}

}  // namespace detail

/// "16,16,16" -> {16, 16, 16}.
inline std::vector<int> parse_int_list(const std::string& text) {
  std::vector<int> out;
  for (const auto& p : detail::split(text, ',')) out.push_back(static_cast<int>(detail::to_integer(p)));
  if (out.empty()) throw std::invalid_argument("empty list");
  return out;
}

/// "1:15" -> 1..15, "8" -> {8}, "2,4,8" -> {2, 4, 8}.
inline std::vector<int> parse_int_range(const std::string& text) {
  if (text.find(':') == std::string::npos) return parse_int_list(text);
  const auto p = detail::split(text, ':');
  if (p.size() != 2) throw std::invalid_argument("range must be LO:HI, got '" + text + "'");
  const auto lo = detail::to_integer(p[0]);
  const auto hi = detail::to_integer(p[1]);
  if (hi < lo) throw std::invalid_argument("empty range '" + text + "'");
  std::vector<int> out;
  for (auto v = lo; v <= hi; ++v) out.push_back(static_cast<int>(v));
  return out;
}

/// "1.2:1.8:0.1" -> 1.2, 1.3, ..., 1.8; "1.5" or "1.2,1.5" as listed.
inline std::vector<double> parse_real_range(const std::string& text) {
  if (text.find(':') == std::string::npos) {
    std::vector<double> out;
    for (const auto& p : detail::split(text, ',')) out.push_back(detail::to_real(p));
    if (out.empty()) throw std::invalid_argument("empty list");
    return out;
  }
  const auto p = detail::split(text, ':');
  if (p.size() != 3) throw std::invalid_argument("range must be LO:HI:STEP, got '" + text + "'");
  const double lo = detail::to_real(p[0]);
  const double hi = detail::to_real(p[1]);
  const double step = detail::to_real(p[2]);
  if (!(step > 0) || hi < lo) throw std::invalid_argument("bad range '" + text + "'");
  const auto n = static_cast<long long>(std::floor((hi - lo) / step + 1e-9));
  std::vector<double> out;
  for (long long i = 0; i <= n; ++i) out.push_back(lo + static_cast<double>(i) * step);
  return out;
}

inline std::vector<WindowKind> parse_window_list(const std::string& text) {
  if (text == "all") return {kAllWindowKinds.begin(), kAllWindowKinds.end()};
  std::vector<WindowKind> out;
  for (const auto& p : detail::split(text, ',')) {
    const auto kind = parse_window_kind(p);
    if (!kind) throw std::invalid_argument("unknown window '" + p + "'");
    out.push_back(*kind);
  }
  return out;
}

// ---------------------------------------------------------------------------
// precision

struct PrecisionOptions {
  std::vector<int> dims{16, 16, 16};
  std::size_t points = 4096;
  double sigma = 2.0;
  std::vector<int> m_values = parse_int_range("1:15");
  std::vector<WindowKind> windows{kAllWindowKinds.begin(), kAllWindowKinds.end()};
  std::uint64_t seed = 1;
  int workers = 1;
  bool force = false;
};

inline const std::vector<std::string>& precision_columns() {
  static const std::vector<std::string> cols = {"window", "m",     "sigma",         "dims",
                                                "points", "seed",  "forward_error", "adjoint_error"};
  return cols;
}

/// Oracle work above this many point-frequency pairs needs `force`.
inline constexpr double kOracleCostLimit = 1e9;

/// Relative l2 error of the NFFT and its adjoint against the direct sums
/// for every (window, m). Inputs are drawn from `seed`: points, then sample
/// values, then coefficients.
inline SweepReport cmd_precision(const PrecisionOptions& opt) {
  const auto index_set = make_index_set(opt.dims);
  const double cost = static_cast<double>(opt.points) * static_cast<double>(index_set.size());
  if (cost > kOracleCostLimit && !opt.force) {
    throw ResourceError("direct oracle needs " + format_real(cost) + " terms per transform (limit 1e9); use --force");
  }
  if (opt.points == 0) throw InvalidSize("precision sweep needs at least one point");
  SampleGenerator gen(opt.seed);
  const auto points = gen.points(opt.dims.size(), opt.points);
  const auto values = gen.values(opt.points);
  const auto coeffs = gen.coefficients(index_set);
  const auto forward_ref = ndft_direct_forward(points, values, index_set, opt.workers);
  const auto adjoint_ref = ndft_direct_adjoint(coeffs, points, opt.workers);

  SweepReport report("precision", precision_columns());
  report.set_workers(opt.workers);
  auto& cfg = report.config();
  cfg["dims"] = opt.dims;
  cfg["points"] = opt.points;
  cfg["sigma"] = opt.sigma;
  cfg["m"] = opt.m_values;
  std::vector<std::string> names;
  for (auto k : opt.windows) names.emplace_back(window_name(k));
  cfg["windows"] = names;
  cfg["seed"] = opt.seed;
  cfg["force"] = opt.force;

  for (auto kind : opt.windows) {
    for (int m : opt.m_values) {
      const auto nc = make_nfft_config(index_set, kind, opt.sigma, m, opt.workers);
      const double fe = relative_l2_error(nfft_forward(points, values, nc), forward_ref);
      const auto adj = nfft_adjoint(coeffs, points, nc);
      const double ae = relative_l2_error(std::span<const Complex>(adj), std::span<const Complex>(adjoint_ref));
      report.add_row({std::string(window_name(kind)), std::int64_t{m}, opt.sigma, format_dims(opt.dims),
                      static_cast<std::int64_t>(opt.points), static_cast<std::int64_t>(opt.seed), fe, ae});
    }
  }
  return report;
}

// ---------------------------------------------------------------------------
// perf

struct PerfOptions {
  std::vector<int> sides{58};  // M = side^d points
  std::vector<int> workers{1, 2, 4};
  int repetitions = 5;
  std::vector<int> dims{32, 32, 32};
  WindowKind window = WindowKind::kaiser_bessel;
  double sigma = 2.0;
  int m = 4;
  std::uint64_t seed = 1;
  bool force = false;
};

inline const std::vector<std::string>& perf_columns() {
  static const std::vector<std::string> cols = {
      "points", "workers", "window", "m", "sigma", "dims", "repetitions", "median_seconds", "speedup", "raw_seconds"};
  return cols;
}

inline const std::vector<std::string>& perf_timing_columns() {
  static const std::vector<std::string> cols = {"median_seconds", "speedup", "raw_seconds"};
  return cols;
}

/// Physical memory currently available, in bytes.
inline double available_memory_bytes() {
  const long pages = ::sysconf(_SC_AVPHYS_PAGES);
  const long page = ::sysconf(_SC_PAGESIZE);
  if (pages <= 0 || page <= 0) return 0.0;
  return static_cast<double>(pages) * static_cast<double>(page);
}

/// Rough peak footprint of hp_forward with `ranks` in-process ranks.
inline double perf_memory_estimate(std::size_t points, int ranks, const NfftConfig& cfg) {
  const double d = static_cast<double>(cfg.index_set.dim());
  const double per_point = (d + 2.0) * sizeof(double);
  double grid = sizeof(Complex);
  for (int n : cfg.window.grid_dims()) grid *= n;
  const double coeffs = static_cast<double>(cfg.index_set.size()) * sizeof(Complex);
  // inputs, the partitioned copy and its wire image; per rank two grids
  // and a few coefficient arrays in flight
  return 3.0 * static_cast<double>(points) * per_point + ranks * (2.0 * grid + 4.0 * coeffs);
}

inline double median(std::vector<double> v) {
  if (v.empty()) throw Error("median of nothing");
  std::sort(v.begin(), v.end());
  const std::size_t h = v.size() / 2;
  return v.size() % 2 == 1 ? v[h] : 0.5 * (v[h - 1] + v[h]);
}

/// Wall-clock seconds of one hp_forward over `ranks` in-process ranks.
inline double time_hp_forward(const PointSet& points, const SampleValues& values, const NfftConfig& cfg, int ranks) {
  const auto t0 = std::chrono::steady_clock::now();
  run_in_process(ranks, [&](Topology& topo) {
    if (topo.is_root()) {
      hp_forward(points, values, cfg, topo);
    } else {
      hp_forward(PointSet(points.dim()), SampleValues{}, cfg, topo);
    }
  });
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

/// Median wall time of hp_forward per (point count, worker count) and the
/// speedup over one worker at the same point count.
inline SweepReport cmd_perf(const PerfOptions& opt) {
  if (opt.repetitions < 1) throw InvalidSize("repetitions must be at least 1");
  for (int w : opt.workers) {
    if (w < 1) throw InvalidTopology("worker counts must be positive");
  }
  const auto index_set = make_index_set(opt.dims);
  const auto cfg = make_nfft_config(index_set, opt.window, opt.sigma, opt.m, 1);
  const std::size_t d = opt.dims.size();

  const int max_ranks = std::max(1, *std::max_element(opt.workers.begin(), opt.workers.end()));
  const double avail = available_memory_bytes();
  for (int side : opt.sides) {
    if (side < 1) throw InvalidSize("point side length must be positive");
    const double m = std::pow(static_cast<double>(side), static_cast<double>(d));
    const double need = perf_memory_estimate(static_cast<std::size_t>(m), max_ranks, cfg);
    if (avail > 0 && need > 0.8 * avail && !opt.force) {
      throw ResourceError("perf sweep at " + std::to_string(side) + "^" + std::to_string(d) + " points needs about " +
                          format_real(std::ceil(need / 1048576.0)) + " MiB, " +
                          format_real(std::floor(avail / 1048576.0)) + " MiB available");
    }
  }

  SweepReport report("perf", perf_columns(), perf_timing_columns());
  report.set_workers(max_ranks);
  auto& c = report.config();
  c["sides"] = opt.sides;
  c["workers"] = opt.workers;
  c["repetitions"] = opt.repetitions;
  c["dims"] = opt.dims;
  c["window"] = window_name(opt.window);
  c["sigma"] = opt.sigma;
  c["m"] = opt.m;
  c["seed"] = opt.seed;

  for (int side : opt.sides) {
    std::size_t count = 1;
    for (std::size_t t = 0; t < d; ++t) count *= static_cast<std::size_t>(side);
    SampleGenerator gen(opt.seed);
    const auto points = gen.points(d, count);
    const auto values = gen.values(count);

    auto sweep = [&](int ranks) {
      std::vector<double> times;
      for (int r = 0; r < opt.repetitions; ++r) times.push_back(time_hp_forward(points, values, cfg, ranks));
      return times;
    };
    const auto has_one = std::find(opt.workers.begin(), opt.workers.end(), 1) != opt.workers.end();
    const double baseline = has_one ? 0.0 : median(sweep(1));
    std::vector<std::pair<int, std::vector<double>>> runs;
    for (int w : opt.workers) runs.emplace_back(w, sweep(w));
    double base = baseline;
    for (const auto& [w, times] : runs) {
      if (w == 1) base = median(times);
    }
    for (const auto& [w, times] : runs) {
      const double med = median(times);
      std::string raw;
      for (std::size_t i = 0; i < times.size(); ++i) {
        if (i != 0) raw += ';';
        raw += format_real(times[i]);
      }
      const double speedup = w == 1 ? 1.0 : base / med;
      report.add_row({static_cast<std::int64_t>(count), std::int64_t{w}, std::string(window_name(opt.window)),
                      std::int64_t{opt.m}, opt.sigma, format_dims(opt.dims), std::int64_t{opt.repetitions}, med,
                      speedup, raw});
    }
  }
  return report;
}

// ---------------------------------------------------------------------------
// madelung

enum class Crystal : std::uint8_t { fluorite, rock_salt };

inline Crystal parse_crystal(const std::string& name) {
  if (name == "fluorite") return Crystal::fluorite;
  if (name == "rock_salt" || name == "rocksalt") return Crystal::rock_salt;
  throw std::invalid_argument("unknown crystal '" + name + "'");
}

inline const char* crystal_name(Crystal c) { return c == Crystal::fluorite ? "fluorite" : "rock_salt"; }

inline ChargedSystem build_crystal(Crystal c, int cells) {
  return c == Crystal::fluorite ? build_fluorite(cells) : build_rock_salt(cells);
}

struct MadelungOptions {
  int cells = 4;
  std::vector<double> alphas = parse_real_range("1.2:1.8:0.1");
  SumMode mode = SumMode::nfft;
  Crystal crystal = Crystal::fluorite;
  EnufOptions enuf{};
};

inline const std::vector<std::string>& madelung_columns() {
  static const std::vector<std::string> cols = {"crystal",     "cells",          "ions",
                                                "alpha",       "mode",           "real_cutoff",
                                                "kmax",        "real_energy",    "reciprocal_energy",
                                                "total_energy", "madelung"};
  return cols;
}

/// Energies and the Madelung constant of the crystal for each alpha, at
/// converged cutoffs.
inline SweepReport cmd_madelung(const MadelungOptions& opt) {
  const auto sys = build_crystal(opt.crystal, opt.cells);
  const char* mode = opt.mode == SumMode::nfft ? "nfft" : "direct";
  SweepReport report("madelung", madelung_columns());
  report.set_workers(opt.enuf.workers);
  auto& c = report.config();
  c["crystal"] = crystal_name(opt.crystal);
  c["cells"] = opt.cells;
  c["alphas"] = opt.alphas;
  c["mode"] = mode;
  c["window"] = window_name(opt.enuf.window);
  c["sigma"] = opt.enuf.sigma;
  c["m"] = opt.enuf.m;
  c["distributed_ranks"] = opt.enuf.topology != nullptr ? opt.enuf.topology->num_nodes() : 1;

  for (double alpha : opt.alphas) {
    const auto p = converged_params(sys, alpha);
    const auto e = ewald_energy(sys, p, opt.mode, opt.enuf);
    report.add_row({std::string(crystal_name(opt.crystal)), std::int64_t{opt.cells}, static_cast<std::int64_t>(sys.size()),
                    alpha, std::string(mode), p.real_cutoff, std::int64_t{p.kmax}, e.real, e.reciprocal, e.total(),
                    madelung_from_energy(sys, e.total())});
  }
  return report;
}

// ---------------------------------------------------------------------------
// transform output

/// One row per frequency: k0..k{d-1}, re, im in index-set order.
inline SweepReport coefficient_report(const CoefficientArray& coeffs) {
  const auto& is = coeffs.index_set();
  std::vector<std::string> cols;
  for (std::size_t t = 0; t < is.dim(); ++t) cols.push_back("k" + std::to_string(t));
  cols.emplace_back("re");
  cols.emplace_back("im");
  SweepReport report("transform", cols);
  std::vector<int> k(is.dim());
  for (std::size_t pos = 0; pos < coeffs.size(); ++pos) {
    is.index(pos, k);
    std::vector<Cell> row;
    for (int v : k) row.emplace_back(std::int64_t{v});
    row.emplace_back(coeffs[pos].real());
    row.emplace_back(coeffs[pos].imag());
    report.add_row(std::move(row));
  }
  return report;
}

/// One row per point: index, re, im.
inline SweepReport sample_report(const SampleValues& values) {
  SweepReport report("transform", {"index", "re", "im"});
  for (std::size_t j = 0; j < values.size(); ++j) {
    report.add_row({static_cast<std::int64_t>(j), values[j].real(), values[j].imag()});
  }
  return report;
}

/// Reads a coefficient CSV as written by coefficient_report. Frequencies
/// absent from the file are zero.
inline CoefficientArray read_coefficient_csv(const std::string& path, const FrequencyIndexSet& index_set) {
  std::ifstream f(path);
  if (!f) throw Error("cannot open " + path);
  std::string line;
  std::size_t offset = 0;
  if (!std::getline(f, line)) throw FormatError(0, "empty coefficient file");
  const std::size_t d = index_set.dim();
  if (detail::split(line, ',').size() != d + 2) {
    throw FormatError(0, "header has the wrong column count for a " + std::to_string(d) + "-d index set");
  }
  offset += line.size() + 1;
  CoefficientArray out(index_set);
  std::vector<int> k(d);
  std::size_t row = 0;
  while (std::getline(f, line)) {
    if (line.empty()) {
      offset += 1;
      continue;
    }
    const auto cells = detail::split(line, ',');
    try {
      if (cells.size() != d + 2) throw std::invalid_argument("wrong column count");
      for (std::size_t t = 0; t < d; ++t) k[t] = static_cast<int>(detail::to_integer(cells[t]));
      if (!index_set.contains(k)) throw std::invalid_argument("frequency outside the index set");
      out[index_set.position(k)] = Complex(detail::to_real(cells[d]), detail::to_real(cells[d + 1]));
    } catch (const std::invalid_argument& e) {
      throw FormatError(offset, "row " + std::to_string(row) + ": " + e.what());
    }
    offset += line.size() + 1;
    ++row;
  }
  return out;
}

}  // namespace hpnfft
