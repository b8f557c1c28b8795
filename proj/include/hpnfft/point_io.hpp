#pragma once

// Points file: "NDPT" | u16 version = 1 | u32 dim | u64 count, then count
// records of dim x f64 coordinates followed by the value as 2 x f64
// (real, imag). Little-endian throughout.

#include <array>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

#include "hpnfft/errors.hpp"
#include "hpnfft/types.hpp"
#include "hpnfft/wire.hpp"

namespace hpnfft {

inline constexpr std::array<char, 4> kPointsMagic = {'N', 'D', 'P', 'T'};
inline constexpr std::uint16_t kPointsVersion = 1;
inline constexpr std::size_t kPointsHeaderSize = 18;

struct PointsFile {
  PointSet points;
  SampleValues values;
};

inline std::vector<std::byte> encode_points(const PointSet& points, const SampleValues& values) {
  if (values.size() != points.size()) throw ShapeError("sample count does not match point count");
  std::vector<std::byte> out;
  out.reserve(kPointsHeaderSize + points.size() * (points.dim() + 2) * sizeof(double));
  ByteWriter w(out);
  w.put_bytes(kPointsMagic);
  w.put(kPointsVersion);
  w.put(static_cast<std::uint32_t>(points.dim()));
  w.put(static_cast<std::uint64_t>(points.size()));
  for (std::size_t j = 0; j < points.size(); ++j) {
    for (double x : points[j]) w.put(x);
    w.put(values[j].real());
    w.put(values[j].imag());
  }
  return out;
}

inline PointsFile decode_points(std::span<const std::byte> bytes) {
  if (bytes.size() < kPointsHeaderSize) throw FormatError(bytes.size(), "truncated header");
  for (std::size_t i = 0; i < kPointsMagic.size(); ++i) {
    if (static_cast<char>(bytes[i]) != kPointsMagic[i]) throw FormatError(0, "bad magic, expected NDPT");
  }
  ByteReader r(bytes.subspan(4));
  const auto version = r.get<std::uint16_t>();
  if (version != kPointsVersion) throw FormatError(4, "unsupported version " + std::to_string(version));
  const auto dim = r.get<std::uint32_t>();
  if (dim == 0) throw FormatError(6, "dimension must be positive");
  const auto count = r.get<std::uint64_t>();
  const std::size_t record = (static_cast<std::size_t>(dim) + 2) * sizeof(double);
  const std::size_t body = bytes.size() - kPointsHeaderSize;
  if (count > body / record || body != count * record) {
    throw FormatError(kPointsHeaderSize, "payload of " + std::to_string(body) + " bytes does not hold " +
                                             std::to_string(count) + " records of " + std::to_string(record) +
                                             " bytes");
  }

  PointsFile out{PointSet(dim), SampleValues{}};
  out.points.reserve(count);
  out.values.reserve(count);
  std::vector<double> x(dim);
  for (std::uint64_t j = 0; j < count; ++j) {
    const std::size_t base = kPointsHeaderSize + j * record;
    for (std::uint32_t t = 0; t < dim; ++t) {
      x[t] = r.get<double>();
      if (!(x[t] >= -0.5 && x[t] < 0.5)) {
        throw FormatError(base + t * sizeof(double),
                          "record " + std::to_string(j) + " coordinate " + std::to_string(t) + " outside [-0.5, 0.5)");
      }
    }
    const double re = r.get<double>();
    const double im = r.get<double>();
    out.points.push_back(x);
    out.values.emplace_back(re, im);
  }
  return out;
}

inline void write_points(const std::string& path, const PointSet& points, const SampleValues& values) {
  const auto bytes = encode_points(points, values);
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw Error("cannot open " + path + " for writing");
  f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!f) throw Error("write failed: " + path);
}

inline PointsFile read_points(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error("cannot open " + path);
  std::vector<char> raw((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  std::vector<std::byte> bytes(raw.size());
  if (!raw.empty()) std::memcpy(bytes.data(), raw.data(), raw.size());
  return decode_points(bytes);
}

}  // namespace hpnfft
