#pragma once

// Message framing shared by every transport. All integers little-endian.
//
//   frame = "HPNF" | u16 version (1) | u16 msg_type | u64 payload_len | payload
//
// Payloads:
//   SUBCELL_ASSIGN  u32 d | u64 count | count * (d f64 coords, f64 re, f64 im)
//   COEFF_ARRAY     u32 d | d u32 bandwidths | prod * (f64 re, f64 im)
//   POINT_RESULTS   u64 count | count * (u64 global index, f64 re, f64 im)
//   CONFIG          u8 window | f64 sigma | u32 m | u32 d | d u32 bandwidths
//   SHUTDOWN        empty
//   SUBCELL_INDEX   u64 count | count * u64 global index
//   HELLO           u32 rank | u32 ipv4 | u16 port
//   PEER_TABLE      u32 size | size * (u32 ipv4, u16 port)

#include <algorithm>
#include <array>
#include <bit>
#include <cstddef>
#include <cstdint>
#include <cstring>
#include <span>
#include <string>
#include <vector>

#include "hpnfft/errors.hpp"
#include "hpnfft/nfft.hpp"
#include "hpnfft/types.hpp"
#include "hpnfft/window.hpp"

namespace hpnfft {

enum class MsgType : std::uint16_t {
  subcell_assign = 1,
  coeff_array = 2,
  point_results = 3,
  config = 4,
  shutdown = 5,
  subcell_index = 6,
  hello = 16,
  peer_table = 17,
};

inline constexpr std::array<char, 4> kFrameMagic = {'H', 'P', 'N', 'F'};
inline constexpr std::uint16_t kWireVersion = 1;
inline constexpr std::size_t kFrameHeaderSize = 16;
inline constexpr std::uint64_t kMaxPayload = std::uint64_t{1} << 36;

struct Frame {
  MsgType type = MsgType::shutdown;
  std::vector<std::byte> payload;
};

/// Appends little-endian scalars to a byte buffer.
class ByteWriter {
 public:
  explicit ByteWriter(std::vector<std::byte>& out) : out_(out) {}

  template <class T>
  void put(T value) {
    static_assert(std::is_trivially_copyable_v<T>);
    std::array<std::byte, sizeof(T)> raw;
    std::memcpy(raw.data(), &value, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) std::reverse(raw.begin(), raw.end());
    out_.insert(out_.end(), raw.begin(), raw.end());
  }

  void put_bytes(std::span<const char> bytes) {
    for (char c : bytes) out_.push_back(static_cast<std::byte>(c));
  }

 private:
  std::vector<std::byte>& out_;
};

/// Reads little-endian scalars, throwing ProtocolError on truncation.
class ByteReader {
 public:
  explicit ByteReader(std::span<const std::byte> in) : in_(in) {}

  template <class T>
  T get() {
    static_assert(std::is_trivially_copyable_v<T>);
    if (remaining() < sizeof(T)) throw ProtocolError("truncated payload");
    std::array<std::byte, sizeof(T)> raw;
    std::memcpy(raw.data(), in_.data() + pos_, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) std::reverse(raw.begin(), raw.end());
    pos_ += sizeof(T);
    T value;
    std::memcpy(&value, raw.data(), sizeof(T));
    return value;
  }

  std::size_t remaining() const noexcept { return in_.size() - pos_; }
  std::size_t position() const noexcept { return pos_; }

  void expect_end() const {
    if (remaining() != 0) throw ProtocolError("trailing bytes in payload");
  }

 private:
  std::span<const std::byte> in_;
  std::size_t pos_ = 0;
};

inline std::vector<std::byte> encode_frame(const Frame& frame) {
  std::vector<std::byte> out;
  out.reserve(kFrameHeaderSize + frame.payload.size());
  ByteWriter w(out);
  w.put_bytes(kFrameMagic);
  w.put<std::uint16_t>(kWireVersion);
  w.put<std::uint16_t>(static_cast<std::uint16_t>(frame.type));
  w.put<std::uint64_t>(frame.payload.size());
  out.insert(out.end(), frame.payload.begin(), frame.payload.end());
  return out;
}

struct FrameHeader {
  MsgType type;
  std::uint64_t payload_len;
};

inline FrameHeader decode_frame_header(std::span<const std::byte> header) {
  if (header.size() < kFrameHeaderSize) throw ProtocolError("truncated frame header");
  for (std::size_t i = 0; i < kFrameMagic.size(); ++i) {
    if (static_cast<char>(header[i]) != kFrameMagic[i]) throw ProtocolError("bad frame magic");
  }
  ByteReader r(header.subspan(4, kFrameHeaderSize - 4));
  const auto version = r.get<std::uint16_t>();
  if (version != kWireVersion) throw ProtocolError("unsupported wire version " + std::to_string(version));
  const auto type = r.get<std::uint16_t>();
  const auto len = r.get<std::uint64_t>();
  if (len > kMaxPayload) throw ProtocolError("frame payload length " + std::to_string(len) + " is implausible");
  return {static_cast<MsgType>(type), len};
}

inline Frame decode_frame(std::span<const std::byte> bytes) {
  const auto header = decode_frame_header(bytes);
  if (bytes.size() - kFrameHeaderSize != header.payload_len) throw ProtocolError("frame length mismatch");
  Frame f;
  f.type = header.type;
  f.payload.assign(bytes.begin() + kFrameHeaderSize, bytes.end());
  return f;
}

inline void expect_type(const Frame& frame, MsgType type) {
  if (frame.type != type) {
    throw ProtocolError("expected message type " + std::to_string(static_cast<int>(type)) + ", got " +
                        std::to_string(static_cast<int>(frame.type)));
  }
}

// --- payload codecs -------------------------------------------------------

inline Frame encode_subcell(const PointSet& points, const SampleValues& values) {
  if (points.size() != values.size()) throw ShapeError("subcell points and values differ in length");
  Frame f{MsgType::subcell_assign, {}};
  ByteWriter w(f.payload);
  const std::size_t d = points.dim();
  w.put<std::uint32_t>(static_cast<std::uint32_t>(d));
  w.put<std::uint64_t>(points.size());
  for (std::size_t j = 0; j < points.size(); ++j) {
    for (double x : points[j]) w.put<double>(x);
    w.put<double>(values[j].real());
    w.put<double>(values[j].imag());
  }
  return f;
}

inline void decode_subcell(const Frame& frame, PointSet& points, SampleValues& values) {
  expect_type(frame, MsgType::subcell_assign);
  ByteReader r(frame.payload);
  const auto d = r.get<std::uint32_t>();
  const auto count = r.get<std::uint64_t>();
  if (d == 0) throw ProtocolError("subcell dimension is zero");
  if (count > r.remaining() / ((d + 2) * sizeof(double))) throw ProtocolError("subcell count exceeds payload");
  std::vector<double> coords;
  coords.reserve(count * d);
  values.assign(count, Complex{});
  for (std::uint64_t j = 0; j < count; ++j) {
    for (std::uint32_t t = 0; t < d; ++t) coords.push_back(r.get<double>());
    const double re = r.get<double>();
    const double im = r.get<double>();
    values[j] = {re, im};
  }
  r.expect_end();
  points = PointSet(d, std::move(coords));
}

inline Frame encode_coefficients(const CoefficientArray& coeffs) {
  Frame f{MsgType::coeff_array, {}};
  ByteWriter w(f.payload);
  const auto& dims = coeffs.index_set().dims();
  w.put<std::uint32_t>(static_cast<std::uint32_t>(dims.size()));
  for (int n : dims) w.put<std::uint32_t>(static_cast<std::uint32_t>(n));
  for (const auto& v : coeffs.values()) {
    w.put<double>(v.real());
    w.put<double>(v.imag());
  }
  return f;
}

inline CoefficientArray decode_coefficients(const Frame& frame) {
  expect_type(frame, MsgType::coeff_array);
  ByteReader r(frame.payload);
  const auto d = r.get<std::uint32_t>();
  if (d == 0 || d > 64) throw ProtocolError("implausible coefficient dimension");
  std::vector<int> dims(d);
  for (auto& n : dims) n = static_cast<int>(r.get<std::uint32_t>());
  FrequencyIndexSet index_set;
  try {
    index_set = FrequencyIndexSet(dims);
  } catch (const InvalidBandwidth& e) {
    throw ProtocolError(std::string("coefficient array: ") + e.what());
  }
  if (r.remaining() != index_set.size() * 2 * sizeof(double)) throw ProtocolError("coefficient payload size mismatch");
  std::vector<Complex> values(index_set.size());
  for (auto& v : values) {
    const double re = r.get<double>();
    const double im = r.get<double>();
    v = {re, im};
  }
  return CoefficientArray(std::move(index_set), std::move(values));
}

struct IndexedValue {
  std::uint64_t index;
  Complex value;
};

inline Frame encode_point_results(std::span<const std::uint64_t> indices, const SampleValues& values) {
  if (indices.size() != values.size()) throw ShapeError("point results: index and value counts differ");
  Frame f{MsgType::point_results, {}};
  ByteWriter w(f.payload);
  w.put<std::uint64_t>(indices.size());
  for (std::size_t i = 0; i < indices.size(); ++i) {
    w.put<std::uint64_t>(indices[i]);
    w.put<double>(values[i].real());
    w.put<double>(values[i].imag());
  }
  return f;
}

inline std::vector<IndexedValue> decode_point_results(const Frame& frame) {
  expect_type(frame, MsgType::point_results);
  ByteReader r(frame.payload);
  const auto count = r.get<std::uint64_t>();
  if (count > r.remaining() / 24) throw ProtocolError("point result count exceeds payload");
  std::vector<IndexedValue> out(count);
  for (auto& iv : out) {
    iv.index = r.get<std::uint64_t>();
    const double re = r.get<double>();
    const double im = r.get<double>();
    iv.value = {re, im};
  }
  r.expect_end();
  return out;
}

inline Frame encode_subcell_index(std::span<const std::uint64_t> indices) {
  Frame f{MsgType::subcell_index, {}};
  ByteWriter w(f.payload);
  w.put<std::uint64_t>(indices.size());
  for (auto i : indices) w.put<std::uint64_t>(i);
  return f;
}

inline std::vector<std::uint64_t> decode_subcell_index(const Frame& frame) {
  expect_type(frame, MsgType::subcell_index);
  ByteReader r(frame.payload);
  const auto count = r.get<std::uint64_t>();
  if (count > r.remaining() / 8) throw ProtocolError("index count exceeds payload");
  std::vector<std::uint64_t> out(count);
  for (auto& i : out) i = r.get<std::uint64_t>();
  r.expect_end();
  return out;
}

/// The collective-relevant part of a transform configuration.
struct WireConfig {
  WindowKind kind = WindowKind::gaussian;
  double sigma = 2.0;
  std::uint32_t m = 1;
  std::vector<int> dims;

  static WireConfig from(const NfftConfig& cfg) {
    return {cfg.window.kind(), cfg.window.sigma(), static_cast<std::uint32_t>(cfg.window.m()), cfg.index_set.dims()};
  }

  NfftConfig to_config(int workers) const {
    return make_nfft_config(FrequencyIndexSet(dims), kind, sigma, static_cast<int>(m), workers);
  }

  friend bool operator==(const WireConfig&, const WireConfig&) = default;
};

inline Frame encode_config(const WireConfig& cfg) {
  Frame f{MsgType::config, {}};
  ByteWriter w(f.payload);
  w.put<std::uint8_t>(static_cast<std::uint8_t>(cfg.kind));
  w.put<double>(cfg.sigma);
  w.put<std::uint32_t>(cfg.m);
  w.put<std::uint32_t>(static_cast<std::uint32_t>(cfg.dims.size()));
  for (int n : cfg.dims) w.put<std::uint32_t>(static_cast<std::uint32_t>(n));
  return f;
}

inline WireConfig decode_config(const Frame& frame) {
  expect_type(frame, MsgType::config);
  ByteReader r(frame.payload);
  WireConfig cfg;
  const auto kind = r.get<std::uint8_t>();
  if (kind > static_cast<std::uint8_t>(WindowKind::kaiser_bessel)) throw ProtocolError("unknown window kind");
  cfg.kind = static_cast<WindowKind>(kind);
  cfg.sigma = r.get<double>();
  cfg.m = r.get<std::uint32_t>();
  const auto d = r.get<std::uint32_t>();
  if (d == 0 || d > 64) throw ProtocolError("implausible config dimension");
  cfg.dims.resize(d);
  for (auto& n : cfg.dims) n = static_cast<int>(r.get<std::uint32_t>());
  r.expect_end();
  return cfg;
}

inline Frame shutdown_frame() { return Frame{MsgType::shutdown, {}}; }

}  // namespace hpnfft
