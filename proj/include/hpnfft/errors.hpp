#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace hpnfft {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Odd, zero or negative bandwidth handed to an index set.
class InvalidBandwidth : public Error {
 public:
  using Error::Error;
};

/// Mismatched lengths or dimensions between operands.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// The reference vector of a relative error has zero norm.
class UndefinedReference : public Error {
 public:
  using Error::Error;
};

/// A Fourier weight of the window is too small to divide by.
class DegenerateWindow : public Error {
 public:
  using Error::Error;
};

class InvalidTopology : public Error {
 public:
  using Error::Error;
};

/// A message could not be delivered to or received from `peer`.
class CommunicationError : public Error {
 public:
  CommunicationError(int peer, const std::string& what)
      : Error("peer " + std::to_string(peer) + ": " + what), peer_(peer) {}

  int peer() const noexcept { return peer_; }

 private:
  int peer_;
};

/// A frame or collective sequence violated the message protocol.
class ProtocolError : public Error {
 public:
  using Error::Error;
};

/// Malformed points file. `offset` is the byte position of the fault.
class FormatError : public Error {
 public:
  FormatError(std::uint64_t offset, const std::string& what)
      : Error("byte " + std::to_string(offset) + ": " + what), offset_(offset) {}

  std::uint64_t offset() const noexcept { return offset_; }

 private:
  std::uint64_t offset_;
};

class InvalidSize : public Error {
 public:
  using Error::Error;
};

class InvalidCutoff : public Error {
 public:
  using Error::Error;
};

/// A requested frequency lies outside the transform's index set.
class BandwidthError : public Error {
 public:
  using Error::Error;
};

class ResourceError : public Error {
 public:
  using Error::Error;
};

/// A scalar parameter outside its admissible range (sigma, m, alpha, ...).
class InvalidParameter : public Error {
 public:
  using Error::Error;
};

}  // namespace hpnfft
