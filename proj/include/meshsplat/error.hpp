#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace meshsplat {

// Base for every failure the library reports. The CLI maps the concrete
// subclasses onto exit codes, so throw the most specific one that applies.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed or truncated input bytes (PLY headers and bodies).
class ParseError : public Error {
 public:
  using Error::Error;
};

// Well-formed input that does not match the expected schema or version.
class FormatError : public Error {
 public:
  using Error::Error;
};

// Invalid configuration, or a configuration incompatible with the data.
class ConfigError : public Error {
 public:
  using Error::Error;
};

class InvalidRecordError : public Error {
 public:
  InvalidRecordError(std::size_t index, const std::string& what)
      : Error("record " + std::to_string(index) + ": " + what), index_(index) {}
  std::size_t index() const noexcept { return index_; }

 private:
  std::size_t index_;
};

class InvalidCameraError : public Error {
 public:
  using Error::Error;
};

class NumericalError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace meshsplat
