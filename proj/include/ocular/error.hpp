#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace ocular {

// Base of every error the library throws.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed file contents (PGM, filter bank, model, feature files).
class FormatError : public Error {
 public:
  FormatError(const std::string& what, std::size_t offset)
      : Error(what + " (at byte offset " + std::to_string(offset) + ")"),
        offset_(offset) {}
  explicit FormatError(const std::string& what) : Error(what) {}

  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_ = 0;
};

// Bad input data: manifests, geometry, labels, dimension mismatches.
class DataError : public Error {
 public:
  using Error::Error;
};

// The aligned frame would need pixels outside the source image.
class InsufficientBorder : public DataError {
 public:
  using DataError::DataError;
};

// Iterative numerics that failed to converge.
class NumericError : public Error {
 public:
  using Error::Error;
};

}  // namespace ocular
