#pragma once

#include <stdexcept>
#include <string>

namespace ttkv {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid or inconsistent configuration (budgets, bit widths, policies).
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Out-of-order or duplicate token position.
class SequencingError : public Error {
 public:
  using Error::Error;
};

// Tensor dimension mismatch.
class ShapeError : public Error {
 public:
  using Error::Error;
};

// Corrupt or truncated serialized payload.
class IntegrityError : public Error {
 public:
  using Error::Error;
};

// Filesystem / output failures.
class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace ttkv
