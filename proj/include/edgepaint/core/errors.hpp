#pragma once

#include <stdexcept>

namespace ep {

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// File exists but cannot be decoded / has an unsupported layout.
struct FormatError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Non-finite values encountered where finite math is required.
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Loaded checkpoint does not match the requested architecture/config.
struct CheckpointError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace ep
