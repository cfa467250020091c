#pragma once

#include <stdexcept>
#include <string>

namespace spincool {

/// Invalid configuration or incompatible inputs (CLI exit code 2).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Non-finite state or failed kernel self-test (CLI exit code 3).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Unreadable or unwritable files, malformed checkpoints.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace spincool
