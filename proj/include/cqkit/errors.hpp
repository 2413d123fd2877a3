#pragma once

#include <stdexcept>
#include <string>

namespace cqkit {

// Each error class maps onto one CLI exit code (see cli.hpp).

/// Malformed or inconsistent input data: bad JSON lines, duplicate ids,
/// dimension mismatches, empty queries.
class DataError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Invalid configuration or arguments supplied by the caller.
class UsageError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Filesystem failures (unreadable input, unwritable output).
class IoError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Failures of a facet generator. `retriable()` is set for transport
/// timeouts where reissuing the same request may succeed.
class GeneratorError : public std::runtime_error {
public:
  explicit GeneratorError(const std::string &what, bool retriable = false)
      : std::runtime_error(what), retriable_(retriable) {}
  bool retriable() const { return retriable_; }

private:
  bool retriable_;
};

} // namespace cqkit
