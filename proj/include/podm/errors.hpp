#pragma once

#include <stdexcept>
#include <string>

namespace podm {

/// Shapes that do not fit the operation (inner dims, lengths).
struct DimensionError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// Input outside the mathematical domain of an operation (log of <= 0, empty reduce).
struct DomainError : std::domain_error {
  using std::domain_error::domain_error;
};

/// A forward op produced NaN or Inf.
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// API misuse, e.g. calling backward twice on one tape.
struct UsageError : std::logic_error {
  using std::logic_error::logic_error;
};

/// Malformed or out-of-vocabulary records.
struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Invalid configuration; the message lists every offending field.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace podm
