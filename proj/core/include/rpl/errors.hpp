#ifndef RPL_ERRORS_HPP_
#define RPL_ERRORS_HPP_

#include <stdexcept>
#include <string>

namespace rpl {

// Caller passed arguments that violate an operation's contract.
struct UsageError : std::invalid_argument {
  explicit UsageError(const std::string& what) : std::invalid_argument(what) {}
};

// A configuration value (file or struct) violates an invariant.
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// Persisted data (run directory, metrics file) is missing or malformed.
struct DataError : std::runtime_error {
  explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

// Filesystem-level failure (unwritable directory, rename failure).
struct IoError : std::runtime_error {
  explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace rpl

#endif  // RPL_ERRORS_HPP_
