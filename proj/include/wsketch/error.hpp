#pragma once

#include <stdexcept>
#include <string>

namespace wsketch {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A caller violated a documented precondition (bad argument, shape mismatch,
/// querying an address that was never inserted, ...).
class ContractError : public Error {
 public:
  using Error::Error;
};

/// Malformed, truncated or unsupported on-disk container.
class FormatError : public Error {
 public:
  using Error::Error;
};

}  // namespace wsketch
