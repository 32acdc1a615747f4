#pragma once

#include <stdexcept>
#include <string>

namespace pseudoris {

// Base class for all library errors.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Mismatched dimensions between operands (masks, vectors, distributions).
class ShapeError : public Error {
 public:
  using Error::Error;
};

// A named resource (backend, image id) could not be found.
class LookupError : public Error {
 public:
  using Error::Error;
};

// Invalid configuration: bad flag values, unusable file layouts, etc.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Caller violated an API precondition.
class UsageError : public Error {
 public:
  using Error::Error;
};

// An input file is structurally broken (e.g. RLE counts do not cover the mask).
class DataError : public Error {
 public:
  using Error::Error;
};

// A backend or pipeline object is in the wrong state for the requested call.
class StateError : public Error {
 public:
  using Error::Error;
};

// A backend broke one of its contract invariants.
class ContractError : public Error {
 public:
  using Error::Error;
};

// Duplicate registration under an already-taken name.
class RegistrationError : public Error {
 public:
  using Error::Error;
};

}  // namespace pseudoris
