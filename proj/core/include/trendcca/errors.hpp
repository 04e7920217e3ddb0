// Error taxonomy shared by all modules.  Every failure raised by the library
// derives from trendcca::Error; the concrete type encodes which stage failed
// (input, numerics, critical-value tables) so callers can map it to exit codes.
#pragma once

#include <stdexcept>
#include <string>

namespace trendcca {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed or inconsistent input shapes (row mismatches, K < p, ...).
class DimensionError : public Error {
 public:
  using Error::Error;
};

// CSV / matrix-file content that does not parse.
class ParseError : public Error {
 public:
  using Error::Error;
};

// Values outside an operation's domain (log of a non-positive entry, ...).
class DomainError : public Error {
 public:
  using Error::Error;
};

// Numerically singular or near-singular moment matrices.  The message names
// the offending matrix and reports its smallest eigenvalue.
class ConditioningError : public Error {
 public:
  using Error::Error;
};

// Loading/cointegration normalization matrices that are not invertible for
// the chosen identification scheme.
class IdentificationError : public Error {
 public:
  using Error::Error;
};

// Missing, incomplete or version-incompatible critical-value tables.
class TableError : public Error {
 public:
  using Error::Error;
};

// Filesystem failures (unreadable input, unwritable output).
class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace trendcca
