#pragma once

#include <stdexcept>
#include <string>

namespace sgmvar {

/// Base class for all errors raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Mismatched matrix / vector shapes or out-of-range indices.
class DimensionError : public Error {
public:
    using Error::Error;
};

/// A regime violates the stability condition, so it has no stationary distribution.
class InstabilityError : public Error {
public:
    using Error::Error;
};

/// Parameters that fail a validity invariant (non-PD covariance, alpha off the simplex, ...).
class InvalidParameters : public Error {
public:
    using Error::Error;
};

/// Numerical breakdown: singular systems, failed factorizations.
class NumericalError : public Error {
public:
    using Error::Error;
};

/// Malformed input files (CSV, JSON) with location context in the message.
class ParseError : public Error {
public:
    using Error::Error;
};

}  // namespace sgmvar
