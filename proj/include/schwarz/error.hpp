#pragma once

#include <stdexcept>
#include <string>

namespace schwarz {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Malformed input file (bad line, count mismatch, missing file).
class ParseError : public Error {
public:
  using Error::Error;
};

/// Input parsed but violates a structural invariant (nonconforming mesh,
/// inverted element, missing boundary tags, inconsistent field split).
class ValidationError : public Error {
public:
  using Error::Error;
};

/// Geometric degeneracy: collinear cavity loops, rank-deficient MLS stencils.
class GeometryError : public Error {
public:
  using Error::Error;
};

/// Zero or tiny pivot in a direct or incomplete factorization.
class SingularMatrixError : public Error {
public:
  using Error::Error;
};

class DimensionError : public Error {
public:
  using Error::Error;
};

} // namespace schwarz
