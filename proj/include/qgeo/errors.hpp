#ifndef QGEO_ERRORS_HPP
#define QGEO_ERRORS_HPP

#include <cstddef>
#include <stdexcept>
#include <string>

namespace qgeo {

/// Base class for all library errors.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Input data is malformed or incompatible with the requested operation.
class DataError : public Error {
public:
  using Error::Error;
};

/// A numerical routine failed to produce a usable result.
class NumericalError : public Error {
public:
  using Error::Error;
};

/// Truncated kernel left a vertex with no neighbors.
class DisconnectedGraphError : public DataError {
public:
  explicit DisconnectedGraphError(std::ptrdiff_t vertex)
      : DataError("kernel graph has isolated vertex " + std::to_string(vertex) +
                  "; increase epsilon or the truncation radius"),
        vertex_(vertex) {}
  std::ptrdiff_t vertex() const { return vertex_; }

private:
  std::ptrdiff_t vertex_;
};

/// A neighborhood contains a duplicate of the base point (zero distance).
class DegenerateNeighborhoodError : public DataError {
public:
  using DataError::DataError;
};

/// Too few points in the requested neighborhood.
class SparseNeighborhoodError : public DataError {
public:
  using DataError::DataError;
};

/// No closed-form geodesic oracle exists for this manifold.
class UnsupportedOracleError : public DataError {
public:
  using DataError::DataError;
};

/// h <= sqrt(epsilon): propagation below the resolvable wavelength is refused.
class UncertaintyRegimeError : public DataError {
public:
  using DataError::DataError;
};

/// A state vector is identically zero where a distribution is required.
class DegenerateStateError : public NumericalError {
public:
  using NumericalError::NumericalError;
};

/// CSV (or similar) input could not be parsed; carries the offending location.
class ParseError : public DataError {
public:
  ParseError(const std::string& msg, std::size_t line, std::size_t column = 0)
      : DataError("line " + std::to_string(line) +
                  (column ? ", column " + std::to_string(column) : std::string()) +
                  ": " + msg),
        line_(line), column_(column) {}
  std::size_t line() const { return line_; }
  std::size_t column() const { return column_; }

private:
  std::size_t line_;
  std::size_t column_;
};

} // namespace qgeo

#endif // QGEO_ERRORS_HPP
