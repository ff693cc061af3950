#pragma once

#include <stdexcept>
#include <string>

namespace fgplab {

// Base for everything the library throws. The CLI maps subclasses onto exit
// codes, so keep the hierarchy flat.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Point outside the domain of a map (zero coordinate, boundary point, ...).
class DomainError : public Error {
 public:
  using Error::Error;
};

// Caller supplied an argument that violates a documented precondition.
class ArgumentError : public Error {
 public:
  using Error::Error;
};

// Generating function or supergradient that cannot produce a long-only
// portfolio (non-concave Custom evaluator, nonpositive log argument).
class InvalidGeneratorError : public Error {
 public:
  using Error::Error;
};

// Nonpositive wealth multiplier, zero-variance fit and similar.
class NumericDegeneracyError : public Error {
 public:
  using Error::Error;
};

// Portfolio map whose weight ratio fails the sampled conservativeness test.
class NotAGradientError : public Error {
 public:
  using Error::Error;
};

// Transport problem without a finite-cost coupling.
class InfeasibleError : public Error {
 public:
  using Error::Error;
};

// Malformed input file; message carries the offending row when known.
class ParseError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace fgplab
