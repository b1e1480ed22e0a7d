#pragma once

#include <stdexcept>
#include <string>

namespace atbrg {

// Base class for every error raised by this library. CLI entry points catch
// this to map failures onto a nonzero exit status.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed input file: wrong column count, unparseable number, empty token.
class ParseError : public Error {
 public:
  using Error::Error;
};

// Well-formed input that violates cross-file consistency, e.g. an alignment
// row naming an entity the triple file never defined.
class IntegrityError : public Error {
 public:
  using Error::Error;
};

// Id out of range for a vocabulary or table.
class LookupError : public Error {
 public:
  using Error::Error;
};

// Item has no entity alignment, or an item token is unknown.
class AlignmentError : public Error {
 public:
  using Error::Error;
};

// Tensor shapes incompatible with the requested operation.
class ShapeError : public Error {
 public:
  using Error::Error;
};

// Non-finite value produced where a finite one is required.
class NumericError : public Error {
 public:
  using Error::Error;
};

// API precondition violated by the caller.
class ContractError : public Error {
 public:
  using Error::Error;
};

// Negative sampling cannot satisfy the request (candidate pool exhausted).
class SamplingError : public Error {
 public:
  using Error::Error;
};

// Metric undefined for the given inputs (e.g. single-class AUC).
class MetricError : public Error {
 public:
  using Error::Error;
};

// Generator spec is internally inconsistent.
class ValidationError : public Error {
 public:
  using Error::Error;
};

}  // namespace atbrg
