#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace kpiguard {

// Base class for every failure raised by this library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// Invalid emulation/gate/experiment configuration.
class ConfigError : public Error {
public:
  using Error::Error;
};

// Structural problems in an encoded artifact (header, schema, message framing).
class FormatError : public Error {
public:
  using Error::Error;
};

// A single row/field failed to parse; carries the 1-based line number.
class ParseError : public Error {
public:
  ParseError(std::size_t line, const std::string& what)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

private:
  std::size_t line_;
};

// Value outside its admissible domain (negative KPI, non-positive factor, ...).
class DomainError : public Error {
public:
  using Error::Error;
};

// Rows that must be sorted by (timestamp, ue_id) are not.
class OrderingError : public Error {
public:
  using Error::Error;
};

// Fewer samples than a statistical fit requires.
class InsufficientDataError : public Error {
public:
  using Error::Error;
};

// A numerical routine failed (factorization, non-finite intermediate).
class NumericError : public Error {
public:
  using Error::Error;
};

// Attack plan is infeasible or references unknown UEs.
class PlanError : public Error {
public:
  using Error::Error;
};

// Tensor/window dimensions do not match what a model expects.
class ShapeError : public Error {
public:
  using Error::Error;
};

// Training preconditions violated (single-class input, inconsistent windows).
class TrainError : public Error {
public:
  using Error::Error;
};

// Loss became non-finite during optimization; carries the offending batch.
class DivergenceError : public Error {
public:
  DivergenceError(std::size_t batch_index, const std::string& what)
      : Error("batch " + std::to_string(batch_index) + ": " + what),
        batch_index_(batch_index) {}
  std::size_t batch_index() const noexcept { return batch_index_; }

private:
  std::size_t batch_index_;
};

}  // namespace kpiguard
