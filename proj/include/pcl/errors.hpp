#pragma once

#include <stdexcept>
#include <string>

namespace pcl {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed input files (wrong column count, unreadable numbers).
class ParseError : public Error {
 public:
  using Error::Error;
};

// Well-formed input that violates a data invariant.
class ValidationError : public Error {
 public:
  using Error::Error;
};

// Argument outside the mathematical domain of an operation.
class DomainError : public Error {
 public:
  using Error::Error;
};

class ShapeError : public Error {
 public:
  using Error::Error;
};

// Checkpoint / subtask / arity mismatches between artifacts.
class CompatibilityError : public Error {
 public:
  using Error::Error;
};

// Validation-partition data reaching a train-only code path.
class LeakageError : public Error {
 public:
  using Error::Error;
};

class TrainingError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

// Unknown or inconsistent run configuration keys.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Prediction / gold label files whose rows have the wrong arity.
class FormatError : public Error {
 public:
  using Error::Error;
};

}  // namespace pcl
