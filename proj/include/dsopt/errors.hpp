#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace dsopt {

/// Root of every error thrown by the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Matrix/model dimensions do not line up.
class ShapeError : public Error {
public:
  using Error::Error;
};

/// A feature index outside the dataset width.
class IndexError : public Error {
public:
  using Error::Error;
};

/// A fixed value outside the feature's declared domain.
class DomainError : public Error {
public:
  using Error::Error;
};

/// Malformed or inconsistent configuration (CLI exit code 2).
class ConfigError : public Error {
public:
  using Error::Error;
};

/// Malformed input data (CLI exit code 3).
class DataError : public Error {
public:
  using Error::Error;
};

/// Numeric failure: divergence or degenerate variance (CLI exit code 4).
class NumericError : public Error {
public:
  using Error::Error;
};

class TrainingDivergedError : public NumericError {
public:
  explicit TrainingDivergedError(std::size_t epoch)
      : NumericError("training diverged: non-finite loss at epoch " + std::to_string(epoch)),
        epoch_(epoch) {}
  std::size_t epoch() const noexcept { return epoch_; }

private:
  std::size_t epoch_;
};

class DegenerateReferenceError : public NumericError {
public:
  DegenerateReferenceError(std::size_t label, double variance)
      : NumericError("degenerate reference set: prediction variance " + std::to_string(variance) +
                     " below 1e-12 for label " + std::to_string(label)),
        label_(label) {}
  std::size_t label() const noexcept { return label_; }

private:
  std::size_t label_;
};

class BudgetExceededError : public Error {
public:
  explicit BudgetExceededError(double size, double budget)
      : Error("enumeration size " + std::to_string(static_cast<long double>(size)) +
              " exceeds budget " + std::to_string(static_cast<long double>(budget))),
        size_(size) {}
  double size() const noexcept { return size_; }

private:
  double size_;
};

}  // namespace dsopt
