#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace ivkit {

/// Base of all toolkit errors.
class Error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
    virtual const char* kind() const noexcept { return "error"; }
};

/// Bad input: malformed files, violated preconditions, invalid configuration.
class ValidationError : public Error {
  public:
    using Error::Error;
    const char* kind() const noexcept override { return "validation"; }
};

/// The data are well-formed but the requested estimate is not defined on them.
class EstimationError : public Error {
  public:
    using Error::Error;
    const char* kind() const noexcept override { return "estimation"; }
};

class RankDeficientError : public EstimationError {
  public:
    RankDeficientError(const std::string& msg, std::ptrdiff_t column, std::string column_name)
        : EstimationError(msg), column_(column), column_name_(std::move(column_name)) {}
    const char* kind() const noexcept override { return "rank_deficient"; }
    /// Index of the first column found to be linearly dependent on earlier ones, or -1.
    std::ptrdiff_t column() const noexcept { return column_; }
    const std::string& column_name() const noexcept { return column_name_; }

  private:
    std::ptrdiff_t column_;
    std::string column_name_;
};

class IrrelevanceError : public EstimationError {
  public:
    IrrelevanceError(const std::string& msg, double denominator)
        : EstimationError(msg), denominator_(denominator) {}
    const char* kind() const noexcept override { return "instrument_irrelevance"; }
    double denominator() const noexcept { return denominator_; }

  private:
    double denominator_;
};

/// Treatment take-up does not increase with the instrument, so the complier
/// effect is not identified.
class MonotonicityError : public EstimationError {
  public:
    using EstimationError::EstimationError;
    const char* kind() const noexcept override { return "monotonicity"; }
};

}  // namespace ivkit
