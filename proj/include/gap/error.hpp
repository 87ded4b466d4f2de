#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace gap {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// A distribution or model parameter lies outside its domain.
class ParameterError : public Error {
  public:
    using Error::Error;
};

/// Inconsistent dimensions between arguments.
class ShapeError : public Error {
  public:
    using Error::Error;
};

/// Closed-form enumeration would exceed the caller's term budget.
class BudgetError : public Error {
  public:
    BudgetError(std::string cardinality, std::string terms, std::string budget)
        : Error("enumeration budget exceeded: #C = " + cardinality + ", " +
                terms + " terms required, budget " + budget),
          cardinality_(std::move(cardinality)), terms_(std::move(terms)),
          budget_(std::move(budget)) {}

    /// Decimal representation of the full admissible-set cardinality.
    const std::string& cardinality() const noexcept { return cardinality_; }
    /// Decimal representation of the number of terms the evaluation needs.
    const std::string& terms() const noexcept { return terms_; }
    const std::string& budget() const noexcept { return budget_; }

  private:
    std::string cardinality_;
    std::string terms_;
    std::string budget_;
};

/// A Gibbs cell carries a positive count but every component rate is zero.
class DegenerateError : public Error {
  public:
    using Error::Error;
};

/// NaN or other non-finite value produced during estimation.
class NumericalError : public Error {
  public:
    using Error::Error;
};

/// Malformed text input; carries the 1-based line number.
class ParseError : public Error {
  public:
    ParseError(std::size_t line, const std::string& what)
        : Error("line " + std::to_string(line) + ": " + what), line_(line) {}

    std::size_t line() const noexcept { return line_; }

  private:
    std::size_t line_;
};

/// Serialized payload is truncated, malformed, or of an unknown version.
class FormatError : public Error {
  public:
    using Error::Error;
};

class IoError : public Error {
  public:
    using Error::Error;
};

} // namespace gap
