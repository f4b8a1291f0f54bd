#ifndef MCLT_ERRORS_HPP
#define MCLT_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace mclt {

/// Bad or inconsistent arguments (shape mismatch, empty input, unknown names).
class ArgumentError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

/// Evaluation requested outside the region where a formula is valid.
class DomainError : public std::domain_error {
public:
  using std::domain_error::domain_error;
};

/// An operation's documented precondition does not hold.
class PreconditionError : public std::logic_error {
public:
  using std::logic_error::logic_error;
};

/// The requested problem size exceeds what a backend can do.
class CapabilityError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// A numerical method failed to reach its tolerance.
class NumericalError : public std::runtime_error {
public:
  NumericalError(const std::string& what, double achieved)
      : std::runtime_error(what + " (achieved " + std::to_string(achieved) + ")"),
        achieved_(achieved) {}
  explicit NumericalError(const std::string& what)
      : std::runtime_error(what), achieved_(0.0) {}

  double achieved() const noexcept { return achieved_; }

private:
  double achieved_;
};

/// A ratio whose denominator vanished (e.g. a partition function at a zero).
class DegenerateError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

}  // namespace mclt

#endif  // MCLT_ERRORS_HPP
