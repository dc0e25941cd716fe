#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace leadsel {

/// Precondition on an argument was violated (index out of range, bad weight,
/// inconsistent anchors, ...).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// A random generator could not produce a valid instance within its budget.
class GenerationError : public std::runtime_error {
 public:
  GenerationError(const std::string& what, std::size_t attempts)
      : std::runtime_error(what), attempts_(attempts) {}
  std::size_t attempts() const noexcept { return attempts_; }

 private:
  std::size_t attempts_;
};

/// An integral over [0, inf) does not converge (no absorbing leader reachable).
class DivergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Floating point state became unusable (e.g. every weight underflowed).
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Exhaustive check refused because the ground set is too large.
class RefusalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A CSV/JSON input lacks required columns or fields.
class SchemaError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Configuration rejected; carries every problem found, not only the first.
class ValidationError : public std::invalid_argument {
 public:
  explicit ValidationError(std::vector<std::string> problems)
      : std::invalid_argument(join(problems)), problems_(std::move(problems)) {}
  const std::vector<std::string>& problems() const noexcept { return problems_; }

 private:
  static std::string join(const std::vector<std::string>& problems) {
    std::string out = "invalid configuration:";
    for (const auto& p : problems) out += "\n  - " + p;
    return out;
  }
  std::vector<std::string> problems_;
};

}  // namespace leadsel
