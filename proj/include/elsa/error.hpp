#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace elsa {

// A caller broke a documented precondition (width mismatch, cursor exhausted,
// cycle out of range, dimension mismatch).
class ContractViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// Malformed weight or vocabulary file. Carries the 1-based line number when
// one is known (0 otherwise).
class FormatError : public std::runtime_error {
 public:
  FormatError(const std::string& what, std::size_t line = 0)
      : std::runtime_error(line == 0 ? what
                                     : "line " + std::to_string(line) + ": " +
                                           what),
        line_(line) {}

  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

// Bad user-supplied data that is not a file format problem (out-of-vocabulary
// prime text, empty corpus).
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline void require(bool condition, const char* message) {
  if (!condition) throw ContractViolation(message);
}

inline void require(bool condition, const std::string& message) {
  if (!condition) throw ContractViolation(message);
}

}  // namespace elsa
