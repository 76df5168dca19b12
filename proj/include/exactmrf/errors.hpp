#pragma once

#include <stdexcept>
#include <string>

namespace exactmrf {

// Malformed model document. `where` names the offending field path or line.
class SchemaError : public std::runtime_error {
 public:
  SchemaError(std::string where, const std::string& what)
      : std::runtime_error(where.empty() ? what : where + ": " + what), where_(std::move(where)) {}
  const std::string& where() const noexcept { return where_; }

 private:
  std::string where_;
};

// A ModelSpec failed validation when an operation required a valid one.
class ValidationError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

// log_sub(a, b) with b > a beyond rounding tolerance.
class NegativeResult : public std::domain_error {
  using std::domain_error::domain_error;
};

class NonPositiveWeight : public std::domain_error {
  using std::domain_error::domain_error;
};

// Exact canonicalization would need an irrational square root.
class NonSquareRatio : public std::domain_error {
  using std::domain_error::domain_error;
};

// Brute-force enumeration over the configured cap.
class TooLarge : public std::length_error {
  using std::length_error::length_error;
};

}  // namespace exactmrf
