#pragma once

#include <stdexcept>
#include <string>

namespace surf {

/// Malformed or out-of-range distribution spec / parameter.
class SpecError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A configured resource budget (memory, enumeration size, iteration cap)
/// would be exceeded.
class BudgetError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace surf
