#pragma once

#include <stdexcept>
#include <string>

namespace knnrm {

// Parameter or flag outside its admissible region. The message names the
// violated inequality.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Query point outside the support of the input law.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// An observation stream ran dry before the requested horizon.
class InsufficientData : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A sampling loop hit its raw-draw budget.
class BudgetExceeded : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

inline void require(bool ok, const std::string& what) {
  if (!ok) throw ConfigError(what);
}

}  // namespace detail
}  // namespace knnrm
