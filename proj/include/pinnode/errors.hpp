#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

namespace pinnode {

// Bad structural configuration (dimension mismatch, unknown enum value, ...).
class config_error : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A numeric argument is outside its admissible range.
class parameter_error : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A computation produced a non-finite value.  Carries the parameter norm at
// the point of failure when available (NaN otherwise).
class divergence_error : public std::runtime_error {
 public:
  explicit divergence_error(const std::string& what, double param_norm_ = std::nan(""))
      : std::runtime_error(what), param_norm(param_norm_) {}
  double param_norm;
};

// Adaptive step size underflow.  Carries the integration time at failure.
class stiffness_error : public std::runtime_error {
 public:
  explicit stiffness_error(const std::string& what, double time_)
      : std::runtime_error(what), time(time_) {}
  double time;
};

// A metric is undefined for the given inputs (e.g. zero reference norm).
class metric_error : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Malformed config text.  Carries the 1-based line number and the offending
// key when known (line 0 / empty key when not applicable).
class parse_error : public std::runtime_error {
 public:
  parse_error(const std::string& what, int line_ = 0, std::string key_ = "")
      : std::runtime_error(what), line(line_), key(std::move(key_)) {}
  int line;
  std::string key;
};

}  // namespace pinnode
