#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace quenchlab {

// Invalid distribution / model / function parameters.
class ParameterError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Argument outside the domain where a quantity is finite (e.g. an mgf).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Operation requested on an input it cannot handle (non-gaussian OU flow,
// discrete law for a density computation, ...).
class UnsupportedError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// Exhaustive computation refused because the instance is too large.
class SizeError : public std::length_error {
 public:
  using std::length_error::length_error;
};

class ConvergenceError : public std::runtime_error {
 public:
  ConvergenceError(const std::string& what, std::vector<double> last_iterate)
      : std::runtime_error(what), last_iterate_(std::move(last_iterate)) {}

  const std::vector<double>& last_iterate() const noexcept { return last_iterate_; }

 private:
  std::vector<double> last_iterate_;
};

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace quenchlab
