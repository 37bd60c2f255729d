#pragma once

#include <stdexcept>
#include <string>

namespace crn {

// Bad arguments, dimension mismatches, invalid configuration values.
class InvalidInputError : public std::invalid_argument {
 public:
  explicit InvalidInputError(const std::string& what) : std::invalid_argument(what) {}
};

// Evaluation left the domain of an operation (e.g. non-positive channel
// intensity inside a logarithm). Carries channel/row context when known.
class DomainError : public std::runtime_error {
 public:
  explicit DomainError(const std::string& what, int channel = -1, long row = -1)
      : std::runtime_error(what), channel(channel), row(row) {}
  int channel;
  long row;
};

// A trajectory jump that no known channel explains.
class InconsistentDataError : public std::runtime_error {
 public:
  explicit InconsistentDataError(const std::string& what) : std::runtime_error(what) {}
};

// A basis function that is never active along the data: the closed-form
// rate estimator has a zero denominator.
class NoInformationError : public std::runtime_error {
 public:
  explicit NoInformationError(const std::string& what) : std::runtime_error(what) {}
};

class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace crn
