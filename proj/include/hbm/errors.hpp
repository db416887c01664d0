#pragma once

#include <stdexcept>
#include <string>

namespace hbm {

// Argument outside the domain of a function, e.g. t < t0.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// A boundary function produced a non-finite or nonpositive value.
class EvaluationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Caller violated an operation's precondition (bad parameters, empty window,
// inadmissible spec, wrong path kind).
class PreconditionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Iterative solver failed to converge.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace hbm
