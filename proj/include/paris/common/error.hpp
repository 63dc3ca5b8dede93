#pragma once

#include <stdexcept>
#include <string>

namespace paris {

/// Malformed input document (bad JSON, missing key, wrong type, unknown field).
class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Input parsed but violates a domain constraint.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Operation precondition violated at run time (unknown id, out-of-range argument, bad state).
class RuntimeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace paris
