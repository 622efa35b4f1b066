#pragma once

#include <stdexcept>
#include <string>

namespace nanet {

// Caller supplied an out-of-range or mismatched argument.
class ParameterError : public std::invalid_argument {
 public:
  explicit ParameterError(const std::string& what) : std::invalid_argument(what) {}
};

// A statistical test cannot be applied to the given samples.
class TestInapplicableError : public std::domain_error {
 public:
  explicit TestInapplicableError(const std::string& what) : std::domain_error(what) {}
};

class IoError : public std::runtime_error {
 public:
  explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace nanet
