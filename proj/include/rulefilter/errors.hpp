#pragma once

#include <stdexcept>
#include <string>

namespace rulefilter {

// Bad configuration or arguments (CLI exit code 1).
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// Malformed or insufficient input data (CLI exit code 2).
class DataError : public std::runtime_error {
 public:
  explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

// An internal consistency check failed (CLI exit code 3).
class InvariantError : public std::logic_error {
 public:
  explicit InvariantError(const std::string& what) : std::logic_error(what) {}
};

}  // namespace rulefilter
