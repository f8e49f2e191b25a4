#pragma once

#include <stdexcept>
#include <string>

namespace flipguard {

// Malformed or unusable input data: unreadable files, ragged rows, bad cells.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A parameter outside the range its owning type accepts.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// An internal consistency check failed; indicates a bug rather than bad input.
class InvariantError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

}  // namespace flipguard
