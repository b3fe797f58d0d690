#pragma once

#include <stdexcept>
#include <string>

namespace nds {

// Malformed or mismatched inputs (wrong channel count, dimension mismatch).
class InvalidInput : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A numeric parameter outside its admissible domain.
class InvalidParameter : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Bad configuration: empty sampling range, unknown schema version, ...
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DegenerateGeometry : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IngestionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace nds
