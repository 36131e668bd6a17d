#pragma once

#include <sstream>
#include <stdexcept>
#include <string>

namespace vbp {

// Error taxonomy mirrors the CLI exit codes: data = 1, config = 2, numeric = 3.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

template <typename... Args>
std::string msg(Args&&... args) {
  std::ostringstream os;
  (os << ... << args);
  return os.str();
}

}  // namespace vbp
