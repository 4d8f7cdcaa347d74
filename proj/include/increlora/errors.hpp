#pragma once

#include <stdexcept>
#include <string>

namespace increlora {

// Base for unrecoverable conditions raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid or inconsistent configuration. The CLI maps this to exit code 2.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Training produced a non-finite loss or gradient. Exit code 3.
class DivergenceError : public Error {
 public:
  using Error::Error;
};

}  // namespace increlora
