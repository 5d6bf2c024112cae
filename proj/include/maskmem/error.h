#ifndef MASKMEM_ERROR_H_
#define MASKMEM_ERROR_H_

#include <cstddef>
#include <stdexcept>
#include <string>

namespace maskmem {

// Base for every error the library raises on purpose. Anything else that
// escapes (std::bad_alloc, ...) is treated as an internal error by the CLI.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class GenerationError : public Error {
 public:
  using Error::Error;
};

// A caller asked for something the contract rules out (unreachable simulator
// state, mismatched prediction counts, ...).
class ContractViolation : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  ParseError(const std::string& source, std::size_t line,
             const std::string& what)
      : Error(source + ":" + std::to_string(line) + ": " + what),
        line_(line) {}

  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

class DatasetError : public Error {
 public:
  using Error::Error;
};

class NumericError : public Error {
 public:
  using Error::Error;
};

class CheckpointError : public Error {
 public:
  using Error::Error;
};

class CompatibilityError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace maskmem

#endif  // MASKMEM_ERROR_H_
