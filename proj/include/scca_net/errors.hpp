#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace scca_net {

// Root of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed input: bad arguments, invalid configuration, broken file layout.
class ValidationError : public Error {
 public:
  using Error::Error;
};

class ParseError : public ValidationError {
 public:
  ParseError(std::size_t line, const std::string& what)
      : ValidationError("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

class DimensionError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class DuplicateGeneError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class MissingValueError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

// A filter or selection removed everything.
class EmptyResultError : public Error {
 public:
  using Error::Error;
};

class DegenerateInputError : public Error {
 public:
  using Error::Error;
};

class NotPositiveDefiniteError : public Error {
 public:
  using Error::Error;
};

class NotFoundError : public Error {
 public:
  using Error::Error;
};

}  // namespace scca_net
