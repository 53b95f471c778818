#pragma once

#include <stdexcept>
#include <string>

namespace ddikg {

// Base of every library error. The CLI maps IoError to exit code 2 and
// everything else to exit code 1.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ParseError : public Error {
 public:
  ParseError(const std::string& source, std::size_t line, const std::string& what)
      : Error(source + ":" + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

class SchemaError : public Error { using Error::Error; };
class ValidationError : public Error { using Error::Error; };
class LookupError : public Error { using Error::Error; };
class SplitError : public Error { using Error::Error; };
class ShapeError : public Error { using Error::Error; };
class BoundsError : public Error { using Error::Error; };
class ResolutionError : public Error { using Error::Error; };
class ArgumentError : public Error { using Error::Error; };
class PreconditionError : public Error { using Error::Error; };
class IoError : public Error { using Error::Error; };

class NumericError : public Error {
 public:
  NumericError(const std::string& what, std::string triple)
      : Error(what + " at " + triple), triple_(std::move(triple)) {}
  const std::string& triple() const { return triple_; }

 private:
  std::string triple_;
};

}  // namespace ddikg
