#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace xling {

// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Parallel corpus files do not have matching line counts.
class AlignmentError : public Error {
 public:
  using Error::Error;
};

class EmptyCorpusError : public Error {
 public:
  using Error::Error;
};

// Malformed row in a TSV resource. Carries the 1-based line number.
class ParseError : public Error {
 public:
  ParseError(const std::string& path, std::size_t line, const std::string& what)
      : Error(path + ":" + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

// Structurally invalid topic file or report input.
class FormatError : public Error {
 public:
  using Error::Error;
};

class DegenerateInputError : public Error {
 public:
  using Error::Error;
};

class UndefinedCorrelationError : public Error {
 public:
  using Error::Error;
};

class CapacityError : public Error {
 public:
  using Error::Error;
};

class FoldError : public Error {
 public:
  using Error::Error;
};

// Bad command line or experiment parameters. The CLI maps this to exit status 2.
class UsageError : public Error {
 public:
  using Error::Error;
};

}  // namespace xling
