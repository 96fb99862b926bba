#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace cosmig {

// Base for every error the library raises.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Operand shapes do not fit the operation.
class DimensionError : public Error {
 public:
  using Error::Error;
};

// A NaN or Inf showed up in a tensor or a loss.
class NumericError : public Error {
 public:
  using Error::Error;
};

// Malformed or inconsistent input data. Carries file:line context when the
// problem is tied to a location in an input file.
class DataError : public Error {
 public:
  explicit DataError(const std::string& what) : Error(what) {}
  DataError(const std::string& file, std::size_t line, const std::string& what)
      : Error(file + ":" + std::to_string(line) + ": " + what),
        file_(file),
        line_(line) {}

  const std::string& file() const noexcept { return file_; }
  std::size_t line() const noexcept { return line_; }

 private:
  std::string file_;
  std::size_t line_ = 0;
};

// Subgraph extraction could not produce a usable subgraph.
class ExtractionError : public Error {
 public:
  enum class Kind {
    kUnknownNode,
    kIsolatedStart,
    kNoContext,     // an endpoint has no edges besides the target edge
    kEmptyContext,  // extracted subgraph has no edges
  };

  ExtractionError(Kind kind, const std::string& what)
      : Error(what), kind_(kind) {}

  Kind kind() const noexcept { return kind_; }

 private:
  Kind kind_;
};

// Checkpoint file is unreadable, truncated or from another format version.
class CheckpointError : public Error {
 public:
  using Error::Error;
};

}  // namespace cosmig
