#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace gccg {

/// Base of every error the toolkit raises.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Input that cannot be interpreted (bad notation, corrupted records, ...).
class DataError : public Error {
 public:
  using Error::Error;
};

class SyntaxError : public DataError {
 public:
  using DataError::DataError;
};

// A category exceeds the configured depth or arity cap.
class LimitError : public DataError {
 public:
  using DataError::DataError;
};

class UnknownToken : public DataError {
 public:
  using DataError::DataError;
};

class EmptyInput : public DataError {
 public:
  using DataError::DataError;
};

class EmptyCorpus : public DataError {
 public:
  using DataError::DataError;
};

class EmptyScene : public DataError {
 public:
  using DataError::DataError;
};

class MissingScene : public DataError {
 public:
  using DataError::DataError;
};

class NoParse : public DataError {
 public:
  using DataError::DataError;
};

class LengthMismatch : public DataError {
 public:
  using DataError::DataError;
};

class DimensionMismatch : public DataError {
 public:
  using DataError::DataError;
};

class SpecError : public DataError {
 public:
  using DataError::DataError;
};

class IoError : public Error {
 public:
  using Error::Error;
};

// Invalid or unknown configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// A bookkeeping audit failed; the sampler state cannot be trusted.
class InvariantError : public Error {
 public:
  using Error::Error;
};

/// Data error tied to a line of an input file (1-based).
class LineError : public DataError {
 public:
  LineError(std::string file, std::size_t line, const std::string& what)
      : DataError(file + ":" + std::to_string(line) + ": " + what),
        file_(std::move(file)),
        line_(line) {}

  const std::string& file() const { return file_; }
  std::size_t line() const { return line_; }

 private:
  std::string file_;
  std::size_t line_;
};

}  // namespace gccg
