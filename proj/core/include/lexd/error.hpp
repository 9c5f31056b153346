#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace lexd {

/// Base for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed or inconsistent input data (corpus lines, model files, score
/// tables). The CLI maps these to exit code 2.
class DataError : public Error {
 public:
  using Error::Error;
};

/// A corpus record that failed to parse or validate.
class RecordError : public DataError {
 public:
  RecordError(std::size_t line, const std::string& what)
      : DataError("line " + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// A serialized model payload that cannot be decoded.
class FormatError : public DataError {
 public:
  FormatError(std::size_t offset, const std::string& what)
      : DataError("offset " + std::to_string(offset) + ": " + what),
        offset_(offset) {}

  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

/// MLE query for a context/target pair that was never observed.
class ZeroProbability : public Error {
 public:
  using Error::Error;
};

/// A text segment with no in-vocabulary tokens.
class UnscorableSegment : public Error {
 public:
  using Error::Error;
};

/// A correlation or regression over a variable with zero variance.
class DegenerateVariance : public Error {
 public:
  using Error::Error;
};

/// Failure inside a token-probability or embedding provider; the message
/// always names the provider.
class ProviderError : public Error {
 public:
  ProviderError(const std::string& provider, const std::string& what)
      : Error("provider '" + provider + "': " + what), provider_(provider) {}

  const std::string& provider() const noexcept { return provider_; }

 private:
  std::string provider_;
};

}  // namespace lexd
