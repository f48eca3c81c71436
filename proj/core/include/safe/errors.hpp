#pragma once

#include <stdexcept>
#include <string>

namespace safe {

// Invalid configuration keys or values. The CLI maps this to exit code 2.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// File system failures; the message always names the path.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Input that does not follow one of the on-disk formats.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class MalformedHeaderError : public FormatError {
 public:
  using FormatError::FormatError;
};

class RaggedRowError : public FormatError {
 public:
  RaggedRowError(const std::string& what, long row) : FormatError(what), row_(row) {}
  long row() const noexcept { return row_; }

 private:
  long row_;
};

class UnknownVersionError : public FormatError {
 public:
  using FormatError::FormatError;
};

// Analysis could not produce a result from otherwise valid input
// (no clean epochs, degenerate statistics, undefined SNR).
class AnalysisError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DegenerateSampleError : public AnalysisError {
 public:
  using AnalysisError::AnalysisError;
};

}  // namespace safe
