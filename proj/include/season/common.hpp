#pragma once

#include <stdexcept>
#include <string>

namespace season {

// Every error thrown by the library derives from Error. InputError marks
// problems caused by user-supplied files, flags, or corpora; the CLI maps
// InputError to exit code 2 and everything else to exit code 1.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InputError : public Error {
 public:
  using Error::Error;
};

class EmptyDocument : public InputError {
 public:
  using InputError::InputError;
};

class EmptySummary : public InputError {
 public:
  using InputError::InputError;
};

class EmptyReference : public InputError {
 public:
  using InputError::InputError;
};

class DuplicateId : public InputError {
 public:
  using InputError::InputError;
};

class MissingReference : public InputError {
 public:
  using InputError::InputError;
};

class MissingLabels : public InputError {
 public:
  using InputError::InputError;
};

class IdMismatch : public InputError {
 public:
  using InputError::InputError;
};

class InsufficientGrid : public InputError {
 public:
  using InputError::InputError;
};

class SequenceTooLong : public InputError {
 public:
  using InputError::InputError;
};

class ParseError : public InputError {
 public:
  ParseError(int line, const std::string& what)
      : InputError("line " + std::to_string(line) + ": " + what), line_(line) {}
  int line() const { return line_; }

 private:
  int line_;
};

class ShapeMismatch : public Error {
 public:
  using Error::Error;
};

class LossNotScalar : public Error {
 public:
  using Error::Error;
};

class NonFiniteGradient : public Error {
 public:
  using Error::Error;
};

// Logging, controlled by the SEASON_LOG environment variable
// (error | info | debug). Defaults to info. Messages go to stderr.
enum class LogLevel { kError = 0, kInfo = 1, kDebug = 2 };

LogLevel log_level();
void set_log_level(LogLevel level);
void log_message(LogLevel level, const std::string& msg);

inline void log_error(const std::string& msg) { log_message(LogLevel::kError, msg); }
inline void log_info(const std::string& msg) { log_message(LogLevel::kInfo, msg); }
inline void log_debug(const std::string& msg) { log_message(LogLevel::kDebug, msg); }

}  // namespace season
