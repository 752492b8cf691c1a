#pragma once

#include <stdexcept>
#include <string>

namespace logxai {

/// Broad failure class; the CLI maps each kind onto its exit code.
enum class ErrorKind { usage, data, model, io };

class Error : public std::runtime_error {
public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

private:
  ErrorKind kind_;
};

struct ParseError : Error {
  explicit ParseError(const std::string& what) : Error(ErrorKind::data, what) {}
};

struct SizingError : Error {
  explicit SizingError(const std::string& what) : Error(ErrorKind::data, what) {}
};

struct ShapeError : Error {
  explicit ShapeError(const std::string& what) : Error(ErrorKind::data, what) {}
};

struct DegenerateInputError : Error {
  explicit DegenerateInputError(const std::string& what)
      : Error(ErrorKind::data, what) {}
};

struct ArgumentError : Error {
  explicit ArgumentError(const std::string& what)
      : Error(ErrorKind::usage, what) {}
};

struct ConfigError : Error {
  explicit ConfigError(const std::string& what)
      : Error(ErrorKind::usage, what) {}
};

struct TrainingDivergedError : Error {
  explicit TrainingDivergedError(const std::string& what)
      : Error(ErrorKind::model, what) {}
};

struct CheckpointError : Error {
  explicit CheckpointError(const std::string& what)
      : Error(ErrorKind::model, what) {}
};

struct IoError : Error {
  explicit IoError(const std::string& what) : Error(ErrorKind::io, what) {}
};

} // namespace logxai
