#pragma once

#include <stdexcept>
#include <string>

namespace gridsynth {

enum class ErrorCode {
  OutOfBounds,
  InvalidIndex,
  InvalidGrid,
  NonAxisAligned,
  NegativeSide,
  DimensionMismatch,
  NonFinite,
  EmptyInputSet,
  EmptyTarget,
  OutsideWinningSet,
  SchemaError,
  GeometryError,
  UnsupportedDimension,
  UnknownSystem,
  ClientError,
  IoError,
};

const char* to_string(ErrorCode code);

/// Base for every error raised by the library. `code()` identifies the
/// failure class; `what()` carries the human-readable detail.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

/// Raised by the document parser. `path` is a JSON-pointer-like field path
/// (e.g. "/obstacles/2/kind"), `line` is 1-based or 0 when unknown.
class SchemaError : public Error {
 public:
  SchemaError(std::string path, const std::string& message, int line = 0)
      : Error(ErrorCode::SchemaError,
              (line > 0 ? "line " + std::to_string(line) + ": " : std::string()) +
                  (path.empty() ? std::string() : path + ": ") + message),
        path_(std::move(path)),
        line_(line) {}

  const std::string& path() const noexcept { return path_; }
  int line() const noexcept { return line_; }

 private:
  std::string path_;
  int line_;
};

}  // namespace gridsynth
