#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace gm {

enum class ErrorCode {
  InvalidArgument,
  Config,
  Font,
  Gif,
  Trajectory,
  Layout,
  Numeric,
  Unimplemented,
  Io,
  NotFound,
  Internal,
};

constexpr const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "invalid_argument";
    case ErrorCode::Config: return "config";
    case ErrorCode::Font: return "font";
    case ErrorCode::Gif: return "gif";
    case ErrorCode::Trajectory: return "trajectory";
    case ErrorCode::Layout: return "layout";
    case ErrorCode::Numeric: return "numeric";
    case ErrorCode::Unimplemented: return "unimplemented";
    case ErrorCode::Io: return "io";
    case ErrorCode::NotFound: return "not_found";
    case ErrorCode::Internal: return "internal";
  }
  return "internal";
}

/// Base for every error raised by the core.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

class FontError : public Error {
 public:
  FontError(std::string table, const std::string& what)
      : Error(ErrorCode::Font, "font table '" + table + "': " + what), table_(std::move(table)) {}
  const std::string& table() const noexcept { return table_; }

 private:
  std::string table_;
};

class GifError : public Error {
 public:
  GifError(std::size_t offset, const std::string& what)
      : Error(ErrorCode::Gif, "gif decode error at byte " + std::to_string(offset) + ": " + what),
        offset_(offset) {}
  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

class NumericError : public Error {
 public:
  NumericError(int iteration, const std::string& what)
      : Error(ErrorCode::Numeric, what + " (iteration " + std::to_string(iteration) + ")"),
        iteration_(iteration) {}
  int iteration() const noexcept { return iteration_; }

 private:
  int iteration_;
};

/// Raised while a pipeline stage runs; wraps the original message with the
/// stage name.
class StageError : public Error {
 public:
  StageError(std::string stage, ErrorCode inner, const std::string& what)
      : Error(inner, "stage '" + stage + "': " + what), stage_(std::move(stage)) {}
  const std::string& stage() const noexcept { return stage_; }

 private:
  std::string stage_;
};

}  // namespace gm
