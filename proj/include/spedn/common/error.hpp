#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace spedn {

enum class ErrorKind {
  Io,
  Parse,
  Schema,
  Arity,
  UnknownType,
  UnknownRelation,
  WrongRelationKind,
  Assembly,
  Execution,
  Conversion,
  Shape,
  Model,
};

const char* to_string(ErrorKind kind);

/// Base error for every library failure. The CLI turns these into a
/// one-line `error kind=... message=...` record.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

/// Error with a position in the input: a character offset for inline text,
/// or a 1-based line number for files (0 when unknown).
class ParseError : public Error {
 public:
  ParseError(ErrorKind kind, const std::string& message, std::size_t offset, std::size_t line = 0)
      : Error(kind, locate(message, offset, line)), offset_(offset), line_(line) {}

  std::size_t offset() const noexcept { return offset_; }
  std::size_t line() const noexcept { return line_; }

 private:
  static std::string locate(const std::string& message, std::size_t offset, std::size_t line);

  std::size_t offset_;
  std::size_t line_;
};

}  // namespace spedn
