#include "spedn/common/error.hpp"

namespace spedn {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Io: return "io";
    case ErrorKind::Parse: return "syntax";
    case ErrorKind::Schema: return "schema";
    case ErrorKind::Arity: return "arity";
    case ErrorKind::UnknownType: return "unknown-type";
    case ErrorKind::UnknownRelation: return "unknown-relation";
    case ErrorKind::WrongRelationKind: return "relation-kind";
    case ErrorKind::Assembly: return "assembly";
    case ErrorKind::Execution: return "execution";
    case ErrorKind::Conversion: return "conversion";
    case ErrorKind::Shape: return "shape";
    case ErrorKind::Model: return "model";
  }
  return "unknown";
}

std::string ParseError::locate(const std::string& message, std::size_t offset, std::size_t line) {
  if (line > 0) return "line " + std::to_string(line) + ": " + message;
  return "offset " + std::to_string(offset) + ": " + message;
}

}  // namespace spedn
