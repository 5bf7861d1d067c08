#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace realogic {

enum class ErrorCode {
  // tensor
  IncompatibleShapes,
  ShapeMismatch,
  InvalidAxis,
  InvalidExponent,
  NonScalarRoot,
  // fuzzy
  OutOfRangeTruth,
  EmptyKnowledgeBase,
  // logic
  DuplicateVariableConflict,
  UnboundSymbol,
  ArityMismatch,
  QuantifyingAbsentVariable,
  EmptyVariableSequence,
  DuplicateName,
  // parser
  LexError,
  ParseError,
  ArityError,
  UnknownSymbol,
  KindError,
  FormulaNotClosed,
  // learn
  EmptyBatch,
  NonFiniteLoss,
  // cli / data
  ConfigError,
  DataError,
  MissingColumn,
  NonNumericCell,
  EmptyAfterFilter,
  IoError,
};

// Stable machine-parsable name, e.g. "E_INCOMPATIBLE_SHAPES".
const char* error_code_name(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

// Lex/parse errors carry the byte offset (and line/column) inside the input.
class SyntaxError : public Error {
 public:
  SyntaxError(ErrorCode code, const std::string& message, std::size_t offset,
              std::size_t line, std::size_t column)
      : Error(code, message), offset_(offset), line_(line), column_(column) {}

  std::size_t offset() const noexcept { return offset_; }
  std::size_t line() const noexcept { return line_; }
  std::size_t column() const noexcept { return column_; }

 private:
  std::size_t offset_;
  std::size_t line_;
  std::size_t column_;
};

[[noreturn]] inline void raise(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

}  // namespace realogic
