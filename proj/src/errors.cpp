#include "realogic/errors.hpp"

namespace realogic {

const char* error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::IncompatibleShapes: return "E_INCOMPATIBLE_SHAPES";
    case ErrorCode::ShapeMismatch: return "E_SHAPE_MISMATCH";
    case ErrorCode::InvalidAxis: return "E_INVALID_AXIS";
    case ErrorCode::InvalidExponent: return "E_INVALID_EXPONENT";
    case ErrorCode::NonScalarRoot: return "E_NON_SCALAR_ROOT";
    case ErrorCode::OutOfRangeTruth: return "E_OUT_OF_RANGE_TRUTH";
    case ErrorCode::EmptyKnowledgeBase: return "E_EMPTY_KNOWLEDGE_BASE";
    case ErrorCode::DuplicateVariableConflict: return "E_DUPLICATE_VARIABLE_CONFLICT";
    case ErrorCode::UnboundSymbol: return "E_UNBOUND_SYMBOL";
    case ErrorCode::ArityMismatch: return "E_ARITY_MISMATCH";
    case ErrorCode::QuantifyingAbsentVariable: return "E_QUANTIFYING_ABSENT_VARIABLE";
    case ErrorCode::EmptyVariableSequence: return "E_EMPTY_VARIABLE_SEQUENCE";
    case ErrorCode::DuplicateName: return "E_DUPLICATE_NAME";
    case ErrorCode::LexError: return "E_LEX";
    case ErrorCode::ParseError: return "E_PARSE";
    case ErrorCode::ArityError: return "E_ARITY";
    case ErrorCode::UnknownSymbol: return "E_UNKNOWN_SYMBOL";
    case ErrorCode::KindError: return "E_KIND";
    case ErrorCode::FormulaNotClosed: return "E_FORMULA_NOT_CLOSED";
    case ErrorCode::EmptyBatch: return "E_EMPTY_BATCH";
    case ErrorCode::NonFiniteLoss: return "E_NON_FINITE_LOSS";
    case ErrorCode::ConfigError: return "E_CONFIG";
    case ErrorCode::DataError: return "E_DATA";
    case ErrorCode::MissingColumn: return "E_MISSING_COLUMN";
    case ErrorCode::NonNumericCell: return "E_NON_NUMERIC_CELL";
    case ErrorCode::EmptyAfterFilter: return "E_EMPTY_AFTER_FILTER";
    case ErrorCode::IoError: return "E_IO";
  }
  return "E_UNKNOWN";
}

}  // namespace realogic
