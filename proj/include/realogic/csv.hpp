#pragma once

#include <optional>
#include <string>
#include <vector>

#include "realogic/tensor.hpp"

namespace realogic {

// Keep rows whose cell in `column` equals `value`; numeric cells compare by
// value ("1" matches "1.0"), everything else by exact text.
struct CsvFilter {
  std::string column;
  std::string value;
};

// Reads a comma-separated UTF-8 table with a mandatory header row and returns
// the selected feature columns as a [rows, columns] tensor. Cells are trimmed;
// quoting is not supported.
// Errors: IoError, DataError (no header / ragged row), MissingColumn,
// NonNumericCell (with 1-based data row and column name), EmptyAfterFilter.
Tensor load_csv(const std::string& path, const std::vector<std::string>& feature_columns,
                const std::optional<CsvFilter>& filter = std::nullopt);

}  // namespace realogic
