#include "realogic/csv.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>

#include "realogic/errors.hpp"

namespace realogic {

namespace {

std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_row(const std::string& line) {
  std::vector<std::string> cells;
  std::size_t start = 0;
  while (true) {
    std::size_t comma = line.find(',', start);
    if (comma == std::string::npos) {
      cells.push_back(trim(line.substr(start)));
      break;
    }
    cells.push_back(trim(line.substr(start, comma - start)));
    start = comma + 1;
  }
  return cells;
}

bool parse_double(const std::string& cell, double& out) {
  const char* first = cell.data();
  const char* last = first + cell.size();
  auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc() && ptr == last && !cell.empty();
}

std::size_t column_index(const std::vector<std::string>& header, const std::string& name,
                         const std::string& path) {
  auto it = std::find(header.begin(), header.end(), name);
  if (it == header.end()) {
    raise(ErrorCode::MissingColumn, "'" + path + "' has no column '" + name + "'");
  }
  return static_cast<std::size_t>(it - header.begin());
}

bool filter_matches(const std::string& cell, const std::string& wanted) {
  if (cell == wanted) return true;
  double a = 0.0;
  double b = 0.0;
  return parse_double(cell, a) && parse_double(wanted, b) && a == b;
}

}  // namespace

Tensor load_csv(const std::string& path, const std::vector<std::string>& feature_columns,
                const std::optional<CsvFilter>& filter) {
  if (feature_columns.empty()) {
    raise(ErrorCode::ConfigError, "no feature columns requested from '" + path + "'");
  }
  std::ifstream f(path);
  if (!f) raise(ErrorCode::IoError, "cannot open '" + path + "' for reading");

  std::string line;
  if (!std::getline(f, line) || trim(line).empty()) {
    raise(ErrorCode::DataError, "'" + path + "' is missing a header row");
  }
  std::vector<std::string> header = split_row(line);

  std::vector<std::size_t> feature_idx;
  feature_idx.reserve(feature_columns.size());
  for (const std::string& name : feature_columns) {
    feature_idx.push_back(column_index(header, name, path));
  }
  std::size_t filter_idx = 0;
  if (filter) filter_idx = column_index(header, filter->column, path);

  std::vector<double> values;
  std::size_t rows_kept = 0;
  std::size_t data_row = 0;
  while (std::getline(f, line)) {
    if (trim(line).empty()) continue;
    ++data_row;
    std::vector<std::string> cells = split_row(line);
    if (cells.size() != header.size()) {
      raise(ErrorCode::DataError, "'" + path + "' row " + std::to_string(data_row) + " has " +
                                      std::to_string(cells.size()) + " cells, header has " +
                                      std::to_string(header.size()));
    }
    if (filter && !filter_matches(cells[filter_idx], filter->value)) continue;
    for (std::size_t k = 0; k < feature_idx.size(); ++k) {
      double v = 0.0;
      if (!parse_double(cells[feature_idx[k]], v)) {
        raise(ErrorCode::NonNumericCell, "'" + path + "' row " + std::to_string(data_row) +
                                             ", column '" + feature_columns[k] + "': '" +
                                             cells[feature_idx[k]] + "' is not a number");
      }
      values.push_back(v);
    }
    ++rows_kept;
  }

  if (rows_kept == 0) {
    if (filter) {
      raise(ErrorCode::EmptyAfterFilter, "'" + path + "' has no rows with " + filter->column +
                                             " = " + filter->value);
    }
    raise(ErrorCode::DataError, "'" + path + "' has no data rows");
  }
  return Tensor::from_values({rows_kept, feature_columns.size()}, std::move(values));
}

}  // namespace realogic
