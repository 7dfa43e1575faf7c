#include "covtest/csv.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "covtest/errors.hpp"

namespace covtest {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string current;
  for (char c : line) {
    if (c == ',') {
      fields.push_back(current);
      current.clear();
    } else if (c != '\r') {
      current += c;
    }
  }
  fields.push_back(current);
  return fields;
}

namespace {

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t");
  return s.substr(begin, end - begin + 1);
}

double parse_cell(const std::string& raw, int row, int col) {
  const std::string cell = trim(raw);
  double value = 0.0;
  const char* first = cell.data();
  const char* last = first + cell.size();
  const auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last || cell.empty()) {
    throw InvalidInput("CSV: cannot parse '" + cell + "' at data row " +
                       std::to_string(row) + ", column " + std::to_string(col));
  }
  return value;
}

bool looks_numeric(const std::string& raw) {
  const std::string cell = trim(raw);
  double value = 0.0;
  const char* first = cell.data();
  const auto [ptr, ec] = std::from_chars(first, first + cell.size(), value);
  return ec == std::errc() && ptr == first + cell.size() && !cell.empty();
}

}  // namespace

CsvTable read_design_csv(const std::string& path, const CsvOptions& options) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot open '" + path + "'");

  std::vector<std::vector<double>> rows;
  std::vector<std::string> names;
  std::string line;
  std::size_t columns = 0;
  bool header_pending = options.has_header;
  int data_row = 0;

  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    const auto fields = split_csv_line(line);
    if (header_pending) {
      header_pending = false;
      columns = fields.size();
      for (const auto& f : fields) names.push_back(trim(f));
      // A fully numeric "header" is almost certainly a data row.
      bool all_numeric = true;
      for (const auto& f : fields) all_numeric = all_numeric && looks_numeric(f);
      if (all_numeric) {
        throw InvalidInput(
            "CSV: header row looks numeric; pass --no-header for headerless "
            "files");
      }
      continue;
    }
    if (columns == 0) columns = fields.size();
    if (fields.size() != columns) {
      throw InvalidInput("CSV: ragged row " + std::to_string(data_row) +
                         " (expected " + std::to_string(columns) + " fields, got " +
                         std::to_string(fields.size()) + ")");
    }
    std::vector<double> row(columns);
    for (std::size_t c = 0; c < columns; ++c) {
      row[c] = parse_cell(fields[c], data_row, static_cast<int>(c));
    }
    rows.push_back(std::move(row));
    ++data_row;
  }

  if (columns < 2) throw InvalidInput("CSV: need at least 2 columns");
  if (rows.size() < 2) throw InvalidInput("CSV: need at least 2 data rows");
  if (names.empty()) {
    for (std::size_t c = 0; c < columns; ++c) {
      names.push_back("x" + std::to_string(c));
    }
  }

  int response = static_cast<int>(columns) - 1;
  if (options.response_name) {
    response = -1;
    for (std::size_t c = 0; c < names.size(); ++c) {
      if (names[c] == *options.response_name) {
        response = static_cast<int>(c);
        break;
      }
    }
    if (response < 0) {
      throw InvalidInput("CSV: no column named '" + *options.response_name +
                         "'");
    }
  } else if (options.response_index) {
    response = *options.response_index;
    if (response < 0 || response >= static_cast<int>(columns)) {
      throw InvalidInput("CSV: response index out of range");
    }
  }

  CsvTable table;
  const int n = static_cast<int>(rows.size());
  const int p = static_cast<int>(columns) - 1;
  table.x.resize(n, p);
  table.y.resize(n);
  table.response_name = names[response];
  for (std::size_t c = 0; c < columns; ++c) {
    if (static_cast<int>(c) != response) {
      table.predictor_names.push_back(names[c]);
    }
  }
  for (int i = 0; i < n; ++i) {
    int out = 0;
    for (std::size_t c = 0; c < columns; ++c) {
      if (static_cast<int>(c) == response) {
        table.y[i] = rows[i][c];
      } else {
        table.x(i, out++) = rows[i][c];
      }
    }
  }
  return table;
}

std::string format_double(double value) {
  char buffer[40];
  std::snprintf(buffer, sizeof(buffer), "%.17g", value);
  return buffer;
}

}  // namespace covtest
