#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

namespace covtest {

/// A parsed regression table: predictors, response, and column names.
struct CsvTable {
  Eigen::MatrixXd x;
  Eigen::VectorXd y;
  std::vector<std::string> predictor_names;
  std::string response_name;
};

struct CsvOptions {
  bool has_header = true;
  std::optional<std::string> response_name;  // overrides response_index
  std::optional<int> response_index;         // default: last column
};

/// Reads a comma-separated numeric table. Lines starting with '#' are
/// skipped; ragged rows and non-numeric cells are rejected with their
/// position.
CsvTable read_design_csv(const std::string& path, const CsvOptions& options);

/// Parses one CSV line, honoring nothing fancier than commas.
std::vector<std::string> split_csv_line(const std::string& line);

/// Shortest representation that round-trips a double exactly.
std::string format_double(double value);

}  // namespace covtest
