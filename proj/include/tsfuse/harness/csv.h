#ifndef TSFUSE_HARNESS_CSV_H_
#define TSFUSE_HARNESS_CSV_H_

#include <filesystem>
#include <string>
#include <vector>

namespace tsfuse::csv {

using Row = std::vector<std::string>;

struct Table {
  Row header;
  std::vector<Row> rows;

  // Index of a header column; throws FormatError when absent.
  size_t column(const std::string& name) const;
};

// Shortest decimal that round-trips the double.
std::string num(double v);

// RFC 4180 subset: fields with commas, quotes or newlines are quoted.
std::string format_row(const Row& row);
Row parse_row(const std::string& line);

void write(const std::filesystem::path& path, const Table& table);
Table read(const std::filesystem::path& path);

}  // namespace tsfuse::csv

#endif  // TSFUSE_HARNESS_CSV_H_
