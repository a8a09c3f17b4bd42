#include "tsfuse/harness/csv.h"

#include <fstream>

#include <fmt/format.h>

#include "tsfuse/errors.h"

namespace tsfuse::csv {

size_t Table::column(const std::string& name) const {
  for (size_t i = 0; i < header.size(); ++i) {
    if (header[i] == name) return i;
  }
  throw FormatError("missing CSV column '" + name + "'");
}

std::string num(double v) { return fmt::format("{}", v); }

std::string format_row(const Row& row) {
  std::string out;
  for (size_t i = 0; i < row.size(); ++i) {
    if (i > 0) out += ',';
    const auto& f = row[i];
    if (f.find_first_of(",\"\n") == std::string::npos) {
      out += f;
      continue;
    }
    out += '"';
    for (char c : f) {
      if (c == '"') out += '"';
      out += c;
    }
    out += '"';
  }
  return out;
}

Row parse_row(const std::string& line) {
  Row out;
  std::string field;
  bool quoted = false;
  for (size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        field += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        field += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(std::move(field));
      field.clear();
    } else if (c != '\r') {
      field += c;
    }
  }
  out.push_back(std::move(field));
  return out;
}

void write(const std::filesystem::path& path, const Table& table) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write " + path.string());
  out << format_row(table.header) << '\n';
  for (const auto& row : table.rows) out << format_row(row) << '\n';
}

Table read(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  Table t;
  std::string line;
  if (!std::getline(in, line)) return t;
  t.header = parse_row(line);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto row = parse_row(line);
    if (row.size() != t.header.size()) {
      throw FormatError(fmt::format("{}: row has {} fields, header has {}",
                                    path.string(), row.size(),
                                    t.header.size()));
    }
    t.rows.push_back(std::move(row));
  }
  return t;
}

}  // namespace tsfuse::csv
