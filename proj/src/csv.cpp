#include "gdwols/csv.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <stdexcept>
#include <system_error>

namespace gdwols::csv {

namespace {

void check_field(const std::string& field) {
  if (field.find_first_of(",\"\n\r") != std::string::npos) {
    throw std::invalid_argument("csv: field contains a delimiter or quote: '" +
                                field + "'");
  }
}

}  // namespace

std::size_t Table::column(const std::string& name) const {
  const auto it = std::find(header.begin(), header.end(), name);
  if (it == header.end()) {
    throw std::invalid_argument("csv: missing required column '" + name + "'");
  }
  return static_cast<std::size_t>(it - header.begin());
}

std::string format_double(double x) {
  if (!std::isfinite(x)) {
    throw std::invalid_argument("csv: refusing to write a non-finite value.");
  }
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, res.ptr);
}

std::string format_int(long long x) { return std::to_string(x); }

double parse_double(const std::string& field, const std::string& context) {
  double value = 0.0;
  const char* first = field.data();
  const char* last = field.data() + field.size();
  const auto res = std::from_chars(first, last, value);
  if (res.ec != std::errc() || res.ptr != last || field.empty()) {
    throw std::invalid_argument("csv: cannot parse '" + field +
                                "' as a number (" + context + ")");
  }
  return value;
}

long long parse_int(const std::string& field, const std::string& context) {
  long long value = 0;
  const char* first = field.data();
  const char* last = field.data() + field.size();
  const auto res = std::from_chars(first, last, value);
  if (res.ec != std::errc() || res.ptr != last || field.empty()) {
    throw std::invalid_argument("csv: cannot parse '" + field +
                                "' as an integer (" + context + ")");
  }
  return value;
}

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string current;
  for (char c : line) {
    if (c == ',') {
      fields.push_back(current);
      current.clear();
    } else {
      current.push_back(c);
    }
  }
  fields.push_back(current);
  return fields;
}

Table read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("csv: cannot open '" + path + "' for reading.");
  }
  Table table;
  std::string line;
  bool have_header = false;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto fields = split_line(line);
    if (!have_header) {
      table.header = std::move(fields);
      have_header = true;
    } else {
      if (fields.size() != table.header.size()) {
        throw std::runtime_error(
            "csv: row with " + std::to_string(fields.size()) +
            " fields does not match header width " +
            std::to_string(table.header.size()) + " in '" + path + "'");
      }
      table.rows.push_back(std::move(fields));
    }
  }
  if (!have_header) {
    throw std::runtime_error("csv: '" + path + "' is empty.");
  }
  return table;
}

void write_file(const std::string& path, const std::vector<std::string>& header,
                const std::vector<std::vector<std::string>>& rows) {
  std::ofstream out(path);
  if (!out) {
    throw std::runtime_error("csv: cannot open '" + path + "' for writing.");
  }
  auto write_row = [&out](const std::vector<std::string>& fields) {
    for (std::size_t i = 0; i < fields.size(); ++i) {
      check_field(fields[i]);
      if (i > 0) out << ',';
      out << fields[i];
    }
    out << '\n';
  };
  write_row(header);
  for (const auto& row : rows) {
    if (row.size() != header.size()) {
      throw std::invalid_argument("csv: row width does not match header.");
    }
    write_row(row);
  }
  if (!out) {
    throw std::runtime_error("csv: write to '" + path + "' failed.");
  }
}

}  // namespace gdwols::csv
