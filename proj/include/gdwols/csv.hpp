#pragma once

#include <string>
#include <vector>

namespace gdwols::csv {

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  // Column position by name; throws if the column is absent.
  std::size_t column(const std::string& name) const;
};

// Shortest decimal representation that parses back to the same double, so
// written files round-trip exactly and reruns are byte identical.
std::string format_double(double x);
std::string format_int(long long x);

double parse_double(const std::string& field, const std::string& context);
long long parse_int(const std::string& field, const std::string& context);

std::vector<std::string> split_line(const std::string& line);

Table read_file(const std::string& path);
void write_file(const std::string& path, const std::vector<std::string>& header,
                const std::vector<std::vector<std::string>>& rows);

}  // namespace gdwols::csv
