#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace gesture::csv {

/// One parsed CSV table. Rows keep their 1-based source line for diagnostics.
struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::vector<int> lines;

  /// Column index by name, or -1.
  int column(std::string_view name) const;
};

/// Splits on commas; trims surrounding whitespace. Blank lines and lines
/// starting with '#' are skipped. No quoting support (fields never contain commas).
Table parse(std::string_view text, bool has_header = true);

std::vector<std::string> split_line(std::string_view line);

/// Shortest decimal that round-trips to the same double.
std::string format_double(double v);

double to_double(const std::string& field, int line, std::string_view what);

}  // namespace gesture::csv

namespace gesture::io {

std::string read_file(const std::string& path);
void write_file(const std::string& path, std::string_view content);

}  // namespace gesture::io
