#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace sprobe::csv {

// Minimal RFC 4180 reader: comma separated, optional double-quoted fields
// with "" escapes, no embedded newlines. The first row is the header.
struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  // Index of a header column or -1.
  int column(std::string_view name) const;
};

std::vector<std::string> split_line(std::string_view line);
Table parse(std::string_view text);
Table read(const std::filesystem::path& path);

std::string quote(std::string_view field);

}  // namespace sprobe::csv
