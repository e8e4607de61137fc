#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace fame::csv {

// RFC 4180 reader: quoted fields may contain separators, doubled quotes,
// and newlines. A UTF-8 BOM on the first line is dropped.
class Reader {
 public:
  explicit Reader(std::istream& in, char sep = ',') : in_(in), sep_(sep) {}

  // Reads the next record. Returns false at end of input. Blank lines are
  // skipped.
  bool next(std::vector<std::string>& row);
  // 1-based physical line on which the last returned record started.
  std::size_t record_line() const { return record_line_; }

 private:
  std::istream& in_;
  char sep_;
  std::size_t line_ = 0;
  std::size_t record_line_ = 0;
  bool first_ = true;
};

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::vector<std::size_t> lines;

  // Column index by header name, or nullopt.
  std::optional<std::size_t> column(std::string_view name) const;
  std::size_t require_column(std::string_view name, std::string_view file) const;
};

// Reads a whole CSV file with a header row. Throws fame::Error if the file
// cannot be opened.
Table read_file(const std::string& path);
Table read_string(std::string_view content);

std::string escape(std::string_view field);
std::string join_row(const std::vector<std::string>& fields);

std::vector<std::string> split(std::string_view s, char sep);

}  // namespace fame::csv
