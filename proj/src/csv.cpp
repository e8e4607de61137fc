#include "fame/csv.hpp"

#include <fstream>
#include <istream>
#include <sstream>

#include "fame/error.hpp"

namespace fame::csv {

bool Reader::next(std::vector<std::string>& row) {
  row.clear();
  std::string line;
  while (true) {
    if (!std::getline(in_, line)) return false;
    ++line_;
    if (first_) {
      first_ = false;
      if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
    }
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) break;
  }
  record_line_ = line_;

  std::string field;
  bool in_quotes = false;
  while (true) {
    for (std::size_t i = 0; i < line.size(); ++i) {
      const char c = line[i];
      if (in_quotes) {
        if (c == '"') {
          if (i + 1 < line.size() && line[i + 1] == '"') {
            field.push_back('"');
            ++i;
          } else {
            in_quotes = false;
          }
        } else {
          field.push_back(c);
        }
      } else if (c == '"' && field.empty()) {
        in_quotes = true;
      } else if (c == sep_) {
        row.push_back(std::move(field));
        field.clear();
      } else {
        field.push_back(c);
      }
    }
    if (!in_quotes) break;
    // Quoted field continues on the next physical line.
    if (!std::getline(in_, line)) {
      throw Error(ErrorCode::kParse,
                  "unterminated quoted field starting on line " + std::to_string(record_line_));
    }
    ++line_;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    field.push_back('\n');
  }
  row.push_back(std::move(field));
  return true;
}

std::optional<std::size_t> Table::column(std::string_view name) const {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == name) return i;
  }
  return std::nullopt;
}

std::size_t Table::require_column(std::string_view name, std::string_view file) const {
  auto c = column(name);
  if (!c) {
    throw Error(ErrorCode::kSchema,
                "missing column '" + std::string(name) + "' in " + std::string(file));
  }
  return *c;
}

namespace {
Table read_stream(std::istream& in) {
  Table t;
  Reader r(in);
  std::vector<std::string> row;
  if (!r.next(row)) return t;
  t.header = row;
  for (auto& h : t.header) {
    while (!h.empty() && (h.back() == ' ' || h.back() == '\t')) h.pop_back();
    while (!h.empty() && (h.front() == ' ' || h.front() == '\t')) h.erase(0, 1);
  }
  while (r.next(row)) {
    row.resize(std::max(row.size(), t.header.size()));
    t.rows.push_back(row);
    t.lines.push_back(r.record_line());
  }
  return t;
}
}  // namespace

Table read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kNotFound, "cannot open " + path, {{"path", path}});
  return read_stream(in);
}

Table read_string(std::string_view content) {
  std::istringstream in{std::string(content)};
  return read_stream(in);
}

std::string escape(std::string_view field) {
  if (field.find_first_of(",\"\n\r") == std::string_view::npos) return std::string(field);
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

std::string join_row(const std::vector<std::string>& fields) {
  std::string out;
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out.push_back(',');
    out += escape(fields[i]);
  }
  return out;
}

std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= s.size()) {
    const std::size_t p = s.find(sep, start);
    const std::size_t end = p == std::string_view::npos ? s.size() : p;
    std::string_view part = s.substr(start, end - start);
    while (!part.empty() && part.front() == ' ') part.remove_prefix(1);
    while (!part.empty() && part.back() == ' ') part.remove_suffix(1);
    if (!part.empty()) out.emplace_back(part);
    if (p == std::string_view::npos) break;
    start = p + 1;
  }
  return out;
}

}  // namespace fame::csv
