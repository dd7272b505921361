#ifndef MOBIDECOMP_CSV_HPP
#define MOBIDECOMP_CSV_HPP

#include <cerrno>
#include <cstdlib>
#include <fstream>
#include <string>
#include <vector>

#include "mobidecomp/common.hpp"

namespace mobi {

/// A CSV file in memory: mandatory header row plus data rows, each tagged
/// with its 1-based source line for error reporting.
struct CsvTable {
  std::string path;
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::vector<std::size_t> lines;

  int column(const std::string& name) const {
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (header[i] == name) return static_cast<int>(i);
    }
    fail(ErrorKind::parse_error, path + ": missing column '" + name + "'");
  }

  std::string location(std::size_t row) const {
    return path + ":" + std::to_string(lines.at(row));
  }
};

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line, const std::string& path,
                                               std::size_t line_no) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur.push_back(c);
      }
    } else if (c == '"' && cur.empty()) {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  if (quoted) {
    fail(ErrorKind::parse_error, path + ":" + std::to_string(line_no) + ": unterminated quote");
  }
  fields.push_back(cur);
  return fields;
}

}  // namespace detail

inline CsvTable read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::io_error, "cannot open '" + path + "'");
  CsvTable table;
  table.path = path;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || (line.size() == 1 && line[0] == '\r')) continue;
    auto fields = detail::split_csv_line(line, path, line_no);
    if (table.header.empty()) {
      table.header = std::move(fields);
    } else {
      if (fields.size() != table.header.size()) {
        fail(ErrorKind::parse_error, path + ":" + std::to_string(line_no) + ": expected " +
                                         std::to_string(table.header.size()) + " fields, got " +
                                         std::to_string(fields.size()));
      }
      table.rows.push_back(std::move(fields));
      table.lines.push_back(line_no);
    }
  }
  if (table.header.empty()) fail(ErrorKind::parse_error, path + ": empty file (no header row)");
  return table;
}

inline double parse_double(const CsvTable& t, std::size_t row, int col) {
  const std::string& s = t.rows[row][static_cast<std::size_t>(col)];
  errno = 0;
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end == s.c_str() || *end != '\0' || errno == ERANGE) {
    fail(ErrorKind::parse_error, t.location(row) + ": not a number: '" + s + "'");
  }
  return v;
}

inline long parse_int(const CsvTable& t, std::size_t row, int col) {
  const std::string& s = t.rows[row][static_cast<std::size_t>(col)];
  errno = 0;
  char* end = nullptr;
  const long v = std::strtol(s.c_str(), &end, 10);
  if (end == s.c_str() || *end != '\0' || errno == ERANGE) {
    fail(ErrorKind::parse_error, t.location(row) + ": not an integer: '" + s + "'");
  }
  return v;
}

/// Row-by-row CSV writer; numbers go through format_full so a write/read
/// cycle reproduces doubles bit-exactly.
class CsvWriter {
 public:
  explicit CsvWriter(const std::string& path) : path_(path), out_(path, std::ios::trunc) {
    if (!out_) fail(ErrorKind::io_error, "cannot write '" + path + "'");
  }

  void row(const std::vector<std::string>& fields) {
    for (std::size_t i = 0; i < fields.size(); ++i) {
      if (i) out_ << ',';
      write_field(fields[i]);
    }
    out_ << '\n';
  }

  static std::string num(double v) { return format_full(v); }
  static std::string num(int v) { return std::to_string(v); }

  void close() {
    out_.close();
    if (!out_) fail(ErrorKind::io_error, "write failed for '" + path_ + "'");
  }

 private:
  void write_field(const std::string& f) {
    if (f.find_first_of(",\"\n") == std::string::npos) {
      out_ << f;
      return;
    }
    out_ << '"';
    for (char c : f) {
      if (c == '"') out_ << '"';
      out_ << c;
    }
    out_ << '"';
  }

  std::string path_;
  std::ofstream out_;
};

}  // namespace mobi

#endif  // MOBIDECOMP_CSV_HPP
