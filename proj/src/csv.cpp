#include "dkrc/csv.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "dkrc/error.hpp"

namespace dkrc::csv {

std::string format_double(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, res.ptr);
}

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
    s.remove_suffix(1);
  return s;
}

[[noreturn]] void bad_field(std::string_view field, std::size_t line) {
  throw Error(ErrorKind::ParseError, "line " + std::to_string(line) +
                                         ": cannot parse '" +
                                         std::string(field) + "'");
}

}  // namespace

double parse_double(std::string_view field, std::size_t line) {
  field = trim(field);
  if (field == "nan" || field == "NaN" || field == "-nan")
    return std::numeric_limits<double>::quiet_NaN();
  if (field == "inf") return std::numeric_limits<double>::infinity();
  if (field == "-inf") return -std::numeric_limits<double>::infinity();
  if (!field.empty() && field.front() == '+') field.remove_prefix(1);
  double value = 0.0;
  const auto res =
      std::from_chars(field.data(), field.data() + field.size(), value);
  if (field.empty() || res.ec != std::errc() ||
      res.ptr != field.data() + field.size()) {
    bad_field(field, line);
  }
  return value;
}

long long parse_int(std::string_view field, std::size_t line) {
  field = trim(field);
  long long value = 0;
  const auto res =
      std::from_chars(field.data(), field.data() + field.size(), value);
  if (field.empty() || res.ec != std::errc() ||
      res.ptr != field.data() + field.size()) {
    bad_field(field, line);
  }
  return value;
}

std::vector<std::string_view> split_fields(std::string_view row) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = row.find(',', start);
    if (comma == std::string_view::npos) {
      out.push_back(trim(row.substr(start)));
      break;
    }
    out.push_back(trim(row.substr(start, comma - start)));
    start = comma + 1;
  }
  return out;
}

std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot open '" + path + "' for reading");
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(std::move(line));
  }
  return lines;
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::Io, "cannot open '" + path + "' for writing");
  out << content;
  out.flush();
  if (!out) throw Error(ErrorKind::Io, "write to '" + path + "' failed");
}

}  // namespace dkrc::csv
