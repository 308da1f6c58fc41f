#include "charcoal/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <string_view>

#include "charcoal/error.hpp"

namespace charcoal {

std::string format_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

namespace {

std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> cells;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      cells.push_back(line.substr(start));
      return cells;
    }
    cells.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

void check_header(const std::vector<std::string_view>& cells) {
  if (cells.size() < 2) throw ParseError("header needs at least x1,y", 1, 1);
  for (std::size_t j = 0; j < cells.size(); ++j) {
    const std::string want = j + 1 == cells.size() ? "y" : "x" + std::to_string(j + 1);
    if (trim(cells[j]) != want)
      throw ParseError("expected header cell '" + want + "', found '" +
                           std::string(trim(cells[j])) + "'",
                       1, j + 1);
  }
}

}  // namespace

RegressionData read_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw ParseError("empty input, expected header x1,...,xp,y", 1, 1);
  if (line.starts_with("\xEF\xBB\xBF")) line.erase(0, 3);
  const auto header = split(line);
  check_header(header);
  const std::size_t cols = header.size();

  std::vector<double> x;
  Vector y;
  std::size_t lineno = 1;
  std::size_t blank_since = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) {
      if (blank_since == 0) blank_since = lineno;
      continue;
    }
    if (blank_since != 0) throw ParseError("blank line inside data", blank_since, 1);
    const auto cells = split(line);
    if (cells.size() != cols)
      throw ParseError("expected " + std::to_string(cols) + " cells, found " +
                           std::to_string(cells.size()),
                       lineno, std::min(cells.size(), cols) + 1);
    for (std::size_t j = 0; j < cols; ++j) {
      std::string_view cell = trim(cells[j]);
      if (!cell.empty() && cell.front() == '+') cell.remove_prefix(1);
      double v = 0.0;
      const auto res = std::from_chars(cell.data(), cell.data() + cell.size(), v);
      if (cell.empty() || res.ec != std::errc() || res.ptr != cell.data() + cell.size() ||
          !std::isfinite(v))
        throw ParseError("not a finite number: '" + std::string(trim(cells[j])) + "'", lineno,
                         j + 1);
      if (j + 1 == cols)
        y.push_back(v);
      else
        x.push_back(v);
    }
  }
  const std::size_t n = y.size();
  if (n == 0) throw ParseError("no data rows", 2, 1);
  return RegressionData(Matrix(n, cols - 1, std::move(x)), std::move(y));
}

RegressionData read_csv_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open " + path);
  return read_csv(in);
}

void write_csv(std::ostream& out, const RegressionData& data) {
  const std::size_t p = data.p();
  std::string line;
  for (std::size_t j = 0; j < p; ++j) line += "x" + std::to_string(j + 1) + ",";
  line += "y\n";
  out << line;
  for (std::size_t t = 0; t < data.n(); ++t) {
    line.clear();
    for (const double v : data.design.row(t)) {
      line += format_double(v);
      line += ',';
    }
    line += format_double(data.response[t]);
    line += '\n';
    out << line;
  }
}

void write_csv_file(const std::string& path, const RegressionData& data) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + path);
  write_csv(out, data);
  if (!out) throw ConfigError("write failed: " + path);
}

}  // namespace charcoal
