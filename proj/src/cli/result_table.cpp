#include "phaselock/cli/result_table.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

#include "phaselock/cli/config.hpp"

namespace phaselock::cli {

namespace {

std::string cell_text(const Cell& c) {
  if (const auto* d = std::get_if<double>(&c)) {
    if (std::isnan(*d)) return "nan";
    if (std::isinf(*d)) return *d > 0 ? "inf" : "-inf";
    return format_double(*d);
  }
  if (const auto* i = std::get_if<std::int64_t>(&c)) return std::to_string(*i);
  return std::get<std::string>(c);
}

std::string quote(const std::string& s) {
  if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += '"';
    out += ch;
  }
  return out + "\"";
}

}  // namespace

void ResultTable::add_row(std::vector<Cell> row) {
  if (row.size() != columns.size()) {
    throw std::invalid_argument("ResultTable: row has " + std::to_string(row.size()) +
                                " cells, header has " + std::to_string(columns.size()));
  }
  rows.push_back(std::move(row));
}

std::string to_csv(const ResultTable& table) {
  std::string out;
  for (const auto& m : table.metadata) out += "# " + m + "\r\n";
  for (std::size_t i = 0; i < table.columns.size(); ++i) {
    out += (i ? "," : "") + quote(table.columns[i]);
  }
  out += "\r\n";
  for (const auto& row : table.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) out += (i ? "," : "") + quote(cell_text(row[i]));
    out += "\r\n";
  }
  return out;
}

void emit_csv(const ResultTable& table, const std::filesystem::path& path) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
  const std::string text = to_csv(table);
  f.write(text.data(), static_cast<std::streamsize>(text.size()));
  f.close();
  if (!f) throw std::runtime_error("failed writing '" + path.string() + "'");
}

std::string to_pretty(const ResultTable& table) {
  std::vector<std::size_t> width(table.columns.size(), 0);
  std::vector<std::vector<std::string>> cells;
  for (std::size_t i = 0; i < table.columns.size(); ++i) width[i] = table.columns[i].size();
  for (const auto& row : table.rows) {
    std::vector<std::string> r;
    for (std::size_t i = 0; i < row.size(); ++i) {
      std::string s;
      if (const auto* d = std::get_if<double>(&row[i])) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.6g", *d);
        s = buf;
      } else {
        s = cell_text(row[i]);
      }
      width[i] = std::max(width[i], s.size());
      r.push_back(std::move(s));
    }
    cells.push_back(std::move(r));
  }
  std::string out;
  auto line = [&](const std::vector<std::string>& r) {
    for (std::size_t i = 0; i < r.size(); ++i) {
      out += r[i];
      if (i + 1 < r.size()) out += std::string(width[i] - r[i].size() + 2, ' ');
    }
    out += "\n";
  };
  line(table.columns);
  for (const auto& r : cells) line(r);
  return out;
}

CsvText parse_csv(const std::string& text) {
  CsvText out;
  std::vector<std::vector<std::string>> records;
  std::size_t i = 0;
  bool at_line_start = true;
  std::vector<std::string> record;
  std::string field;
  bool in_quotes = false;
  bool any = false;
  while (i < text.size()) {
    const char ch = text[i];
    if (at_line_start && ch == '#') {
      const auto end = text.find('\n', i);
      std::string m = text.substr(i + 1, end == std::string::npos ? std::string::npos : end - i - 1);
      if (!m.empty() && m.back() == '\r') m.pop_back();
      if (!m.empty() && m.front() == ' ') m.erase(0, 1);
      out.metadata.push_back(m);
      i = end == std::string::npos ? text.size() : end + 1;
      continue;
    }
    at_line_start = false;
    any = true;
    if (in_quotes) {
      if (ch == '"' && i + 1 < text.size() && text[i + 1] == '"') {
        field += '"';
        i += 2;
        continue;
      }
      if (ch == '"') {
        in_quotes = false;
      } else {
        field += ch;
      }
      ++i;
      continue;
    }
    if (ch == '"') {
      in_quotes = true;
    } else if (ch == ',') {
      record.push_back(std::move(field));
      field.clear();
    } else if (ch == '\r' || ch == '\n') {
      if (ch == '\r' && i + 1 < text.size() && text[i + 1] == '\n') ++i;
      record.push_back(std::move(field));
      field.clear();
      records.push_back(std::move(record));
      record.clear();
      any = false;
      at_line_start = true;
    } else {
      field += ch;
    }
    ++i;
  }
  if (any) {
    record.push_back(std::move(field));
    records.push_back(std::move(record));
  }
  if (!records.empty()) {
    out.columns = std::move(records.front());
    out.rows.assign(std::make_move_iterator(records.begin() + 1),
                    std::make_move_iterator(records.end()));
  }
  return out;
}

}  // namespace phaselock::cli
