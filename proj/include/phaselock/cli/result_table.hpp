#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <variant>
#include <vector>

namespace phaselock::cli {

using Cell = std::variant<double, std::int64_t, std::string>;

/// Rectangular table with '#'-prefixed metadata lines.
struct ResultTable {
  std::vector<std::string> metadata;  // without the leading '#'
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;

  /// Throws std::invalid_argument when the row width differs from the header.
  void add_row(std::vector<Cell> row);
};

/// RFC-4180 CSV text: metadata lines first, then header and rows. Doubles use
/// 17 significant digits and '.' as decimal separator.
std::string to_csv(const ResultTable& table);

/// Writes to_csv(table) to path; I/O failures raise std::runtime_error naming the path.
void emit_csv(const ResultTable& table, const std::filesystem::path& path);

/// Human-readable aligned rendering for terminals.
std::string to_pretty(const ResultTable& table);

/// Parses the data part of a CSV written by to_csv (metadata lines skipped).
/// Returns the header in columns and each cell as its raw text.
struct CsvText {
  std::vector<std::string> metadata;
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;
};
CsvText parse_csv(const std::string& text);

}  // namespace phaselock::cli
