#pragma once

#include <filesystem>
#include <istream>
#include <ostream>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace trendfollow {

/// Missing entries (standard errors of a single sample, undefined pass flags) render as NA.
struct NotAvailable {
  bool operator==(const NotAvailable&) const = default;
};

using Cell = std::variant<NotAvailable, double, long, std::string>;

struct Table {
  std::string name;
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;

  void add_row(std::vector<Cell> row);
};

struct Report {
  std::vector<std::pair<std::string, std::string>> meta;
  std::vector<Table> tables;

  const Table* find(const std::string& name) const;
};

enum class OutputFormat { Csv, Json };

/// Shortest round-trip decimal, locale independent; nan, inf, -inf for non-finite values.
std::string format_number(double v);

/// Sections: `# key: value` meta lines, then per table `# table: name`, a header, rows and a
/// blank line.
void write_csv(std::ostream& out, const Report& report);
void write_json(std::ostream& out, const Report& report);
Report read_csv_report(std::istream& in);
Report read_json_report(std::istream& in);

/// To stdout when path is empty; one file per table (name.csv / name.json) when path is an
/// existing directory or ends with a separator; a single file otherwise.
void emit(const Report& report, OutputFormat format, const std::filesystem::path& path,
          std::ostream& stdout_stream);

}  // namespace trendfollow
