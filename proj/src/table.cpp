#include "trendfollow/table.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "trendfollow/error.hpp"

namespace trendfollow {

using ordered_json = nlohmann::ordered_json;

void Table::add_row(std::vector<Cell> row) {
  detail::require(row.size() == columns.size(), ErrorCode::size_mismatch,
                  "row width differs from the column count");
  rows.push_back(std::move(row));
}

const Table* Report::find(const std::string& name) const {
  for (const auto& t : tables)
    if (t.name == name) return &t;
  return nullptr;
}

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  std::string s(buf, end);
  // Keep doubles distinguishable from integers when read back.
  if (s.find_first_of(".e") == std::string::npos) s += ".0";
  return s;
}

namespace {

std::string quote_csv(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos && s != "NA") return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + '"';
}

std::string render_cell(const Cell& c) {
  return std::visit(
      [](const auto& v) -> std::string {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, NotAvailable>) return "NA";
        else if constexpr (std::is_same_v<T, double>) return format_number(v);
        else if constexpr (std::is_same_v<T, long>) return std::to_string(v);
        else return quote_csv(v);
      },
      c);
}

Cell parse_cell(const std::string& raw, bool quoted) {
  if (quoted) return raw;
  if (raw == "NA") return NotAvailable{};
  const char* first = raw.data();
  const char* last = raw.data() + raw.size();
  if (raw.find_first_of(".enNi") == std::string::npos) {
    long v = 0;
    const auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec == std::errc() && ptr == last && !raw.empty()) return v;
  } else {
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec == std::errc() && ptr == last) return v;
  }
  return raw;
}

std::vector<std::pair<std::string, bool>> split_csv(const std::string& line) {
  std::vector<std::pair<std::string, bool>> out;
  std::string cur;
  bool quoted = false;
  bool in_quotes = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (in_quotes) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (c == '"') {
        in_quotes = false;
      } else {
        cur += c;
      }
    } else if (c == '"') {
      in_quotes = quoted = true;
    } else if (c == ',') {
      out.emplace_back(std::move(cur), quoted);
      cur.clear();
      quoted = false;
    } else {
      cur += c;
    }
  }
  out.emplace_back(std::move(cur), quoted);
  return out;
}

ordered_json cell_json(const Cell& c) {
  return std::visit(
      [](const auto& v) -> ordered_json {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, NotAvailable>) return nullptr;
        else if constexpr (std::is_same_v<T, double>)
          return std::isfinite(v) ? ordered_json(v) : ordered_json(format_number(v));
        else return v;
      },
      c);
}

Cell json_cell(const ordered_json& j) {
  if (j.is_null()) return NotAvailable{};
  if (j.is_number_integer()) return j.get<long>();
  if (j.is_number()) return j.get<double>();
  const auto s = j.get<std::string>();
  if (s == "nan") return std::nan("");
  if (s == "inf") return HUGE_VAL;
  if (s == "-inf") return -HUGE_VAL;
  return s;
}

ordered_json report_json(const Report& report) {
  ordered_json doc;
  doc["meta"] = ordered_json::object();
  for (const auto& [k, v] : report.meta) doc["meta"][k] = v;
  doc["tables"] = ordered_json::array();
  for (const auto& t : report.tables) {
    ordered_json jt;
    jt["name"] = t.name;
    jt["columns"] = t.columns;
    jt["rows"] = ordered_json::array();
    for (const auto& row : t.rows) {
      ordered_json jr = ordered_json::array();
      for (const auto& c : row) jr.push_back(cell_json(c));
      jt["rows"].push_back(std::move(jr));
    }
    doc["tables"].push_back(std::move(jt));
  }
  return doc;
}

}  // namespace

void write_csv(std::ostream& out, const Report& report) {
  for (const auto& [k, v] : report.meta) out << "# " << k << ": " << v << '\n';
  for (const auto& t : report.tables) {
    out << "# table: " << t.name << '\n';
    for (std::size_t i = 0; i < t.columns.size(); ++i) out << (i ? "," : "") << t.columns[i];
    out << '\n';
    for (const auto& row : t.rows) {
      for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << render_cell(row[i]);
      out << '\n';
    }
    out << '\n';
  }
}

void write_json(std::ostream& out, const Report& report) { out << report_json(report).dump(1) << '\n'; }

Report read_csv_report(std::istream& in) {
  Report report;
  std::string line;
  Table* current = nullptr;
  bool want_header = false;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.rfind("# table: ", 0) == 0) {
      report.tables.push_back({line.substr(9), {}, {}});
      current = &report.tables.back();
      want_header = true;
    } else if (line.rfind("# ", 0) == 0) {
      const auto colon = line.find(": ");
      detail::require(colon != std::string::npos, ErrorCode::malformed_input, "bad meta line");
      report.meta.emplace_back(line.substr(2, colon - 2), line.substr(colon + 2));
    } else if (line.empty()) {
      current = nullptr;
    } else {
      detail::require(current != nullptr, ErrorCode::malformed_input, "row outside a table");
      const auto fields = split_csv(line);
      if (want_header) {
        for (const auto& f : fields) current->columns.push_back(f.first);
        want_header = false;
      } else {
        std::vector<Cell> row;
        for (const auto& [text, quoted] : fields) row.push_back(parse_cell(text, quoted));
        current->add_row(std::move(row));
      }
    }
  }
  return report;
}

Report read_json_report(std::istream& in) {
  const auto doc = ordered_json::parse(in);
  Report report;
  for (const auto& [k, v] : doc.at("meta").items()) report.meta.emplace_back(k, v.get<std::string>());
  for (const auto& jt : doc.at("tables")) {
    Table t{jt.at("name").get<std::string>(), jt.at("columns").get<std::vector<std::string>>(), {}};
    for (const auto& jr : jt.at("rows")) {
      std::vector<Cell> row;
      for (const auto& c : jr) row.push_back(json_cell(c));
      t.add_row(std::move(row));
    }
    report.tables.push_back(std::move(t));
  }
  return report;
}

void emit(const Report& report, OutputFormat format, const std::filesystem::path& path,
          std::ostream& stdout_stream) {
  const auto write = [format](std::ostream& os, const Report& r) {
    format == OutputFormat::Json ? write_json(os, r) : write_csv(os, r);
  };
  if (path.empty()) {
    write(stdout_stream, report);
    return;
  }
  const std::string text = path.string();
  const bool as_directory = std::filesystem::is_directory(path) ||
                            (!text.empty() && (text.back() == '/' || text.back() == '\\'));
  if (!as_directory) {
    std::ofstream os(path, std::ios::binary);
    if (!os) detail::fail(ErrorCode::malformed_input, "cannot write " + text);
    write(os, report);
    return;
  }
  std::filesystem::create_directories(path);
  const char* ext = format == OutputFormat::Json ? ".json" : ".csv";
  for (const auto& t : report.tables) {
    Report single{report.meta, {t}};
    std::ofstream os(path / (t.name + ext), std::ios::binary);
    if (!os) detail::fail(ErrorCode::malformed_input, "cannot write " + (path / t.name).string());
    write(os, single);
  }
}

}  // namespace trendfollow
