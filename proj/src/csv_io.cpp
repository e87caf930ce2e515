#include "trendfollow/csv_io.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <string_view>

#include "trendfollow/error.hpp"

namespace trendfollow {

namespace {

[[noreturn]] void bad_line(const std::string& source, long line, const std::string& what) {
  detail::fail(ErrorCode::malformed_input, source + ":" + std::to_string(line) + ": " + what);
}

bool is_iso_date(std::string_view s) {
  if (s.size() < 10) return false;
  for (std::size_t i : {0u, 1u, 2u, 3u, 5u, 6u, 8u, 9u})
    if (!std::isdigit(static_cast<unsigned char>(s[i]))) return false;
  if (s[4] != '-' || s[7] != '-') return false;
  const int month = (s[5] - '0') * 10 + (s[6] - '0');
  const int day = (s[8] - '0') * 10 + (s[9] - '0');
  if (month < 1 || month > 12 || day < 1 || day > 31) return false;
  return s.size() == 10 || s[10] == 'T' || s[10] == ' ';
}

}  // namespace

InputSeries read_series_csv(std::istream& in, const std::string& source) {
  InputSeries out;
  std::string line;
  long number = 0;
  bool header = false;
  while (std::getline(in, line)) {
    ++number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!header) {
      if (number == 1 && line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
      if (line == "date,price") {
        out.kind = SeriesKind::Price;
      } else if (line == "date,return") {
        out.kind = SeriesKind::Return;
      } else {
        bad_line(source, number, "expected header 'date,price' or 'date,return', got '" + line + "'");
      }
      header = true;
      continue;
    }
    const auto comma = line.find(',');
    if (comma == std::string::npos) bad_line(source, number, "missing value (expected 'date,value')");
    const std::string_view date(line.data(), comma);
    const std::string_view value(line.data() + comma + 1, line.size() - comma - 1);
    if (value.find(',') != std::string_view::npos) bad_line(source, number, "too many fields");
    if (date.empty()) bad_line(source, number, "missing date");
    if (value.empty()) bad_line(source, number, "missing value");
    if (!is_iso_date(date)) bad_line(source, number, "date '" + std::string(date) + "' is not ISO-8601");
    if (!out.dates.empty() && !(out.dates.back() < date))
      bad_line(source, number, "dates must be strictly increasing");
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
    if (ec != std::errc() || ptr != value.data() + value.size() || !std::isfinite(v))
      bad_line(source, number, "value '" + std::string(value) + "' is not a finite decimal number");
    out.dates.emplace_back(date);
    out.values.push_back(v);
  }
  if (!header) detail::fail(ErrorCode::malformed_input, source + ": empty input");
  if (out.values.empty()) detail::fail(ErrorCode::malformed_input, source + ": no data rows");
  return out;
}

InputSeries read_series_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) detail::fail(ErrorCode::malformed_input, "cannot open " + path.string());
  return read_series_csv(in, path.string());
}

}  // namespace trendfollow
