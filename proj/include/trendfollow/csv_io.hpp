#pragma once

#include <filesystem>
#include <istream>
#include <string>
#include <vector>

namespace trendfollow {

enum class SeriesKind { Price, Return };

/// Contents of a `date,price` or `date,return` CSV file.
struct InputSeries {
  SeriesKind kind = SeriesKind::Price;
  std::vector<std::string> dates;
  std::vector<double> values;
};

/// Header must be exactly `date,price` or `date,return` (LF or CRLF, optional UTF-8 BOM).
/// Dates are ISO-8601 (YYYY-MM-DD, optionally followed by a time) and strictly increasing.
/// Errors are malformed_input with the offending line number in the message.
InputSeries read_series_csv(std::istream& in, const std::string& source = "input");
InputSeries read_series_csv(const std::filesystem::path& path);

}  // namespace trendfollow
