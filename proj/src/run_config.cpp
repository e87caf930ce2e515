#include "trendfollow/run_config.hpp"

#include <charconv>
#include <sstream>

#include "trendfollow/error.hpp"

namespace trendfollow {

MarketSpec RunConfig::market() const { return {model, lambda, beta0}; }

StrategySpec RunConfig::strategy() const { return {eta, t0, t, theta, alpha}; }

namespace {

[[noreturn]] void bad_value(std::string_view key, std::string_view value, const char* expected) {
  detail::fail(ErrorCode::malformed_input, "config key '" + std::string(key) + "': '" +
                                               std::string(value) + "' is not " + expected);
}

template <class T>
T parse_number(std::string_view key, std::string_view v) {
  T out{};
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size() || v.empty()) bad_value(key, v, "a number");
  return out;
}

bool parse_bool(std::string_view key, std::string_view v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  bad_value(key, v, "true or false");
}

template <class T>
std::string render_number(T v) {
  if constexpr (std::is_floating_point_v<T>) return format_number(v);
  else return std::to_string(v);
}

template <class T>
ConfigKey number_key(std::string name, std::string help, T RunConfig::*field) {
  return {name, std::move(help), false,
          [field](const RunConfig& c) { return render_number(c.*field); },
          [field, name](RunConfig& c, std::string_view v) { c.*field = parse_number<T>(name, v); }};
}

ConfigKey bool_key(std::string name, std::string help, bool RunConfig::*field) {
  return {name, std::move(help), true,
          [field](const RunConfig& c) { return std::string(c.*field ? "true" : "false"); },
          [field, name](RunConfig& c, std::string_view v) { c.*field = parse_bool(name, v); }};
}

ConfigKey string_key(std::string name, std::string help, std::string RunConfig::*field) {
  return {name, std::move(help), false, [field](const RunConfig& c) { return c.*field; },
          [field](RunConfig& c, std::string_view v) { c.*field = std::string(v); }};
}

std::vector<ConfigKey> make_keys() {
  std::vector<ConfigKey> keys;
  keys.push_back({"model", "market model: stochastic or autoregressive", false,
                  [](const RunConfig& c) {
                    return std::string(c.model == MarketKind::AutoregressiveTrend ? "autoregressive"
                                                                                  : "stochastic");
                  },
                  [](RunConfig& c, std::string_view v) {
                    if (v == "stochastic") c.model = MarketKind::StochasticTrend;
                    else if (v == "autoregressive") c.model = MarketKind::AutoregressiveTrend;
                    else bad_value("model", v, "stochastic or autoregressive");
                  }});
  keys.push_back(number_key("lambda", "trend decay per step, (0, 1]", &RunConfig::lambda));
  keys.push_back(number_key("beta0", "excess volatility of the trend, >= 0", &RunConfig::beta0));
  keys.push_back(number_key("eta", "signal EMA decay, (0, 1]", &RunConfig::eta));
  keys.push_back(number_key("t0", "initiation period before the P&L window", &RunConfig::t0));
  keys.push_back(number_key("t", "P&L window length", &RunConfig::t));
  keys.push_back(number_key("theta", "transaction cost scale", &RunConfig::theta));
  keys.push_back(number_key("alpha", "transaction cost exponent", &RunConfig::alpha));
  keys.push_back({"kind", "P&L form: cumulative or incremental", false,
                  [](const RunConfig& c) {
                    return std::string(c.kind == PnlKind::Incremental ? "incremental" : "cumulative");
                  },
                  [](RunConfig& c, std::string_view v) {
                    if (v == "cumulative") c.kind = PnlKind::Cumulative;
                    else if (v == "incremental") c.kind = PnlKind::Incremental;
                    else bad_value("kind", v, "cumulative or incremental");
                  }});
  keys.push_back(bool_key("stationary", "stationary incremental P&L (t0 = 10/min(lambda, eta))",
                          &RunConfig::stationary));
  keys.push_back(string_key("input", "input CSV (date,price or date,return)", &RunConfig::input));
  keys.push_back(string_key("out", "output file or directory (default stdout)", &RunConfig::out));
  keys.push_back({"format", "output format: csv or json", false,
                  [](const RunConfig& c) {
                    return std::string(c.format == OutputFormat::Json ? "json" : "csv");
                  },
                  [](RunConfig& c, std::string_view v) {
                    if (v == "csv") c.format = OutputFormat::Csv;
                    else if (v == "json") c.format = OutputFormat::Json;
                    else bad_value("format", v, "csv or json");
                  }});
  keys.push_back(number_key("threads", "OpenMP threads (0: environment default)", &RunConfig::threads));
  keys.push_back(number_key("sigmas", "density grid half-width in standard deviations", &RunConfig::sigmas));
  keys.push_back(number_key("points-per-sigma", "density grid resolution", &RunConfig::points_per_sigma));
  keys.push_back(number_key("tail-fit-level", "tail region: pdf below this fraction of the peak",
                            &RunConfig::tail_fit_level));
  keys.push_back(number_key("density-points", "rows of the emitted density table", &RunConfig::density_points));
  keys.push_back(number_key("max-size", "largest matrix dimension t0 + t", &RunConfig::max_size));
  keys.push_back(number_key("vol-span", "volatility EMA span for price input", &RunConfig::vol_span));
  keys.push_back(number_key("lag-min", "first lag of the variogram fit", &RunConfig::lag_min));
  keys.push_back(number_key("lag-max", "last lag of the variogram (fit and table)", &RunConfig::lag_max));
  keys.push_back(number_key("weight-exponent", "fit weights lag^-w (0: unweighted)",
                            &RunConfig::weight_exponent));
  keys.push_back(number_key("eta-min", "eta sweep lower end", &RunConfig::eta_min));
  keys.push_back(number_key("eta-max", "eta sweep upper end", &RunConfig::eta_max));
  keys.push_back(number_key("eta-points", "eta sweep points (log-spaced)", &RunConfig::eta_points));
  keys.push_back(number_key("seed", "random seed", &RunConfig::seed));
  keys.push_back(number_key("paths", "number of simulated paths", &RunConfig::paths));
  keys.push_back(bool_key("antithetic", "pair each path with its negated innovations", &RunConfig::antithetic));
  keys.push_back(number_key("k", "pass threshold in standard errors", &RunConfig::k_threshold));
  keys.push_back(number_key("dump-paths", "write the returns of the first N paths", &RunConfig::dump_paths));
  return keys;
}

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

const std::vector<ConfigKey>& config_keys() {
  static const std::vector<ConfigKey> keys = make_keys();
  return keys;
}

RunConfig parse_run_config(std::string_view text, RunConfig base) {
  long number = 0;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++number;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos)
      detail::fail(ErrorCode::malformed_input,
                   "config line " + std::to_string(number) + ": expected key = value");
    const auto key = trim(line.substr(0, eq));
    const auto value = trim(line.substr(eq + 1));
    if (key == "command") {
      base.command = std::string(value);
      continue;
    }
    bool found = false;
    for (const auto& k : config_keys()) {
      if (k.name == key) {
        k.set(base, value);
        found = true;
        break;
      }
    }
    if (!found)
      detail::fail(ErrorCode::malformed_input, "config line " + std::to_string(number) +
                                                   ": unknown key '" + std::string(key) + "'");
  }
  return base;
}

std::string render_run_config(const RunConfig& config) {
  std::ostringstream out;
  out << "command = " << config.command << '\n';
  for (const auto& k : config_keys()) out << k.name << " = " << k.get(config) << '\n';
  return out.str();
}

}  // namespace trendfollow
