#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "trendfollow/market_model.hpp"
#include "trendfollow/strategy_core.hpp"
#include "trendfollow/table.hpp"

namespace trendfollow {

/// Every setting of a CLI run. Keys of the flat config file equal the long flag names.
struct RunConfig {
  std::string command = "report";

  MarketKind model = MarketKind::StochasticTrend;
  double lambda = 0.01;
  double beta0 = 0.1;
  double eta = 0.01;
  long t0 = 200;
  long t = 300;
  double theta = 0.0;
  double alpha = 1.0;

  PnlKind kind = PnlKind::Cumulative;
  bool stationary = false;  ///< incremental P&L at t0 = ceil(10 / min(lambda, eta))
  std::string input;
  std::string out;
  OutputFormat format = OutputFormat::Csv;
  int threads = 0;  ///< 0: TRENDFOLLOW_THREADS or the OpenMP default

  // distribution / eigen
  double sigmas = 12.0;
  double points_per_sigma = 1000.0;
  double tail_fit_level = 1e-4;
  long density_points = 2001;
  long max_size = 2000;

  // calibrate / variogram
  long vol_span = 100;
  long lag_min = 5;
  long lag_max = 500;
  double weight_exponent = 0.0;

  // report
  double eta_min = 1e-3;
  double eta_max = 0.1;
  long eta_points = 200;

  // simulate
  std::uint64_t seed = 1;
  long paths = 100000;
  bool antithetic = false;
  double k_threshold = 4.0;
  long dump_paths = 0;

  MarketSpec market() const;
  StrategySpec strategy() const;

  bool operator==(const RunConfig&) const = default;
};

struct ConfigKey {
  std::string name;
  std::string help;
  bool is_flag = false;  ///< boolean switch on the command line
  std::function<std::string(const RunConfig&)> get;
  std::function<void(RunConfig&, std::string_view)> set;  ///< throws malformed_input
};

const std::vector<ConfigKey>& config_keys();

/// Flat `key = value` lines; `#` starts a comment; unknown keys are errors.
RunConfig parse_run_config(std::string_view text, RunConfig base = {});
std::string render_run_config(const RunConfig& config);

}  // namespace trendfollow
