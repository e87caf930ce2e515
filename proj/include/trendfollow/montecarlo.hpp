#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <span>
#include <vector>

#include "trendfollow/market_model.hpp"
#include "trendfollow/strategy_core.hpp"

namespace trendfollow {

enum class Execution { Serial, Parallel };

struct SimulationConfig {
  MarketSpec market;
  StrategySpec strategy;
  long n_paths = 100000;
  long path_length = 0;  ///< 0 means t0 + t
  std::uint64_t seed = 1;
  bool antithetic = false;  ///< odd paths reuse the previous path's innovations negated
  /// Draw the initial (trend, EMA) state from its stationary law instead of starting at zero.
  bool stationary_start = false;
  Execution execution = Execution::Parallel;

  long length() const { return path_length > 0 ? path_length : strategy.total(); }
  void validate() const;
};

/// Returns of paths [first_path, first_path + count), one column per path.
Eigen::MatrixXd simulate_market(const SimulationConfig& config, long first_path, long count);

/// Per-path strategy outputs, indexed by path.
struct PathOutcomes {
  std::vector<double> cumulative;     ///< P&L summed over the window
  std::vector<double> incremental;    ///< r s at t~
  std::vector<double> signal_change;  ///< s_t~ - s_(t~-1)
};

PathOutcomes simulate_strategy_serial(const SimulationConfig& config);
PathOutcomes simulate_strategy_parallel(const SimulationConfig& config);
/// Dispatches on config.execution; both produce bit-identical outcomes.
PathOutcomes simulate_strategy(const SimulationConfig& config);

struct Estimate {
  double value = 0.0;
  double std_error = 0.0;  ///< NaN when not available (n = 1)
};

struct QuantileEstimate {
  double q = 0.0;
  double value = 0.0;
  double std_error = 0.0;
};

struct EmpiricalStats {
  long n = 0;
  Estimate mean;
  Estimate variance;
  Estimate skewness;
  Estimate kurtosis;  ///< excess, kappa4 / kappa2^2
  std::vector<QuantileEstimate> quantiles;
  std::vector<double> bin_edges;  ///< bins + 1 edges
  std::vector<long> counts;
};

struct StatsOptions {
  std::vector<double> quantile_levels{0.01, 0.05, 0.25, 0.5, 0.75, 0.95, 0.99};
  int bins = 100;
  int jackknife_groups = 100;
  int bootstrap_resamples = 100;
  std::uint64_t bootstrap_seed = 0x5eed;
};

/// Mean s.e. sd/sqrt(n); variance, skewness, kurtosis s.e. by grouped jackknife;
/// quantile s.e. by bootstrap.
EmpiricalStats summarize(std::span<const double> sample, const StatsOptions& options = {});

struct PnlStats {
  EmpiricalStats cumulative;
  EmpiricalStats incremental;
};

PnlStats estimate_pnl_stats(const SimulationConfig& config, const StatsOptions& options = {});
/// theta |s_t~ - s_(t~-1)|^alpha.
EmpiricalStats estimate_turnover(const SimulationConfig& config, const StatsOptions& options = {});
std::vector<double> turnover_sample(const PathOutcomes& outcomes, const StrategySpec& strategy);

/// Stationary covariance of the state (m, e): trend variable and unscaled EMA of returns.
Eigen::Matrix2d stationary_state_covariance(const MarketSpec& market, double eta);

enum class StationaryMethod {
  BurnIn,     ///< zero start, t0 = ceil(10 / min(lambda, eta))
  ExactStart  ///< stationary initial state, t0 = 1
};

/// Horizon 1: one stationary draw of the incremental P&L and signal change per path.
SimulationConfig stationary_config(const MarketSpec& market, const StrategySpec& strategy,
                                   long n_paths, std::uint64_t seed,
                                   StationaryMethod method = StationaryMethod::ExactStart);

}  // namespace trendfollow
