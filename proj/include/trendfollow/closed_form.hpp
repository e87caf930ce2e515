#pragma once

#include <optional>

#include "trendfollow/market_model.hpp"
#include "trendfollow/strategy_core.hpp"

namespace trendfollow {

/// Formulas with (p - q) denominators switch to the eta = lambda forms below this gap.
inline constexpr double kDegenerateGap = 1e-9;
inline constexpr double kAnnualization = 15.968719422671311;  // sqrt(255)

// Moments of the incremental P&L at step t~ (1-based) for the stochastic-trend model.
// The autoregressive model is rejected with model_unsupported; use the *_numeric variants.
double mean_incremental_pnl(const MarketSpec& market, const StrategySpec& strat, long t_tilde);
double mean_stationary_pnl(const MarketSpec& market, const StrategySpec& strat);
double variance_incremental_pnl(const MarketSpec& market, const StrategySpec& strat, long t_tilde);
double variance_stationary_pnl(const MarketSpec& market, const StrategySpec& strat);

/// 1/2 tr(M C) for the incremental form at t~; any market model.
double mean_incremental_pnl_numeric(const MarketSpec& market, const StrategySpec& strat,
                                    long t_tilde);
/// gamma^2 [C_tt (A C A^T)_tt + ((A C)_tt)^2] with A = E_{1-eta}; any market model.
double variance_incremental_pnl_numeric(const MarketSpec& market, const StrategySpec& strat,
                                        long t_tilde);

/// Mean turnover theta E|s_t - s_{t-1}|^alpha at absolute step t >= 2.
double mean_turnover(const MarketSpec& market, const StrategySpec& strat, long t);
double mean_turnover_stationary(const MarketSpec& market, const StrategySpec& strat);
/// Small eta, lambda and beta0 form: theta Gamma((1+alpha)/2) 2^alpha / sqrt(pi) eta^(alpha/2).
double mean_turnover_small_eta(const StrategySpec& strat);
/// Variance of s_t - s_{t-1} from the covariance matrix; any market model.
double signal_increment_variance_numeric(const MarketSpec& market, double eta, long t);

/// Stationary variogram of the incremental P&L at lag t.
double pnl_variogram_stationary(const MarketSpec& market, const StrategySpec& strat, long t);
/// Its t -> infinity value, exact.
double pnl_variogram_limit(const MarketSpec& market, const StrategySpec& strat);
/// Small-parameter asymptote of the limit at eta = lambda: 1 + 2c + c^2/(2(1+c)), c = beta0^2/lambda.
double pnl_variogram_limit_small(const MarketSpec& market);

/// (mean - turnover) / sqrt(variance) in the stationary limit, with the signal decay set to eta.
double net_risk_adjusted_pnl(const MarketSpec& market, const StrategySpec& strat, double eta,
                             bool annualize);
/// Small-parameter form for alpha = 1.
double net_risk_adjusted_pnl_approx(const MarketSpec& market, double theta, double eta,
                                    bool annualize);

/// Maximizer of the approximate net risk-adjusted P&L (alpha = 1).
/// Throws no_profitable_eta when beta0^2/lambda <= theta sqrt(2/pi).
double optimal_eta(const MarketSpec& market, double theta);

/// Largest cost theta for which the approximate net P&L stays positive.
double max_cost_bound(const MarketSpec& market, double eta);

struct EigenLimits {
  double mu_plus = 0.0;
  double mu_minus = 0.0;
};

/// Extreme eigenvalues of the cumulative form for t0, t -> infinity and C = I.
EigenLimits eigen_asymptotics_long(double eta);
EigenLimits eigen_asymptotics_long_small_eta(double eta);
/// Conjectured short-horizon extremes, +-sqrt(t) + (t-1) sqrt(eta/2).
EigenLimits eigen_asymptotics_short(double eta, long t);
/// Eigenvalue of the near-cyclic limit at index omega in [0, 1]; increasing, 2 gamma/eta at omega = 1.
double cyclic_spectrum_limit(double eta, double omega);

struct AnalyticsReport {
  bool numeric_fallback = false;  ///< autoregressive model: trace/matrix values, no stationary forms
  double mean_incremental = 0.0;  ///< at t~ = t0 + t
  double mean_stationary = 0.0;
  double variance_incremental = 0.0;
  double variance_stationary = 0.0;
  double turnover_mean = 0.0;  ///< at t~
  double turnover_stationary = 0.0;
  double turnover_small_eta = 0.0;
  double pnl_variogram = 0.0;  ///< at lag t
  double pnl_variogram_limit = 0.0;
  double net_risk_adjusted = 0.0;  ///< annualized, at the strategy eta
  std::optional<double> eta_opt;   ///< empty when no eta is profitable or alpha != 1
  double theta_max = 0.0;
  double mu_plus_inf = 0.0;
  double mu_minus_inf = 0.0;
};

AnalyticsReport analytics_report(const MarketSpec& market, const StrategySpec& strat);

}  // namespace trendfollow
