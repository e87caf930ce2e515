#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace trendfollow {

inline constexpr double kVolatilityFloor = 1e-8;

/// Standardized returns; the first `warmup` values are not used by fits.
struct ReturnSeries {
  std::vector<std::string> timestamps;  ///< one per value (may be empty)
  std::vector<double> values;
  std::size_t warmup = 0;

  std::span<const double> usable() const {
    return std::span<const double>(values).subspan(std::min(warmup, values.size()));
  }
};

/// Log returns divided by a causal volatility estimate: the normalized exponentially weighted
/// mean of the previous vol_span squared returns (decay 1 - 1/vol_span).
/// timestamps, if given, align with prices; output timestamps drop the first one.
ReturnSeries standardize_returns(std::span<const double> prices, std::size_t vol_span = 100,
                                 std::span<const std::string> timestamps = {});

struct EmpiricalVariogram {
  std::vector<long> lags;
  std::vector<double> ratio;
  std::vector<double> std_error;  ///< V sqrt(2 / n_eff), n_eff = (n - t + 1) / t
};

/// Var(sum of t consecutive returns) / (t Var(r)) over overlapping windows, t = 1..t_max,
/// skipping the first t0 values.
EmpiricalVariogram empirical_variogram(std::span<const double> returns, long t_max, long t0 = 0);

struct LagRange {
  long first = 5;
  long last = 500;
};

struct FitOptions {
  LagRange lags;
  double weight_exponent = 0.0;  ///< weights t^-w; 0 is unweighted least squares
  double lambda_min = 1e-4;
  double lambda_max = 1.0;
  double beta0_max = 10.0;
  int grid_points = 48;  ///< log-spaced lambda starts
};

struct VariogramFit {
  double lambda_hat = 0.0;
  double beta0_hat = 0.0;
  LagRange lag_range;
  std::size_t points = 0;
  double residual = 0.0;  ///< root mean square of V_emp - V_fit
  /// Covariance of (lambda_hat, beta0_hat) from sigma^2 (J^T W J)^-1; lambda entries infinite
  /// when lambda is not identified.
  Eigen::Matrix2d covariance = Eigen::Matrix2d::Zero();
  bool lambda_unidentified = false;
};

VariogramFit fit_variogram(const EmpiricalVariogram& empirical, const FitOptions& options = {});

}  // namespace trendfollow
