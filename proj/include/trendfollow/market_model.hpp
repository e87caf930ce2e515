#pragma once

#include <Eigen/Dense>

#include <cstddef>

namespace trendfollow {

inline constexpr std::size_t kDefaultMaxMatrixSize = 2000;

/// Strictly lower triangular EMA kernel, entry (j,k) = q^(j-k-1) for j > k.
class EmaMatrix {
 public:
  EmaMatrix(double q, Eigen::MatrixXd m) : q_(q), m_(std::move(m)) {}

  double decay() const noexcept { return q_; }
  Eigen::Index size() const noexcept { return m_.rows(); }
  const Eigen::MatrixXd& matrix() const noexcept { return m_; }

 private:
  double q_;
  Eigen::MatrixXd m_;
};

enum class MarketKind { StochasticTrend, AutoregressiveTrend };

struct MarketSpec {
  MarketKind kind = MarketKind::StochasticTrend;
  double lambda = 0.01;  ///< per-step trend decay, (0, 1]
  double beta0 = 0.1;    ///< asymptotic excess volatility, >= 0

  double beta() const;  ///< beta0 * sqrt(lambda (2 - lambda))
  double trend_decay() const { return 1.0 - lambda; }
  /// Effective decay of the autoregressive model, 1 - lambda + beta.
  double feedback_decay() const { return 1.0 - lambda + beta(); }
  void validate() const;

  bool operator==(const MarketSpec&) const = default;
};

/// Dense symmetric return covariance <r_j r_k>.
class CovarianceMatrix {
 public:
  explicit CovarianceMatrix(Eigen::MatrixXd c) : c_(std::move(c)) {}

  Eigen::Index size() const noexcept { return c_.rows(); }
  const Eigen::MatrixXd& matrix() const noexcept { return c_; }
  bool is_identity() const;

 private:
  Eigen::MatrixXd c_;
};

EmaMatrix build_ema_matrix(double q, Eigen::Index size);

CovarianceMatrix covariance_stochastic(const MarketSpec& spec, Eigen::Index size,
                                       std::size_t max_size = kDefaultMaxMatrixSize);
CovarianceMatrix covariance_autoregressive(const MarketSpec& spec, Eigen::Index size,
                                           std::size_t max_size = kDefaultMaxMatrixSize);
/// Dispatches on spec.kind.
CovarianceMatrix covariance(const MarketSpec& spec, Eigen::Index size,
                            std::size_t max_size = kDefaultMaxMatrixSize);

/// Stationary variogram of returns at lag t (stochastic-trend model).
double variogram_returns_stationary(const MarketSpec& spec, long t);
/// Its t -> infinity limit.
double variogram_returns_limit(const MarketSpec& spec);

}  // namespace trendfollow
