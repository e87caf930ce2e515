#include "trendfollow/market_model.hpp"

#include <cmath>
#include <string>

#include "trendfollow/error.hpp"

namespace trendfollow {

using detail::require;

double MarketSpec::beta() const { return beta0 * std::sqrt(lambda * (2.0 - lambda)); }

void MarketSpec::validate() const {
  require(lambda > 0.0 && lambda <= 1.0, ErrorCode::invalid_parameter, "lambda must lie in (0, 1]");
  require(beta0 >= 0.0 && std::isfinite(beta0), ErrorCode::invalid_parameter,
          "beta0 must be finite and >= 0");
  if (kind == MarketKind::AutoregressiveTrend)
    require(feedback_decay() < 1.0, ErrorCode::invalid_parameter,
            "autoregressive model needs beta < lambda (effective decay 1 - lambda + beta < 1)");
}

bool CovarianceMatrix::is_identity() const {
  return c_.isIdentity(0.0);
}

EmaMatrix build_ema_matrix(double q, Eigen::Index size) {
  require(q >= 0.0 && q < 1.0, ErrorCode::invalid_parameter, "EMA decay must lie in [0, 1)");
  require(size >= 1, ErrorCode::invalid_parameter, "matrix size must be >= 1");
  // Powers along each subdiagonal; q^0 = 1 even for q = 0.
  Eigen::VectorXd pw(size);
  pw(0) = 1.0;
  for (Eigen::Index i = 1; i < size; ++i) pw(i) = pw(i - 1) * q;
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(size, size);
  for (Eigen::Index k = 0; k < size; ++k)
    for (Eigen::Index j = k + 1; j < size; ++j) m(j, k) = pw(j - k - 1);
  return EmaMatrix(q, std::move(m));
}

namespace {

void check_size(Eigen::Index size, std::size_t max_size) {
  require(size >= 1, ErrorCode::invalid_parameter, "matrix size must be >= 1");
  if (static_cast<std::size_t>(size) > max_size)
    detail::fail(ErrorCode::invalid_parameter,
                 "matrix size " + std::to_string(size) + " exceeds the configured cap " +
                     std::to_string(max_size));
}

}  // namespace

CovarianceMatrix covariance_stochastic(const MarketSpec& spec, Eigen::Index size,
                                       std::size_t max_size) {
  require(spec.kind == MarketKind::StochasticTrend, ErrorCode::model_unsupported,
          "covariance_stochastic needs the stochastic-trend model");
  spec.validate();
  check_size(size, max_size);
  const double q = spec.trend_decay();
  const double b2 = spec.beta0 * spec.beta0;
  Eigen::VectorXd pw(2 * size);
  pw(0) = 1.0;
  for (Eigen::Index i = 1; i < 2 * size; ++i) pw(i) = pw(i - 1) * q;

  Eigen::MatrixXd c(size, size);
#pragma omp parallel for schedule(static) if (size > 256)
  for (Eigen::Index j = 0; j < size; ++j) {
    for (Eigen::Index k = 0; k <= j; ++k) {
      // 0-based indices: (1-lambda)^(j+k-2) with 1-based j,k becomes pw(j+k).
      const double v = (j == k ? 1.0 : 0.0) + b2 * (pw(j - k) - pw(j + k));
      c(j, k) = v;
      c(k, j) = v;
    }
  }
  return CovarianceMatrix(std::move(c));
}

CovarianceMatrix covariance_autoregressive(const MarketSpec& spec, Eigen::Index size,
                                           std::size_t max_size) {
  require(spec.kind == MarketKind::AutoregressiveTrend, ErrorCode::model_unsupported,
          "covariance_autoregressive needs the autoregressive model");
  spec.validate();
  check_size(size, max_size);
  Eigen::MatrixXd g = spec.beta() * build_ema_matrix(spec.feedback_decay(), size).matrix();
  g.diagonal().array() += 1.0;
  Eigen::MatrixXd c = g * g.transpose();
  // Exact symmetry regardless of the GEMM blocking.
  c = 0.5 * (c + c.transpose()).eval();
  return CovarianceMatrix(std::move(c));
}

CovarianceMatrix covariance(const MarketSpec& spec, Eigen::Index size, std::size_t max_size) {
  return spec.kind == MarketKind::StochasticTrend ? covariance_stochastic(spec, size, max_size)
                                                  : covariance_autoregressive(spec, size, max_size);
}

double variogram_returns_stationary(const MarketSpec& spec, long t) {
  require(spec.kind == MarketKind::StochasticTrend, ErrorCode::model_unsupported,
          "return variogram closed form needs the stochastic-trend model");
  spec.validate();
  require(t >= 1, ErrorCode::invalid_parameter, "lag must be >= 1");
  const double lam = spec.lambda;
  const double b2 = spec.beta0 * spec.beta0;
  const double amp = 2.0 * (1.0 - lam) * b2 / (lam * (1.0 + b2));
  // log1p keeps (1-lam)^t accurate for small lam.
  const double decayed = lam == 1.0 ? 0.0 : std::exp(static_cast<double>(t) * std::log1p(-lam));
  return 1.0 + amp * (1.0 - (1.0 - decayed) / (lam * static_cast<double>(t)));
}

double variogram_returns_limit(const MarketSpec& spec) {
  spec.validate();
  const double b2 = spec.beta0 * spec.beta0;
  return 1.0 + 2.0 * (1.0 - spec.lambda) * b2 / (spec.lambda * (1.0 + b2));
}

}  // namespace trendfollow
