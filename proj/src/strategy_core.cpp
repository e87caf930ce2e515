#include "trendfollow/strategy_core.hpp"

#include <cmath>

#include "trendfollow/error.hpp"

namespace trendfollow {

using detail::require;

double gamma_of(double eta) {
  require(eta > 0.0 && eta <= 1.0, ErrorCode::invalid_parameter, "eta must lie in (0, 1]");
  return std::sqrt(eta * (2.0 - eta));
}

double StrategySpec::gamma() const { return gamma_of(eta); }

void StrategySpec::validate() const {
  require(eta > 0.0 && eta <= 1.0, ErrorCode::invalid_parameter, "eta must lie in (0, 1]");
  require(t0 >= 0, ErrorCode::invalid_parameter, "t0 must be >= 0");
  require(horizon >= 1, ErrorCode::invalid_parameter, "horizon t must be >= 1");
  require(theta >= 0.0 && std::isfinite(theta), ErrorCode::invalid_parameter,
          "theta must be finite and >= 0");
  require(alpha > 0.0 && std::isfinite(alpha), ErrorCode::invalid_parameter, "alpha must be > 0");
}

double PnlQuadForm::evaluate(std::span<const double> returns) const {
  require(static_cast<Eigen::Index>(returns.size()) == size(), ErrorCode::size_mismatch,
          "return vector length differs from the quadratic form size");
  const Eigen::Map<const Eigen::VectorXd> r(returns.data(), size());
  return 0.5 * r.dot(m_ * r);
}

std::vector<double> signal_series(std::span<const double> returns, double eta) {
  const double g = gamma_of(eta);
  const double p = 1.0 - eta;
  std::vector<double> s(returns.size(), 0.0);
  double ema = 0.0;
  for (std::size_t t = 0; t < returns.size(); ++t) {
    s[t] = g * ema;
    ema = p * ema + returns[t];
  }
  return s;
}

PnlQuadForm build_pnl_matrix(const StrategySpec& spec, PnlKind kind) {
  spec.validate();
  const long size = spec.total();
  const double g = spec.gamma();
  const double p = spec.signal_decay();
  // Window rows (0-based) whose P&L term r_j s_j enters the sum.
  const long first = kind == PnlKind::Cumulative ? spec.t0 : size - 1;

  Eigen::VectorXd pw(size);
  pw(0) = 1.0;
  for (long i = 1; i < size; ++i) pw(i) = pw(i - 1) * p;

  // M = gamma (O E + E^T O): row j of E restricted to the window, mirrored.
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(size, size);
  for (long j = first; j < size; ++j) {
    for (long k = 0; k < j; ++k) {
      const double v = g * pw(j - k - 1);
      m(j, k) += v;
      m(k, j) += v;
    }
  }
  return PnlQuadForm(std::move(m), spec.t0, spec.horizon, kind);
}

PnlSeries pnl_from_path(std::span<const double> returns, const StrategySpec& spec) {
  spec.validate();
  require(static_cast<long>(returns.size()) >= spec.total(), ErrorCode::size_mismatch,
          "return path shorter than t0 + t");
  const auto s = signal_series(returns, spec.eta);
  PnlSeries out;
  out.incremental.reserve(spec.horizon);
  out.cumulative.reserve(spec.horizon);
  double acc = 0.0;
  for (long k = spec.t0; k < spec.total(); ++k) {
    const double inc = returns[k] * s[k];
    acc += inc;
    out.incremental.push_back(inc);
    out.cumulative.push_back(acc);
  }
  return out;
}

}  // namespace trendfollow
