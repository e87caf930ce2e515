#pragma once

#include <Eigen/Dense>

#include <span>
#include <vector>

namespace trendfollow {

struct StrategySpec {
  double eta = 0.01;   ///< signal decay, (0, 1]
  long t0 = 200;       ///< initiation period before the P&L window
  long horizon = 300;  ///< window length t
  double theta = 0.0;  ///< transaction cost scale
  double alpha = 1.0;  ///< transaction cost exponent

  double gamma() const;
  double signal_decay() const { return 1.0 - eta; }
  long total() const { return t0 + horizon; }  ///< t~ = t0 + t
  void validate() const;

  bool operator==(const StrategySpec&) const = default;
};

enum class PnlKind { Cumulative, Incremental };

/// Symmetric matrix M with P&L = 1/2 r^T M r over the window (t0, t).
class PnlQuadForm {
 public:
  PnlQuadForm(Eigen::MatrixXd m, long t0, long horizon, PnlKind kind)
      : m_(std::move(m)), t0_(t0), horizon_(horizon), kind_(kind) {}

  const Eigen::MatrixXd& matrix() const noexcept { return m_; }
  Eigen::Index size() const noexcept { return m_.rows(); }
  long t0() const noexcept { return t0_; }
  long horizon() const noexcept { return horizon_; }
  PnlKind kind() const noexcept { return kind_; }

  /// 1/2 r^T M r.
  double evaluate(std::span<const double> returns) const;

 private:
  Eigen::MatrixXd m_;
  long t0_;
  long horizon_;
  PnlKind kind_;
};

/// sqrt(eta (2 - eta)); unit stationary variance of the incremental P&L for iid returns.
double gamma_of(double eta);

/// s_t = gamma * sum_{k<t} (1-eta)^(t-1-k) r_k, s_1 = 0.
std::vector<double> signal_series(std::span<const double> returns, double eta);

PnlQuadForm build_pnl_matrix(const StrategySpec& spec, PnlKind kind);

struct PnlSeries {
  std::vector<double> cumulative;   ///< running sum over the window
  std::vector<double> incremental;  ///< r_k s_k for k in the window
};

PnlSeries pnl_from_path(std::span<const double> returns, const StrategySpec& spec);

}  // namespace trendfollow
