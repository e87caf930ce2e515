#include "trendfollow/closed_form.hpp"

#include <cmath>
#include <numbers>

#include "trendfollow/error.hpp"

namespace trendfollow {

using detail::require;

namespace {

double ipow(double x, long n) { return std::pow(x, static_cast<double>(n)); }

void require_stochastic(const MarketSpec& market) {
  market.validate();
  if (market.kind != MarketKind::StochasticTrend)
    detail::fail(ErrorCode::model_unsupported,
                 "closed forms exist only for the stochastic-trend model");
}

bool degenerate(double p, double q) { return std::abs(p - q) < kDegenerateGap; }

double cost_prefactor(double theta, double alpha) {
  return theta * std::tgamma(0.5 * (1.0 + alpha)) / std::sqrt(std::numbers::pi);
}

// Variance of s_t - s_{t-1} over gamma^2 at absolute step t.
double increment_variance(double p, double q, double b2, long t) {
  if (degenerate(p, q)) {
    const double w = (1.0 - q * q) * static_cast<double>(t - 2) - q;
    // q^(2t-4) [(1/q - q)(t-2) - 1]^2 written without 1/q.
    const double tail = t == 2 ? 1.0 : ipow(q, 2 * t - 6) * w * w;
    return (2.0 - (1.0 - q) * ipow(q, 2 * t - 4)) / (1.0 + q) +
           b2 / ((1.0 + q) * (1.0 + q)) * (2.0 - ipow(q, 2 * t - 4) - tail);
  }
  const double d = ipow(p, t - 1) - ipow(p, t - 2) - ipow(q, t - 1) + ipow(q, t - 2);
  return (2.0 - (1.0 - p) * ipow(p, 2 * t - 4)) / (1.0 + p) +
         b2 * (1.0 - q * q) / ((1.0 - p * q) * (p - q)) *
             (2.0 * (p - q) / ((1.0 + p) * (1.0 + q)) - (1.0 - p) * ipow(p, 2 * t - 3) / (1.0 + p) +
              (1.0 - q) * ipow(q, 2 * t - 3) / (1.0 + q) - d * d / (p - q));
}

double increment_variance_stationary(double p, double q, double b2) {
  return 2.0 / (1.0 + p) + 2.0 * b2 * (1.0 - q * q) / ((1.0 - p * q) * (1.0 + p) * (1.0 + q));
}

// Bracket of the stationary variance; v_inf = gamma^2 / (1 - p^2) times this.
double variance_bracket(double p, double q, double b2) {
  const double pq = p * q;
  return 1.0 + 2.0 * b2 / (1.0 - pq) + b2 * b2 * (1.0 + q * q - 2.0 * pq * pq) / ((1.0 - pq) * (1.0 - pq));
}

struct VariogramTerms {
  double slope;  // coefficient of t in the numerator
  double value;  // numerator at t (t < 0 means t -> infinity, value unused)
};

VariogramTerms variogram_numerator(double p, double q, double b2, long t) {
  const double b4 = b2 * b2;
  const double tt = static_cast<double>(t);
  const double q2 = q * q;
  if (degenerate(p, q)) {
    const double r = 1.0 - q2;
    const double slope = 1.0 + 2.0 * b2 * (1.0 + 2.0 * q2) / r + b4 * (1.0 + 7.0 * q2 + 2.0 * q2 * q2) / (r * r);
    if (t < 0) return {slope, 0.0};
    const double q2t = ipow(q, 2 * t);
    const double value = slope * tt -
                         4.0 * b2 * q2 / (r * r) * (1.0 + b2 * (2.0 * q2 + 1.5) / r) * (1.0 - q2t) +
                         4.0 * b4 * q2 / (r * r) * q2t * tt;
    return {slope, value};
  }
  const double pq = p * q;
  const double u = 1.0 - pq;
  const double c2 = (2.0 * p * p * p * ipow(q, 5) + 2.0 * p * p * p * q * q2 - 6.0 * pq * pq +
                     2.0 * q2 * q2 * p * p - 4.0 * q * q2 * p - ipow(q, 5) * p + pq + 1.0 - q2 * q2 +
                     4.0 * q2) /
                    ((1.0 - q2) * u * u * u);
  const double slope = 1.0 + 2.0 * b2 * (1.0 + q2 - 2.0 * pq * pq) / (u * u) + b4 * c2;
  if (t < 0) return {slope, 0.0};
  const double value =
      slope * tt -
      2.0 * b2 * q * (p + q - 2.0 * p * pq) / (u * u * u) *
          (1.0 + b2 * p * (1.0 - q2) / (u * (p - q))) * (1.0 - ipow(pq, t)) +
      4.0 * b4 * q * q2 * (1.0 - p * p) / (u * (p - q) * (1.0 - q2) * (1.0 - q2)) *
          (1.0 - ipow(q, 2 * t));
  return {slope, value};
}

// Row t~ (0-based index i) of E_p: a_k = p^(i-k-1), k < i.
Eigen::VectorXd ema_row(double p, Eigen::Index i, Eigen::Index size) {
  Eigen::VectorXd a = Eigen::VectorXd::Zero(size);
  double w = 1.0;
  for (Eigen::Index k = i - 1; k >= 0; --k) {
    a(k) = w;
    w *= p;
  }
  return a;
}

}  // namespace

double mean_incremental_pnl(const MarketSpec& market, const StrategySpec& strat, long t_tilde) {
  require_stochastic(market);
  strat.validate();
  require(t_tilde >= 1, ErrorCode::invalid_parameter, "t~ must be >= 1");
  const double p = strat.signal_decay();
  const double q = market.trend_decay();
  const double b2 = market.beta0 * market.beta0;
  const long n = t_tilde - 1;
  if (degenerate(p, q)) {
    if (n == 0) return 0.0;
    return strat.gamma() * b2 *
           (q * (1.0 - ipow(q, 2 * n)) / (1.0 - q * q) - static_cast<double>(n) * ipow(q, 2 * t_tilde - 3));
  }
  return strat.gamma() * b2 *
         (q * (1.0 - ipow(p * q, n)) / (1.0 - p * q) - ipow(q, n) * (ipow(p, n) - ipow(q, n)) / (p - q));
}

double mean_stationary_pnl(const MarketSpec& market, const StrategySpec& strat) {
  require_stochastic(market);
  strat.validate();
  const double p = strat.signal_decay();
  const double q = market.trend_decay();
  return strat.gamma() * market.beta0 * market.beta0 * q / (1.0 - p * q);
}

double variance_incremental_pnl(const MarketSpec& market, const StrategySpec& strat, long t_tilde) {
  require_stochastic(market);
  strat.validate();
  require(t_tilde >= 1, ErrorCode::invalid_parameter, "t~ must be >= 1");
  const double p = strat.signal_decay();
  const double q = market.trend_decay();
  const double b2 = market.beta0 * market.beta0;
  const double g2 = strat.eta * (2.0 - strat.eta);
  const long n = t_tilde - 1;
  const double q2n = ipow(q, 2 * n);
  const double q2 = q * q;
  if (degenerate(p, q)) {
    const double r = 1.0 - q2;
    // q^(2n) [1 + n (q^-2 - 1)] = q^(2n-2) [q^2 + n (1 - q^2)]
    const double lin = n == 0 ? 1.0 : ipow(q, 2 * n - 2) * (q2 + static_cast<double>(n) * r);
    const double sq = n == 0 ? q2 : lin * (q2 + static_cast<double>(n) * r);
    return g2 / r *
           ((1.0 + b2 * (1.0 - q2n)) * ((1.0 - q2n) + b2 / r * (1.0 + q2 - q2n - sq)) +
            b2 * b2 * q2 / r * (1.0 - lin) * (1.0 - lin));
  }
  const double p2n = ipow(p, 2 * n);
  const double pq = p * q;
  const double dn = ipow(p, n) - ipow(q, n);
  const double a = (1.0 + b2 * (1.0 - q2n)) *
                   ((1.0 - p2n) / (1.0 - p * p) +
                    b2 * (1.0 - q2) / ((1.0 - pq) * (p - q)) *
                        (p * (1.0 - p2n) / (1.0 - p * p) - q * (1.0 - q2n) / (1.0 - q2) - dn * dn / (p - q)));
  const double inner = (1.0 - ipow(pq, n)) / (1.0 - pq) - (1.0 - q2n) / (1.0 - q2);
  const double b = b2 * b2 * (1.0 - q2) * (1.0 - q2) / ((p - q) * (p - q)) * inner * inner;
  return g2 * (a + b);
}

double variance_stationary_pnl(const MarketSpec& market, const StrategySpec& strat) {
  require_stochastic(market);
  strat.validate();
  const double p = strat.signal_decay();
  const double q = market.trend_decay();
  const double g2 = strat.eta * (2.0 - strat.eta);
  const double b2 = market.beta0 * market.beta0;
  // gamma^2 / (1 - p^2) is 1 except for roundoff; kept explicit.
  return g2 / (1.0 - p * p) * variance_bracket(p, q, b2);
}

double mean_incremental_pnl_numeric(const MarketSpec& market, const StrategySpec& strat,
                                    long t_tilde) {
  strat.validate();
  require(t_tilde >= 1, ErrorCode::invalid_parameter, "t~ must be >= 1");
  const Eigen::Index size = t_tilde;
  const auto cov = covariance(market, size);
  const Eigen::Index i = size - 1;
  const Eigen::VectorXd a = ema_row(strat.signal_decay(), i, size);
  return strat.gamma() * a.dot(cov.matrix().col(i));
}

double variance_incremental_pnl_numeric(const MarketSpec& market, const StrategySpec& strat,
                                        long t_tilde) {
  strat.validate();
  require(t_tilde >= 1, ErrorCode::invalid_parameter, "t~ must be >= 1");
  const Eigen::Index size = t_tilde;
  const auto cov = covariance(market, size);
  const Eigen::MatrixXd& c = cov.matrix();
  const Eigen::Index i = size - 1;
  const Eigen::VectorXd a = ema_row(strat.signal_decay(), i, size);
  const double ac = a.dot(c.col(i));
  const double aca = a.dot(c * a);
  const double g2 = strat.eta * (2.0 - strat.eta);
  return g2 * (c(i, i) * aca + ac * ac);
}

double mean_turnover(const MarketSpec& market, const StrategySpec& strat, long t) {
  require_stochastic(market);
  strat.validate();
  require(t >= 2, ErrorCode::invalid_parameter, "turnover needs t >= 2");
  const double g2 = strat.eta * (2.0 - strat.eta);
  const double x = increment_variance(strat.signal_decay(), market.trend_decay(),
                                      market.beta0 * market.beta0, t);
  return cost_prefactor(strat.theta, strat.alpha) * std::pow(2.0 * g2 * x, 0.5 * strat.alpha);
}

double mean_turnover_stationary(const MarketSpec& market, const StrategySpec& strat) {
  require_stochastic(market);
  strat.validate();
  const double g2 = strat.eta * (2.0 - strat.eta);
  const double x = increment_variance_stationary(strat.signal_decay(), market.trend_decay(),
                                                 market.beta0 * market.beta0);
  return cost_prefactor(strat.theta, strat.alpha) * std::pow(2.0 * g2 * x, 0.5 * strat.alpha);
}

double mean_turnover_small_eta(const StrategySpec& strat) {
  strat.validate();
  return cost_prefactor(strat.theta, strat.alpha) * std::pow(2.0, strat.alpha) *
         std::pow(strat.eta, 0.5 * strat.alpha);
}

double signal_increment_variance_numeric(const MarketSpec& market, double eta, long t) {
  require(t >= 2, ErrorCode::invalid_parameter, "turnover needs t >= 2");
  const double g = gamma_of(eta);
  const Eigen::Index size = t;
  const auto cov = covariance(market, size);
  const Eigen::VectorXd d = ema_row(1.0 - eta, size - 1, size) - ema_row(1.0 - eta, size - 2, size);
  return g * g * d.dot(cov.matrix() * d);
}

double pnl_variogram_stationary(const MarketSpec& market, const StrategySpec& strat, long t) {
  require_stochastic(market);
  strat.validate();
  require(t >= 1, ErrorCode::invalid_parameter, "lag must be >= 1");
  const double p = strat.signal_decay();
  const double q = market.trend_decay();
  const double b2 = market.beta0 * market.beta0;
  return variogram_numerator(p, q, b2, t).value / (static_cast<double>(t) * variance_bracket(p, q, b2));
}

double pnl_variogram_limit(const MarketSpec& market, const StrategySpec& strat) {
  require_stochastic(market);
  strat.validate();
  const double p = strat.signal_decay();
  const double q = market.trend_decay();
  const double b2 = market.beta0 * market.beta0;
  return variogram_numerator(p, q, b2, -1).slope / variance_bracket(p, q, b2);
}

double pnl_variogram_limit_small(const MarketSpec& market) {
  require_stochastic(market);
  const double c = market.beta0 * market.beta0 / market.lambda;
  return 1.0 + 2.0 * c + c * c / (2.0 * (1.0 + c));
}

double net_risk_adjusted_pnl(const MarketSpec& market, const StrategySpec& strat, double eta,
                             bool annualize) {
  StrategySpec s = strat;
  s.eta = eta;
  const double value = (mean_stationary_pnl(market, s) - mean_turnover_stationary(market, s)) /
                       std::sqrt(variance_stationary_pnl(market, s));
  return annualize ? kAnnualization * value : value;
}

double net_risk_adjusted_pnl_approx(const MarketSpec& market, double theta, double eta,
                                    bool annualize) {
  require_stochastic(market);
  require(eta > 0.0 && eta <= 1.0, ErrorCode::invalid_parameter, "eta must lie in (0, 1]");
  require(theta >= 0.0, ErrorCode::invalid_parameter, "theta must be >= 0");
  const double b2 = market.beta0 * market.beta0;
  const double s = market.lambda + eta;
  const double value =
      (b2 * std::sqrt(2.0 * eta) - 2.0 / std::sqrt(std::numbers::pi) * theta * std::sqrt(eta) * s) /
      std::sqrt(s * s + 2.0 * b2 * s);
  return annualize ? kAnnualization * value : value;
}

double optimal_eta(const MarketSpec& market, double theta) {
  require_stochastic(market);
  require(theta >= 0.0 && std::isfinite(theta), ErrorCode::invalid_parameter,
          "theta must be finite and >= 0");
  const double lam = market.lambda;
  const double c = market.beta0 * market.beta0 / lam;
  if (theta == 0.0) return lam * std::sqrt(1.0 + 2.0 * c);

  const double tp = theta * std::sqrt(2.0 / std::numbers::pi);
  if (c <= tp)
    detail::fail(ErrorCode::no_profitable_eta,
                 "beta0^2/lambda <= theta sqrt(2/pi): net P&L is negative for every eta");
  const auto cubic = [&](double z) {
    return ((tp * z + (c + tp * (4.0 * c + 3.0))) * z + 3.0 * tp * (1.0 + 2.0 * c)) * z -
           (1.0 + 2.0 * c) * (c - tp);
  };
  // f(0) < 0 and one sign change in the coefficients: a single positive root.
  double lo = 0.0;
  double hi = 1.0;
  while (cubic(hi) <= 0.0) {
    lo = hi;
    hi *= 2.0;
    require(hi < 1e300, ErrorCode::fit_failure, "cubic root bracket diverged");
  }
  for (int it = 0; it < 200 && hi - lo > 1e-15 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    (cubic(mid) > 0.0 ? hi : lo) = mid;
  }
  return lam * 0.5 * (lo + hi);
}

double max_cost_bound(const MarketSpec& market, double eta) {
  require_stochastic(market);
  require(eta > 0.0 && eta <= 1.0, ErrorCode::invalid_parameter, "eta must lie in (0, 1]");
  return std::sqrt(std::numbers::pi / 2.0) * market.beta0 * market.beta0 / (market.lambda + eta);
}

EigenLimits eigen_asymptotics_long(double eta) {
  require(eta > 0.0 && eta < 1.0, ErrorCode::invalid_parameter,
          "eigenvalue limits need eta in (0, 1)");
  const double g = gamma_of(eta);
  const double p = 1.0 - eta;
  return {2.0 * g / eta, -g / (2.0 * p * (1.0 - p * p))};
}

EigenLimits eigen_asymptotics_long_small_eta(double eta) {
  require(eta > 0.0 && eta < 1.0, ErrorCode::invalid_parameter,
          "eigenvalue limits need eta in (0, 1)");
  return {std::sqrt(8.0 / eta), -1.0 / std::sqrt(8.0 * eta)};
}

EigenLimits eigen_asymptotics_short(double eta, long t) {
  require(eta > 0.0 && eta <= 1.0, ErrorCode::invalid_parameter, "eta must lie in (0, 1]");
  require(t >= 1, ErrorCode::invalid_parameter, "horizon must be >= 1");
  const double shift = static_cast<double>(t - 1) * std::sqrt(eta / 2.0);
  const double root = std::sqrt(static_cast<double>(t));
  return {root + shift, -root + shift};
}

double cyclic_spectrum_limit(double eta, double omega) {
  require(eta > 0.0 && eta < 1.0, ErrorCode::invalid_parameter, "eta must lie in (0, 1)");
  require(omega >= 0.0 && omega <= 1.0, ErrorCode::invalid_parameter, "omega must lie in [0, 1]");
  const double g = gamma_of(eta);
  const double p = 1.0 - eta;
  // The formula's argument is 1 - index: index 1 is the top of the spectrum.
  const double c = -std::cos(std::numbers::pi * omega);
  return 2.0 * g * (c - p) / (1.0 - 2.0 * p * c + p * p);
}

AnalyticsReport analytics_report(const MarketSpec& market, const StrategySpec& strat) {
  market.validate();
  strat.validate();
  AnalyticsReport out;
  const long tt = strat.total();
  if (strat.eta < 1.0) {
    const auto lim = eigen_asymptotics_long(strat.eta);
    out.mu_plus_inf = lim.mu_plus;
    out.mu_minus_inf = lim.mu_minus;
  }
  out.turnover_small_eta = mean_turnover_small_eta(strat);

  if (market.kind == MarketKind::AutoregressiveTrend) {
    out.numeric_fallback = true;
    out.mean_incremental = mean_incremental_pnl_numeric(market, strat, tt);
    out.variance_incremental = variance_incremental_pnl_numeric(market, strat, tt);
    if (tt >= 2) {
      const double x = signal_increment_variance_numeric(market, strat.eta, tt);
      out.turnover_mean = cost_prefactor(strat.theta, strat.alpha) * std::pow(2.0 * x, 0.5 * strat.alpha);
    }
    const double nan = std::nan("");
    out.mean_stationary = out.variance_stationary = out.turnover_stationary = nan;
    out.pnl_variogram = out.pnl_variogram_limit = out.net_risk_adjusted = out.theta_max = nan;
    return out;
  }

  out.mean_incremental = mean_incremental_pnl(market, strat, tt);
  out.mean_stationary = mean_stationary_pnl(market, strat);
  out.variance_incremental = variance_incremental_pnl(market, strat, tt);
  out.variance_stationary = variance_stationary_pnl(market, strat);
  out.turnover_mean = tt >= 2 ? mean_turnover(market, strat, tt) : 0.0;
  out.turnover_stationary = mean_turnover_stationary(market, strat);
  out.pnl_variogram = pnl_variogram_stationary(market, strat, strat.horizon);
  out.pnl_variogram_limit = pnl_variogram_limit(market, strat);
  out.net_risk_adjusted = net_risk_adjusted_pnl(market, strat, strat.eta, true);
  if (strat.alpha == 1.0) {
    try {
      out.eta_opt = optimal_eta(market, strat.theta);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::no_profitable_eta) throw;
    }
  }
  out.theta_max = max_cost_bound(market, strat.eta);
  return out;
}

}  // namespace trendfollow
