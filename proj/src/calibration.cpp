#include "trendfollow/calibration.hpp"

#include <boost/math/tools/minima.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "trendfollow/error.hpp"

namespace trendfollow {

using detail::require;

ReturnSeries standardize_returns(std::span<const double> prices, std::size_t vol_span,
                                 std::span<const std::string> timestamps) {
  require(vol_span >= 1, ErrorCode::invalid_parameter, "vol_span must be >= 1");
  if (prices.size() <= vol_span + 1)
    detail::fail(ErrorCode::series_too_short,
                 "need more than vol_span + 1 = " + std::to_string(vol_span + 1) + " prices, got " +
                     std::to_string(prices.size()));
  require(timestamps.empty() || timestamps.size() == prices.size(), ErrorCode::size_mismatch,
          "timestamps and prices differ in length");
  for (std::size_t i = 0; i < prices.size(); ++i)
    if (!(prices[i] > 0.0) || !std::isfinite(prices[i]))
      detail::fail(ErrorCode::non_positive_price,
                   "price at index " + std::to_string(i) + " is not a finite positive number");

  const std::size_t n = prices.size() - 1;
  std::vector<double> r(n);
  for (std::size_t i = 0; i < n; ++i) r[i] = std::log(prices[i + 1] / prices[i]);

  // Window of vol_span past squared returns, weights decay^(k-1); a fixed window keeps every
  // output after the warm-up independent of where the series starts.
  const double decay = 1.0 - 1.0 / static_cast<double>(vol_span);
  std::vector<double> weight(vol_span);
  weight[0] = 1.0;
  for (std::size_t k = 1; k < vol_span; ++k) weight[k] = weight[k - 1] * decay;

  ReturnSeries out;
  out.values.assign(n, 0.0);
  out.warmup = vol_span;
  for (std::size_t i = 1; i < n; ++i) {
    const std::size_t depth = std::min(vol_span, i);
    double num = 0.0;
    double den = 0.0;
    for (std::size_t k = 0; k < depth; ++k) {
      num += weight[k] * r[i - 1 - k] * r[i - 1 - k];
      den += weight[k];
    }
    out.values[i] = r[i] / std::max(std::sqrt(num / den), kVolatilityFloor);
  }
  if (!timestamps.empty()) out.timestamps.assign(timestamps.begin() + 1, timestamps.end());
  return out;
}

EmpiricalVariogram empirical_variogram(std::span<const double> returns, long t_max, long t0) {
  require(t_max >= 1, ErrorCode::invalid_parameter, "t_max must be >= 1");
  require(t0 >= 0, ErrorCode::invalid_parameter, "burn-in must be >= 0");
  const long size = static_cast<long>(returns.size());
  if (size < t0 + 10 * t_max)
    detail::fail(ErrorCode::series_too_short,
                 "variogram up to lag " + std::to_string(t_max) + " needs at least " +
                     std::to_string(t0 + 10 * t_max) + " returns, got " + std::to_string(size));
  const auto y = returns.subspan(static_cast<std::size_t>(t0));
  const long n = static_cast<long>(y.size());

  std::vector<long double> prefix(n + 1, 0.0L);
  for (long i = 0; i < n; ++i) prefix[i + 1] = prefix[i] + y[i];

  const auto window_variance = [&](long t) {
    const long m = n - t + 1;
    long double mean = 0.0L;
    for (long i = 0; i < m; ++i) mean += prefix[i + t] - prefix[i];
    mean /= m;
    long double ss = 0.0L;
    for (long i = 0; i < m; ++i) {
      const long double d = prefix[i + t] - prefix[i] - mean;
      ss += d * d;
    }
    return static_cast<double>(ss / m);
  };

  long double mean1 = 0.0L;
  for (double v : y) mean1 += v;
  mean1 /= n;
  long double ss1 = 0.0L;
  for (double v : y) ss1 += (v - mean1) * (v - mean1);
  const double var1 = static_cast<double>(ss1 / n);
  require(var1 > 0.0, ErrorCode::invalid_parameter, "returns have zero variance");

  EmpiricalVariogram out;
  out.lags.resize(t_max);
  out.ratio.resize(t_max);
  out.std_error.resize(t_max);
  for (long t = 1; t <= t_max; ++t) {
    const double v = t == 1 ? 1.0 : window_variance(t) / (static_cast<double>(t) * var1);
    const double n_eff = static_cast<double>(n - t + 1) / static_cast<double>(t);
    out.lags[t - 1] = t;
    out.ratio[t - 1] = v;
    out.std_error[t - 1] = v * std::sqrt(2.0 / n_eff);
  }
  return out;
}

namespace {

// V(t) = 1 + b h(t, lambda) with b = beta0^2 / (1 + beta0^2).
struct Shape {
  double h;
  double dh;  // d h / d lambda
};

Shape shape(double t, double lambda) {
  const double lq = std::log1p(-lambda);  // -inf at lambda = 1
  const double amp = 2.0 * (1.0 - lambda) / lambda;
  const double damp = -2.0 / (lambda * lambda);
  if (lambda >= 1.0) return {0.0, damp};
  const double one_minus_qt = -std::expm1(t * lq);
  const double g = 1.0 - one_minus_qt / (lambda * t);
  const double dg = one_minus_qt / (lambda * lambda * t) - std::exp((t - 1.0) * lq) / lambda;
  return {amp * g, damp * g + amp * dg};
}

struct Sample {
  std::vector<double> t, y, w;  // y = V - 1
};

struct Profile {
  double b;
  double rss;
};

Profile profile(const Sample& s, double lambda, double b_max) {
  double hh = 0.0, hy = 0.0, yy = 0.0;
  for (std::size_t i = 0; i < s.t.size(); ++i) {
    const double h = shape(s.t[i], lambda).h;
    hh += s.w[i] * h * h;
    hy += s.w[i] * h * s.y[i];
    yy += s.w[i] * s.y[i] * s.y[i];
  }
  const double b = hh > 0.0 ? std::clamp(hy / hh, 0.0, b_max) : 0.0;
  return {b, std::max(yy - 2.0 * b * hy + b * b * hh, 0.0)};
}

double rss_at(const Sample& s, double lambda, double b) {
  double out = 0.0;
  for (std::size_t i = 0; i < s.t.size(); ++i) {
    const double e = s.y[i] - b * shape(s.t[i], lambda).h;
    out += s.w[i] * e * e;
  }
  return out;
}

}  // namespace

VariogramFit fit_variogram(const EmpiricalVariogram& empirical, const FitOptions& options) {
  require(empirical.lags.size() == empirical.ratio.size(), ErrorCode::size_mismatch,
          "variogram lags and ratios differ in length");
  require(options.lags.first >= 1 && options.lags.last >= options.lags.first,
          ErrorCode::invalid_parameter, "invalid lag range");
  require(options.lambda_min > 0.0 && options.lambda_max <= 1.0 &&
              options.lambda_min < options.lambda_max,
          ErrorCode::invalid_parameter, "invalid lambda bounds");
  require(options.grid_points >= 3, ErrorCode::invalid_parameter, "need at least 3 lambda starts");
  require(!empirical.lags.empty() &&
              *std::max_element(empirical.lags.begin(), empirical.lags.end()) >= options.lags.last &&
              *std::min_element(empirical.lags.begin(), empirical.lags.end()) <= options.lags.first,
          ErrorCode::invalid_parameter, "lag range extends beyond the empirical variogram");

  Sample s;
  for (std::size_t i = 0; i < empirical.lags.size(); ++i) {
    const long t = empirical.lags[i];
    if (t < options.lags.first || t > options.lags.last) continue;
    require(std::isfinite(empirical.ratio[i]), ErrorCode::invalid_parameter,
            "non-finite variogram value");
    s.t.push_back(static_cast<double>(t));
    s.y.push_back(empirical.ratio[i] - 1.0);
    s.w.push_back(std::pow(static_cast<double>(t), -options.weight_exponent));
  }
  if (s.t.size() < 10)
    detail::fail(ErrorCode::series_too_short,
                 "variogram fit needs at least 10 lags in range, got " + std::to_string(s.t.size()));

  const double b_max = options.beta0_max * options.beta0_max / (1.0 + options.beta0_max * options.beta0_max);
  const double u_min = std::log(options.lambda_min);
  const double u_max = std::log(options.lambda_max);
  const int grid = options.grid_points;
  std::vector<double> u(grid), rss(grid);
  for (int i = 0; i < grid; ++i) {
    u[i] = u_min + (u_max - u_min) * i / (grid - 1);
    rss[i] = profile(s, std::exp(u[i]), b_max).rss;
  }

  // One bounded Brent search per local minimum of the profile on the grid.
  double best_u = u[0];
  double best_rss = std::numeric_limits<double>::infinity();
  bool any_interior = false;
  // Brent stops about sqrt(eps) |u| short of an end point.
  const double u_tol = 1e-5 * (u_max - u_min);
  const auto objective = [&](double v) { return profile(s, std::exp(v), b_max).rss; };
  for (int i = 0; i < grid; ++i) {
    const bool left_ok = i == 0 || rss[i] <= rss[i - 1];
    const bool right_ok = i == grid - 1 || rss[i] <= rss[i + 1];
    if (!left_ok || !right_ok) continue;
    const double lo = u[std::max(i - 1, 0)];
    const double hi = u[std::min(i + 1, grid - 1)];
    const auto [uu, val] = boost::math::tools::brent_find_minima(objective, lo, hi, 52);
    const double b = profile(s, std::exp(uu), b_max).b;
    const bool at_bound = uu - u_min < u_tol || u_max - uu < u_tol || b >= b_max;
    if (!at_bound) any_interior = true;
    if (val < best_rss) {
      best_rss = val;
      best_u = uu;
    }
  }

  double lambda = std::exp(best_u);
  double b = profile(s, lambda, b_max).b;
  const bool flat = b <= 0.0 || u_max - best_u < u_tol;
  if (!any_interior && !flat)
    detail::fail(ErrorCode::fit_failure, "variogram fit hit the parameter bounds from every start");

  // Gauss-Newton polish on (lambda, b).
  if (!flat) {
    double current = rss_at(s, lambda, b);
    for (int it = 0; it < 30; ++it) {
      Eigen::Matrix2d jtj = Eigen::Matrix2d::Zero();
      Eigen::Vector2d jte = Eigen::Vector2d::Zero();
      for (std::size_t i = 0; i < s.t.size(); ++i) {
        const Shape sh = shape(s.t[i], lambda);
        const Eigen::Vector2d j(b * sh.dh, sh.h);
        const double e = s.y[i] - b * sh.h;
        jtj += s.w[i] * j * j.transpose();
        jte += s.w[i] * e * j;
      }
      const Eigen::Vector2d step = jtj.ldlt().solve(jte);
      if (!step.allFinite()) break;
      double scale = 1.0;
      bool improved = false;
      for (int k = 0; k < 20; ++k, scale *= 0.5) {
        const double l2 = std::clamp(lambda + scale * step(0), options.lambda_min, options.lambda_max);
        const double b2 = std::clamp(b + scale * step(1), 0.0, b_max);
        const double r2 = rss_at(s, l2, b2);
        if (r2 <= current) {
          improved = r2 < current;
          lambda = l2;
          b = b2;
          current = r2;
          break;
        }
      }
      if (!improved) break;
    }
  }

  VariogramFit fit;
  fit.lag_range = options.lags;
  fit.points = s.t.size();
  fit.lambda_hat = lambda;
  fit.beta0_hat = flat ? 0.0 : std::sqrt(b / (1.0 - b));

  const double rss_final = rss_at(s, lambda, flat ? 0.0 : b);
  double wsum = 0.0, plain = 0.0;
  for (std::size_t i = 0; i < s.t.size(); ++i) {
    const double e = s.y[i] - (flat ? 0.0 : b) * shape(s.t[i], lambda).h;
    plain += e * e;
    wsum += s.w[i];
  }
  fit.residual = std::sqrt(plain / static_cast<double>(s.t.size()));

  const double sigma2 = rss_final / static_cast<double>(s.t.size() - 2) *
                        static_cast<double>(s.t.size()) / wsum;  // weights normalized to mean 1
  const double beta0 = fit.beta0_hat;
  const double db = 2.0 * beta0 / ((1.0 + beta0 * beta0) * (1.0 + beta0 * beta0));
  Eigen::Matrix2d jtj = Eigen::Matrix2d::Zero();
  for (std::size_t i = 0; i < s.t.size(); ++i) {
    const Shape sh = shape(s.t[i], lambda);
    const double w = s.w[i] * static_cast<double>(s.t.size()) / wsum;
    const Eigen::Vector2d j(b * sh.dh, sh.h * db);
    jtj += w * j * j.transpose();
  }
  const double inf = std::numeric_limits<double>::infinity();
  const Eigen::FullPivLU<Eigen::Matrix2d> lu(jtj);
  if (flat || !lu.isInvertible() || !(jtj(0, 0) > 0.0)) {
    fit.lambda_unidentified = true;
    fit.covariance << inf, 0.0, 0.0, jtj(1, 1) > 0.0 ? sigma2 / jtj(1, 1) : inf;
  } else {
    fit.covariance = sigma2 * lu.inverse();
  }
  return fit;
}

}  // namespace trendfollow
