#include "trendfollow/montecarlo.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

#include "trendfollow/error.hpp"
#include "trendfollow/normal.hpp"
#include "trendfollow/rng.hpp"

namespace trendfollow {

using detail::require;

void SimulationConfig::validate() const {
  market.validate();
  strategy.validate();
  require(n_paths >= 1, ErrorCode::invalid_parameter, "n_paths must be >= 1");
  require(path_length == 0 || path_length >= strategy.total(), ErrorCode::invalid_parameter,
          "path_length must be >= t0 + t");
  require(length() < (long{1} << 32), ErrorCode::invalid_parameter, "path_length too large");
  require(antithetic ? n_paths >= 2 : true, ErrorCode::invalid_parameter,
          "antithetic sampling needs at least 2 paths");
}

namespace {

// Per-path innovation pair (eps_t, xi_t) from Philox block (t, 0, path_lo, path_hi).
class PathStream {
 public:
  PathStream(const SimulationConfig& config, long path)
      : gen_(config.seed),
        sign_(config.antithetic && (path & 1) ? -1.0 : 1.0) {
    const auto source = static_cast<std::uint64_t>(config.antithetic ? path & ~1L : path);
    lo_ = static_cast<std::uint32_t>(source);
    hi_ = static_cast<std::uint32_t>(source >> 32);
  }

  // Two extra normals for the stationary initial state, from a block no step uses.
  void draw_initial(double& z0, double& z1) const {
    const auto b = gen_({0u, 1u, lo_, hi_});
    z0 = sign_ * normal_quantile(open_unit(b[0], b[1]));
    z1 = sign_ * normal_quantile(open_unit(b[2], b[3]));
  }

  void draw(long step, double& eps, double& xi) const {
    const auto b = gen_({static_cast<std::uint32_t>(step), 0u, lo_, hi_});
    eps = sign_ * normal_quantile(open_unit(b[0], b[1]));
    xi = sign_ * normal_quantile(open_unit(b[2], b[3]));
  }

 private:
  Philox4x32 gen_;
  double sign_;
  std::uint32_t lo_ = 0;
  std::uint32_t hi_ = 0;
};

// r_t = eps_t + beta m_t; stochastic: m_(t+1) = q m_t + xi_t; autoregressive: m_(t+1) = q m_t + r_t.
struct MarketRecursion {
  double beta;
  double q;
  bool autoregressive;

  explicit MarketRecursion(const MarketSpec& spec)
      : beta(spec.beta()),
        q(spec.trend_decay()),
        autoregressive(spec.kind == MarketKind::AutoregressiveTrend) {}

  double step(double& m, double eps, double xi) const {
    const double r = eps + beta * m;
    m = q * m + (autoregressive ? r : xi);
    return r;
  }
};

// Lower Cholesky factor of the stationary (m, e) covariance, or zero for a zero start.
Eigen::Matrix2d initial_factor(const SimulationConfig& config) {
  if (!config.stationary_start) return Eigen::Matrix2d::Zero();
  return stationary_state_covariance(config.market, config.strategy.eta).llt().matrixL();
}

void initial_state(const PathStream& stream, const Eigen::Matrix2d& factor, double& m, double& e) {
  if (factor(0, 0) == 0.0 && factor(1, 1) == 0.0) {
    m = e = 0.0;
    return;
  }
  double z0, z1;
  stream.draw_initial(z0, z1);
  m = factor(0, 0) * z0;
  e = factor(1, 0) * z0 + factor(1, 1) * z1;
}

struct Outcome {
  double cumulative = 0.0;
  double incremental = 0.0;
  double signal_change = 0.0;
};

Outcome run_path(const SimulationConfig& config, const Eigen::Matrix2d& factor, long path) {
  const PathStream stream(config, path);
  const MarketRecursion market(config.market);
  const double p = config.strategy.signal_decay();
  const double g = config.strategy.gamma();
  const long t0 = config.strategy.t0;
  const long total = config.strategy.total();

  Outcome out;
  double m, ema;
  initial_state(stream, factor, m, ema);
  double prev_signal = 0.0;
  for (long t = 0; t < total; ++t) {
    double eps, xi;
    stream.draw(t, eps, xi);
    const double r = market.step(m, eps, xi);
    const double s = g * ema;
    if (t >= t0) out.cumulative += r * s;
    if (t == total - 1) {
      out.incremental = r * s;
      out.signal_change = s - prev_signal;
    }
    prev_signal = s;
    ema = p * ema + r;
  }
  return out;
}

void store(PathOutcomes& out, long i, const Outcome& o) {
  out.cumulative[i] = o.cumulative;
  out.incremental[i] = o.incremental;
  out.signal_change[i] = o.signal_change;
}

PathOutcomes allocate(long n) {
  PathOutcomes out;
  out.cumulative.resize(n);
  out.incremental.resize(n);
  out.signal_change.resize(n);
  return out;
}

}  // namespace

Eigen::MatrixXd simulate_market(const SimulationConfig& config, long first_path, long count) {
  config.validate();
  require(first_path >= 0 && count >= 0 && first_path + count <= config.n_paths,
          ErrorCode::out_of_range, "path range outside [0, n_paths)");
  const long length = config.length();
  const MarketRecursion market(config.market);
  const Eigen::Matrix2d factor = initial_factor(config);
  Eigen::MatrixXd out(length, count);
#pragma omp parallel for schedule(static) if (config.execution == Execution::Parallel)
  for (long j = 0; j < count; ++j) {
    const PathStream stream(config, first_path + j);
    double m, e;
    initial_state(stream, factor, m, e);
    for (long t = 0; t < length; ++t) {
      double eps, xi;
      stream.draw(t, eps, xi);
      out(t, j) = market.step(m, eps, xi);
    }
  }
  return out;
}

PathOutcomes simulate_strategy_serial(const SimulationConfig& config) {
  config.validate();
  PathOutcomes out = allocate(config.n_paths);
  const Eigen::Matrix2d factor = initial_factor(config);
  for (long i = 0; i < config.n_paths; ++i) store(out, i, run_path(config, factor, i));
  return out;
}

PathOutcomes simulate_strategy_parallel(const SimulationConfig& config) {
  config.validate();
  PathOutcomes out = allocate(config.n_paths);
  const Eigen::Matrix2d factor = initial_factor(config);
#pragma omp parallel for schedule(static)
  for (long i = 0; i < config.n_paths; ++i) store(out, i, run_path(config, factor, i));
  return out;
}

PathOutcomes simulate_strategy(const SimulationConfig& config) {
  return config.execution == Execution::Serial ? simulate_strategy_serial(config)
                                               : simulate_strategy_parallel(config);
}

namespace {

struct Moments {
  double mean = 0.0;
  double m2 = 0.0;  // central, divided by n
  double m3 = 0.0;
  double m4 = 0.0;
};

// Central moments from power sums of d = x - shift.
Moments moments_from_sums(long double n, long double s1, long double s2, long double s3,
                          long double s4, double shift) {
  const long double mu = s1 / n;
  const long double a2 = s2 / n;
  const long double a3 = s3 / n;
  const long double a4 = s4 / n;
  Moments m;
  m.mean = static_cast<double>(shift + mu);
  m.m2 = static_cast<double>(a2 - mu * mu);
  m.m3 = static_cast<double>(a3 - 3 * mu * a2 + 2 * mu * mu * mu);
  m.m4 = static_cast<double>(a4 - 4 * mu * a3 + 6 * mu * mu * a2 - 3 * mu * mu * mu * mu);
  return m;
}

double skew_of(const Moments& m) { return m.m3 / std::pow(m.m2, 1.5); }
double kurt_of(const Moments& m) { return m.m4 / (m.m2 * m.m2) - 3.0; }

// Type-7 quantile of data that may be reordered in place.
double select_quantile(std::vector<double>& data, double q) {
  const double h = q * static_cast<double>(data.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  std::nth_element(data.begin(), data.begin() + lo, data.end());
  const double a = data[lo];
  if (lo + 1 >= data.size()) return a;
  const double b = *std::min_element(data.begin() + lo + 1, data.end());
  return a + (h - static_cast<double>(lo)) * (b - a);
}

}  // namespace

EmpiricalStats summarize(std::span<const double> sample, const StatsOptions& options) {
  require(!sample.empty(), ErrorCode::invalid_parameter, "empty sample");
  const double nan = std::numeric_limits<double>::quiet_NaN();
  const long n = static_cast<long>(sample.size());
  EmpiricalStats st;
  st.n = n;

  long double total = 0.0L;
  for (double x : sample) total += x;
  const double shift = static_cast<double>(total / n);

  const int groups = static_cast<int>(std::min<long>(std::max(options.jackknife_groups, 2), n));
  std::vector<std::array<long double, 5>> gsum(groups, {0, 0, 0, 0, 0});
  for (int g = 0; g < groups; ++g) {
    const long begin = n * g / groups;
    const long end = n * (g + 1) / groups;
    auto& s = gsum[g];
    for (long i = begin; i < end; ++i) {
      const long double d = sample[i] - shift;
      const long double d2 = d * d;
      s[0] += 1;
      s[1] += d;
      s[2] += d2;
      s[3] += d2 * d;
      s[4] += d2 * d2;
    }
  }
  std::array<long double, 5> all{0, 0, 0, 0, 0};
  for (const auto& s : gsum)
    for (int k = 0; k < 5; ++k) all[k] += s[k];
  const Moments full = moments_from_sums(all[0], all[1], all[2], all[3], all[4], shift);
  const double nd = static_cast<double>(n);

  st.mean.value = full.mean;
  st.variance.value = n > 1 ? full.m2 * nd / (nd - 1.0) : 0.0;
  st.skewness.value = skew_of(full);
  st.kurtosis.value = kurt_of(full);
  if (n > 1) {
    st.mean.std_error = std::sqrt(st.variance.value / nd);
    std::vector<double> var(groups), skew(groups), kurt(groups);
    for (int g = 0; g < groups; ++g) {
      std::array<long double, 5> r;
      for (int k = 0; k < 5; ++k) r[k] = all[k] - gsum[g][k];
      const Moments m = moments_from_sums(r[0], r[1], r[2], r[3], r[4], shift);
      const double nr = static_cast<double>(r[0]);
      var[g] = nr > 1 ? m.m2 * nr / (nr - 1.0) : 0.0;
      skew[g] = skew_of(m);
      kurt[g] = kurt_of(m);
    }
    const auto jackknife = [groups](const std::vector<double>& v) {
      double mean = 0.0;
      for (double x : v) mean += x;
      mean /= groups;
      double ss = 0.0;
      for (double x : v) ss += (x - mean) * (x - mean);
      return std::sqrt(ss * (groups - 1.0) / groups);
    };
    st.variance.std_error = jackknife(var);
    st.skewness.std_error = jackknife(skew);
    st.kurtosis.std_error = jackknife(kurt);
  } else {
    st.mean.std_error = st.variance.std_error = st.skewness.std_error = st.kurtosis.std_error = nan;
  }

  std::vector<double> work(sample.begin(), sample.end());
  for (double q : options.quantile_levels) {
    require(q > 0.0 && q < 1.0, ErrorCode::out_of_range, "quantile level outside (0, 1)");
    st.quantiles.push_back({q, select_quantile(work, q), n > 1 ? 0.0 : nan});
  }
  if (n > 1 && !options.quantile_levels.empty() && options.bootstrap_resamples > 1) {
    const Philox4x32 gen(options.bootstrap_seed);
    const int resamples = options.bootstrap_resamples;
    std::vector<std::vector<double>> boot(st.quantiles.size(), std::vector<double>(resamples));
    for (int b = 0; b < resamples; ++b) {
      for (long i = 0; i < n; i += 4) {
        const auto blk = gen({static_cast<std::uint32_t>(i >> 2), static_cast<std::uint32_t>(b),
                              static_cast<std::uint32_t>(static_cast<std::uint64_t>(i >> 2) >> 32), 1u});
        for (long k = 0; k < 4 && i + k < n; ++k)
          work[i + k] = sample[(std::uint64_t{blk[k]} * static_cast<std::uint64_t>(n)) >> 32];
      }
      for (std::size_t j = 0; j < st.quantiles.size(); ++j)
        boot[j][b] = select_quantile(work, st.quantiles[j].q);
    }
    for (std::size_t j = 0; j < st.quantiles.size(); ++j) {
      double mean = 0.0;
      for (double x : boot[j]) mean += x;
      mean /= resamples;
      double ss = 0.0;
      for (double x : boot[j]) ss += (x - mean) * (x - mean);
      st.quantiles[j].std_error = std::sqrt(ss / (resamples - 1));
    }
  }

  if (options.bins > 0) {
    const auto [lo_it, hi_it] = std::minmax_element(sample.begin(), sample.end());
    double lo = *lo_it;
    double hi = *hi_it;
    if (!(hi > lo)) {
      lo -= 0.5;
      hi += 0.5;
    }
    const int bins = options.bins;
    st.bin_edges.resize(bins + 1);
    for (int k = 0; k <= bins; ++k) st.bin_edges[k] = lo + (hi - lo) * k / bins;
    st.counts.assign(bins, 0);
    for (double x : sample) {
      auto k = static_cast<long>((x - lo) / (hi - lo) * bins);
      st.counts[std::clamp<long>(k, 0, bins - 1)] += 1;
    }
  }
  return st;
}

PnlStats estimate_pnl_stats(const SimulationConfig& config, const StatsOptions& options) {
  const PathOutcomes out = simulate_strategy(config);
  return {summarize(out.cumulative, options), summarize(out.incremental, options)};
}

std::vector<double> turnover_sample(const PathOutcomes& outcomes, const StrategySpec& strategy) {
  std::vector<double> out(outcomes.signal_change.size());
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = strategy.theta * std::pow(std::abs(outcomes.signal_change[i]), strategy.alpha);
  return out;
}

EmpiricalStats estimate_turnover(const SimulationConfig& config, const StatsOptions& options) {
  require(config.strategy.total() >= 2, ErrorCode::invalid_parameter,
          "turnover needs t0 + t >= 2");
  return summarize(turnover_sample(simulate_strategy(config), config.strategy), options);
}

Eigen::Matrix2d stationary_state_covariance(const MarketSpec& market, double eta) {
  market.validate();
  require(eta > 0.0 && eta <= 1.0, ErrorCode::invalid_parameter, "eta must lie in (0, 1]");
  const double beta = market.beta();
  const double q = market.trend_decay();
  const double p = 1.0 - eta;
  // x' = A x + B w with x = (m, e), w = (eps, xi); solve Sigma = A Sigma A^T + B B^T.
  Eigen::Matrix2d a, b;
  if (market.kind == MarketKind::AutoregressiveTrend) {
    a << q + beta, 0.0, beta, p;
    b << 1.0, 0.0, 1.0, 0.0;
  } else {
    a << q, 0.0, beta, p;
    b << 0.0, 1.0, 1.0, 0.0;
  }
  Eigen::Matrix4d kron;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) kron.block<2, 2>(2 * i, 2 * j) = a(i, j) * a;
  const Eigen::Matrix2d bb = b * b.transpose();
  const Eigen::Vector4d rhs = Eigen::Map<const Eigen::Vector4d>(bb.data());
  const Eigen::Vector4d sol = (Eigen::Matrix4d::Identity() - kron).partialPivLu().solve(rhs);
  Eigen::Matrix2d sigma = Eigen::Map<const Eigen::Matrix2d>(sol.data());
  return 0.5 * (sigma + sigma.transpose());
}

SimulationConfig stationary_config(const MarketSpec& market, const StrategySpec& strategy,
                                   long n_paths, std::uint64_t seed, StationaryMethod method) {
  SimulationConfig config;
  config.market = market;
  config.strategy = strategy;
  if (method == StationaryMethod::BurnIn) {
    config.strategy.t0 = static_cast<long>(std::ceil(10.0 / std::min(market.lambda, strategy.eta)));
  } else {
    config.strategy.t0 = 1;
    config.stationary_start = true;
  }
  config.strategy.horizon = 1;
  config.n_paths = n_paths;
  config.seed = seed;
  return config;
}

}  // namespace trendfollow
