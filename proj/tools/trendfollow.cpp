// trendfollow: distribution, analytics, simulation and calibration of an EMA trend follower.

#include <omp.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include "CLI11.hpp"
#include "trendfollow/calibration.hpp"
#include "trendfollow/closed_form.hpp"
#include "trendfollow/csv_io.hpp"
#include "trendfollow/error.hpp"
#include "trendfollow/montecarlo.hpp"
#include "trendfollow/normal.hpp"
#include "trendfollow/quadform_dist.hpp"
#include "trendfollow/run_config.hpp"
#include "trendfollow/table.hpp"

namespace tf = trendfollow;

namespace {

enum ExitCode { kOk = 0, kInputError = 2, kCalibrationError = 3, kNumericalError = 4 };

int exit_code_for(tf::ErrorCode code) {
  switch (code) {
    case tf::ErrorCode::fit_failure:
      return kCalibrationError;
    case tf::ErrorCode::inversion_failure:
    case tf::ErrorCode::degenerate_spectrum:
    case tf::ErrorCode::not_positive_definite:
    case tf::ErrorCode::tail_fit_unavailable:
      return kNumericalError;
    default:
      return kInputError;
  }
}

tf::Cell num(double v) {
  if (std::isnan(v)) return tf::NotAvailable{};
  return v;
}

tf::Table key_value_table(std::string name) { return {std::move(name), {"name", "value"}, {}}; }

tf::Report new_report(const tf::RunConfig& cfg) {
  tf::Report r;
  r.meta.emplace_back("generator", "trendfollow");
  r.meta.emplace_back("command", cfg.command);
  for (const auto& k : tf::config_keys())
    if (k.name != "out" && k.name != "threads") r.meta.emplace_back(k.name, k.get(cfg));
  return r;
}

long stationary_t0(const tf::RunConfig& cfg) {
  return static_cast<long>(std::ceil(10.0 / std::min(cfg.lambda, cfg.eta)));
}

// Window used by distribution / eigen: the stationary switch moves the incremental P&L far out.
tf::StrategySpec window_strategy(const tf::RunConfig& cfg, tf::PnlKind& kind) {
  tf::StrategySpec s = cfg.strategy();
  kind = cfg.kind;
  if (cfg.stationary) {
    kind = tf::PnlKind::Incremental;
    s.t0 = stationary_t0(cfg);
    s.horizon = 1;
  }
  return s;
}

tf::QuadFormSpectrum form_spectrum(const tf::RunConfig& cfg, const tf::StrategySpec& strat,
                                   tf::PnlKind kind) {
  const long size = strat.total();
  if (size > cfg.max_size)
    tf::detail::fail(tf::ErrorCode::invalid_parameter,
                     "t0 + t = " + std::to_string(size) + " exceeds --max-size " +
                         std::to_string(cfg.max_size));
  const auto form = tf::build_pnl_matrix(strat, kind);
  if (cfg.beta0 == 0.0) {
    cfg.market().validate();
    return tf::spectrum(form);
  }
  const auto cov = tf::covariance(cfg.market(), size, static_cast<std::size_t>(cfg.max_size));
  return tf::spectrum(form, cov);
}

std::vector<double> read_returns(const tf::RunConfig& cfg, std::size_t& warmup) {
  if (cfg.input.empty()) tf::detail::fail(tf::ErrorCode::malformed_input, "--input is required");
  const auto series = tf::read_series_csv(std::filesystem::path(cfg.input));
  if (series.kind == tf::SeriesKind::Return) {
    warmup = 0;
    return series.values;
  }
  if (cfg.vol_span < 1) tf::detail::fail(tf::ErrorCode::invalid_parameter, "--vol-span must be >= 1");
  auto rs = tf::standardize_returns(series.values, static_cast<std::size_t>(cfg.vol_span), series.dates);
  warmup = rs.warmup;
  return std::move(rs.values);
}

tf::Report cmd_calibrate(const tf::RunConfig& cfg) {
  std::size_t warmup = 0;
  const auto returns = read_returns(cfg, warmup);
  const auto usable = std::span<const double>(returns).subspan(std::min(warmup, returns.size()));
  const auto vg = tf::empirical_variogram(usable, cfg.lag_max, 0);
  tf::FitOptions opts;
  opts.lags = {cfg.lag_min, cfg.lag_max};
  opts.weight_exponent = cfg.weight_exponent;
  const auto fit = tf::fit_variogram(vg, opts);

  tf::Report r = new_report(cfg);
  tf::Table t = key_value_table("fit");
  t.add_row({std::string("lambda_hat"), fit.lambda_hat});
  t.add_row({std::string("beta0_hat"), fit.beta0_hat});
  t.add_row({std::string("residual"), fit.residual});
  t.add_row({std::string("lambda_std_error"), std::sqrt(fit.covariance(0, 0))});
  t.add_row({std::string("beta0_std_error"), std::sqrt(fit.covariance(1, 1))});
  t.add_row({std::string("covariance_lambda_beta0"), fit.covariance(0, 1)});
  t.add_row({std::string("lambda_unidentified"), static_cast<long>(fit.lambda_unidentified)});
  t.add_row({std::string("lag_min"), fit.lag_range.first});
  t.add_row({std::string("lag_max"), fit.lag_range.last});
  t.add_row({std::string("points"), static_cast<long>(fit.points)});
  t.add_row({std::string("returns_used"), static_cast<long>(usable.size())});
  r.tables.push_back(std::move(t));

  tf::MarketSpec fitted{tf::MarketKind::StochasticTrend, fit.lambda_hat, fit.beta0_hat};
  tf::Table v{"variogram", {"lag", "empirical", "std_error", "fitted"}, {}};
  for (std::size_t i = 0; i < vg.lags.size(); ++i)
    v.add_row({vg.lags[i], vg.ratio[i], vg.std_error[i],
               tf::variogram_returns_stationary(fitted, vg.lags[i])});
  r.tables.push_back(std::move(v));
  return r;
}

std::vector<double> quantile_levels() {
  std::vector<double> q{0.01};
  for (int k = 1; k <= 19; ++k) q.push_back(k / 20.0);
  q.push_back(0.99);
  return q;
}

tf::Report cmd_distribution(const tf::RunConfig& cfg) {
  tf::PnlKind kind;
  const auto strat = window_strategy(cfg, kind);
  const auto spec = form_spectrum(cfg, strat, kind);
  tf::InversionConfig inv;
  inv.sigmas = cfg.sigmas;
  inv.points_per_sigma = cfg.points_per_sigma;
  inv.tail_fit_level = cfg.tail_fit_level;
  const auto dist = tf::invert_to_distribution(spec, inv);
  const auto& cum = dist.cumulants();

  tf::Report r = new_report(cfg);
  tf::Table d{"density", {"z", "pdf", "cdf"}, {}};
  const double sd = std::sqrt(cum.variance());
  const double lo = cum.mean() - cfg.sigmas * sd;
  const double hi = cum.mean() + cfg.sigmas * sd;
  const auto first = static_cast<std::size_t>(std::max(0.0, std::ceil((lo - dist.z(0)) / dist.step())));
  const auto last = std::min(dist.size() - 1,
                             static_cast<std::size_t>(std::floor((hi - dist.z(0)) / dist.step())));
  const std::size_t rows = static_cast<std::size_t>(std::max(cfg.density_points, 2L));
  const std::size_t stride = std::max<std::size_t>(1, (last - first) / (rows - 1));
  for (std::size_t i = first; i <= last; i += stride)
    d.add_row({dist.z(i), dist.pdf()[i], dist.cdf()[i]});
  r.tables.push_back(std::move(d));

  const double horizon = kind == tf::PnlKind::Cumulative ? static_cast<double>(strat.horizon) : 1.0;
  const auto& tail = dist.tail_fit();
  tf::Table q{"quantiles", {"q", "z", "z_over_sqrt_t", "gaussian", "tail_asymptotic"}, {}};
  for (double level : quantile_levels()) {
    const double z = tf::quantile(dist, level);
    tf::Cell asym = tf::NotAvailable{};
    if (level <= 0.05 && tail.has_left)
      asym = tf::tail_quantile_asymptotic(tail, level, tf::TailSide::Left);
    else if (level >= 0.95 && tail.has_right)
      asym = tf::tail_quantile_asymptotic(tail, level, tf::TailSide::Right);
    q.add_row({level, z, z / std::sqrt(horizon),
               tf::gaussian_quantile(static_cast<long>(horizon), level), asym});
  }
  r.tables.push_back(std::move(q));

  tf::Table tt{"tail", {"side", "mu", "a", "regression_slope", "expected_slope", "points"}, {}};
  if (tail.has_left)
    tt.add_row({std::string("left"), tail.mu_minus, tail.a_minus, tail.slope_left,
                1.0 / std::abs(tail.mu_minus), static_cast<long>(tail.points_left)});
  if (tail.has_right)
    tt.add_row({std::string("right"), tail.mu_plus, tail.a_plus, tail.slope_right,
                -1.0 / tail.mu_plus, static_cast<long>(tail.points_right)});
  r.tables.push_back(std::move(tt));

  tf::Table s = key_value_table("summary");
  s.add_row({std::string("kappa1"), cum.kappa[0]});
  s.add_row({std::string("kappa2"), cum.kappa[1]});
  s.add_row({std::string("kappa3"), cum.kappa[2]});
  s.add_row({std::string("kappa4"), cum.kappa[3]});
  s.add_row({std::string("skewness"), cum.skewness()});
  s.add_row({std::string("kurtosis"), cum.kurtosis()});
  s.add_row({std::string("mu_minus"), spec.mu_minus()});
  s.add_row({std::string("mu_plus"), spec.mu_plus()});
  s.add_row({std::string("grid_step"), dist.step()});
  s.add_row({std::string("grid_points"), static_cast<long>(dist.size())});
  s.add_row({std::string("integral"), dist.integral()});
  s.add_row({std::string("t0"), strat.t0});
  s.add_row({std::string("t"), strat.horizon});
  r.tables.push_back(std::move(s));
  return r;
}

tf::Report cmd_report(const tf::RunConfig& cfg) {
  const auto market = cfg.market();
  const auto strat = cfg.strategy();
  const auto rep = tf::analytics_report(market, strat);

  tf::Report r = new_report(cfg);
  tf::Table s = key_value_table("summary");
  s.add_row({std::string("numeric_fallback"), static_cast<long>(rep.numeric_fallback)});
  s.add_row({std::string("mean_incremental"), num(rep.mean_incremental)});
  s.add_row({std::string("mean_stationary"), num(rep.mean_stationary)});
  s.add_row({std::string("variance_incremental"), num(rep.variance_incremental)});
  s.add_row({std::string("variance_stationary"), num(rep.variance_stationary)});
  s.add_row({std::string("turnover_mean"), num(rep.turnover_mean)});
  s.add_row({std::string("turnover_stationary"), num(rep.turnover_stationary)});
  s.add_row({std::string("turnover_small_eta"), num(rep.turnover_small_eta)});
  s.add_row({std::string("pnl_variogram"), num(rep.pnl_variogram)});
  s.add_row({std::string("pnl_variogram_limit"), num(rep.pnl_variogram_limit)});
  s.add_row({std::string("net_risk_adjusted_annualized"), num(rep.net_risk_adjusted)});
  s.add_row({std::string("eta_opt"), rep.eta_opt ? tf::Cell(*rep.eta_opt) : tf::Cell(tf::NotAvailable{})});
  s.add_row({std::string("theta_max"), num(rep.theta_max)});
  s.add_row({std::string("mu_plus_inf"), num(rep.mu_plus_inf)});
  s.add_row({std::string("mu_minus_inf"), num(rep.mu_minus_inf)});
  r.tables.push_back(std::move(s));
  if (rep.numeric_fallback) return r;

  if (cfg.eta_points < 2 || !(cfg.eta_min > 0.0) || !(cfg.eta_max <= 1.0) || cfg.eta_min >= cfg.eta_max)
    tf::detail::fail(tf::ErrorCode::invalid_parameter, "invalid eta sweep range");
  tf::Table sweep{"sweep",
                  {"eta", "net_risk_adjusted", "net_risk_adjusted_approx", "mean", "turnover",
                   "variance", "theta_max"},
                  {}};
  for (long i = 0; i < cfg.eta_points; ++i) {
    const double eta =
        cfg.eta_min * std::pow(cfg.eta_max / cfg.eta_min, static_cast<double>(i) / (cfg.eta_points - 1));
    tf::StrategySpec se = strat;
    se.eta = eta;
    const tf::Cell approx = strat.alpha == 1.0
                                ? tf::Cell(tf::net_risk_adjusted_pnl_approx(market, strat.theta, eta, true))
                                : tf::Cell(tf::NotAvailable{});
    sweep.add_row({eta, tf::net_risk_adjusted_pnl(market, strat, eta, true), approx,
                   tf::mean_stationary_pnl(market, se), tf::mean_turnover_stationary(market, se),
                   tf::variance_stationary_pnl(market, se), tf::max_cost_bound(market, eta)});
  }
  r.tables.push_back(std::move(sweep));

  tf::Table path{"time_profile", {"t", "mean_incremental", "variance_incremental", "turnover"}, {}};
  for (long t = 1; t <= strat.total(); ++t)
    path.add_row({t, tf::mean_incremental_pnl(market, strat, t), tf::variance_incremental_pnl(market, strat, t),
                  t >= 2 ? tf::Cell(tf::mean_turnover(market, strat, t)) : tf::Cell(0.0)});
  r.tables.push_back(std::move(path));

  tf::Table vg{"pnl_variogram", {"lag", "value"}, {}};
  for (long t = 1; t <= strat.horizon; ++t) vg.add_row({t, tf::pnl_variogram_stationary(market, strat, t)});
  r.tables.push_back(std::move(vg));
  return r;
}

struct Comparison {
  std::string name;
  double empirical;
  double std_error;
  double analytic;
};

tf::Report cmd_simulate(const tf::RunConfig& cfg) {
  const auto market = cfg.market();
  tf::SimulationConfig sim;
  if (cfg.stationary) {
    sim = tf::stationary_config(market, cfg.strategy(), cfg.paths, cfg.seed);
  } else {
    sim.market = market;
    sim.strategy = cfg.strategy();
    sim.n_paths = cfg.paths;
    sim.seed = cfg.seed;
  }
  sim.antithetic = cfg.antithetic;
  sim.validate();
  if (cfg.dump_paths < 0 || cfg.dump_paths > cfg.paths)
    tf::detail::fail(tf::ErrorCode::invalid_parameter, "--dump-paths must lie in [0, paths]");

  const auto outcomes = tf::simulate_strategy(sim);
  tf::StatsOptions opts;
  opts.quantile_levels = {0.01, 0.5, 0.99};
  const auto turnover = tf::turnover_sample(outcomes, sim.strategy);
  const std::vector<std::pair<std::string, tf::EmpiricalStats>> samples = {
      {"cumulative", tf::summarize(outcomes.cumulative, opts)},
      {"incremental", tf::summarize(outcomes.incremental, opts)},
      {"turnover", tf::summarize(turnover, opts)}};

  // Analytic counterparts. The stationary start is the t0 -> infinity limit; its matrix
  // counterpart uses the burn-in length.
  tf::StrategySpec window = sim.strategy;
  if (cfg.stationary) window.t0 = stationary_t0(cfg);
  const long t_tilde = window.total();
  std::vector<Comparison> rows;
  const bool stochastic = market.kind == tf::MarketKind::StochasticTrend;
  if (!cfg.stationary) {
    const auto spec = form_spectrum(cfg, window, tf::PnlKind::Cumulative);
    const auto cum = tf::cumulants(spec);
    const auto& e = samples[0].second;
    rows.push_back({"cumulative_mean", e.mean.value, e.mean.std_error, cum.mean()});
    rows.push_back({"cumulative_variance", e.variance.value, e.variance.std_error, cum.variance()});
    rows.push_back({"cumulative_skewness", e.skewness.value, e.skewness.std_error, cum.skewness()});
    rows.push_back({"cumulative_kurtosis", e.kurtosis.value, e.kurtosis.std_error, cum.kurtosis()});
    const auto dist = tf::invert_to_distribution(spec);
    for (const auto& qe : e.quantiles)
      rows.push_back({"cumulative_q" + tf::format_number(qe.q), qe.value, qe.std_error,
                      tf::quantile(dist, qe.q)});
  }
  {
    const auto spec = form_spectrum(cfg, window, tf::PnlKind::Incremental);
    const auto inc = tf::cumulants(spec);
    const auto& e = samples[1].second;
    const double mean = stochastic && cfg.stationary ? tf::mean_stationary_pnl(market, window) : inc.mean();
    const double var =
        stochastic && cfg.stationary ? tf::variance_stationary_pnl(market, window) : inc.variance();
    rows.push_back({"incremental_mean", e.mean.value, e.mean.std_error, mean});
    rows.push_back({"incremental_variance", e.variance.value, e.variance.std_error, var});
    rows.push_back({"incremental_skewness", e.skewness.value, e.skewness.std_error, inc.skewness()});
    rows.push_back({"incremental_kurtosis", e.kurtosis.value, e.kurtosis.std_error, inc.kurtosis()});
  }
  if (t_tilde >= 2) {
    double analytic;
    if (stochastic)
      analytic = cfg.stationary ? tf::mean_turnover_stationary(market, window)
                                : tf::mean_turnover(market, window, t_tilde);
    else
      analytic = cfg.theta * std::tgamma(0.5 * (1.0 + cfg.alpha)) / std::sqrt(M_PI) *
                 std::pow(2.0 * tf::signal_increment_variance_numeric(market, cfg.eta, t_tilde),
                          0.5 * cfg.alpha);
    const auto& e = samples[2].second;
    rows.push_back({"turnover_mean", e.mean.value, e.mean.std_error, analytic});
  }

  tf::Report r = new_report(cfg);
  r.meta.emplace_back("sampler", tf::kGaussianSampler);
  tf::Table cmp{"comparison", {"statistic", "empirical", "std_error", "analytic", "z_score", "pass"}, {}};
  for (const auto& c : rows) {
    const bool have_se = std::isfinite(c.std_error) && c.std_error > 0.0;
    const double z = have_se ? (c.empirical - c.analytic) / c.std_error : std::nan("");
    // A zero standard error with an exact match (e.g. theta = 0) passes.
    tf::Cell pass = tf::NotAvailable{};
    if (have_se) pass = std::string(std::abs(z) <= cfg.k_threshold ? "pass" : "fail");
    else if (std::isfinite(c.std_error) && c.empirical == c.analytic) pass = std::string("pass");
    cmp.add_row({c.name, c.empirical, num(c.std_error), c.analytic, num(z), pass});
  }
  r.tables.push_back(std::move(cmp));

  tf::Table st{"statistics",
               {"sample", "n", "mean", "mean_se", "variance", "variance_se", "skewness", "skewness_se",
                "kurtosis", "kurtosis_se"},
               {}};
  tf::Table qt{"quantiles", {"sample", "q", "value", "std_error"}, {}};
  tf::Table ht{"histogram", {"sample", "bin_lo", "bin_hi", "count"}, {}};
  for (const auto& [name, e] : samples) {
    st.add_row({name, e.n, num(e.mean.value), num(e.mean.std_error), num(e.variance.value),
                num(e.variance.std_error), num(e.skewness.value), num(e.skewness.std_error),
                num(e.kurtosis.value), num(e.kurtosis.std_error)});
    for (const auto& qe : e.quantiles) qt.add_row({name, qe.q, qe.value, num(qe.std_error)});
    for (std::size_t k = 0; k < e.counts.size(); ++k)
      ht.add_row({name, e.bin_edges[k], e.bin_edges[k + 1], e.counts[k]});
  }
  r.tables.push_back(std::move(st));
  r.tables.push_back(std::move(qt));
  r.tables.push_back(std::move(ht));

  if (cfg.dump_paths > 0) {
    const auto paths = tf::simulate_market(sim, 0, cfg.dump_paths);
    tf::Table pt{"paths", {"path", "step", "return"}, {}};
    for (Eigen::Index j = 0; j < paths.cols(); ++j)
      for (Eigen::Index t = 0; t < paths.rows(); ++t)
        pt.add_row({static_cast<long>(j), static_cast<long>(t + 1), paths(t, j)});
    r.tables.push_back(std::move(pt));
  }
  return r;
}

tf::Report cmd_variogram(const tf::RunConfig& cfg) {
  const auto market = cfg.market();
  const auto strat = cfg.strategy();
  market.validate();
  strat.validate();
  if (cfg.lag_max < 1) tf::detail::fail(tf::ErrorCode::invalid_parameter, "--lag-max must be >= 1");
  const bool stochastic = market.kind == tf::MarketKind::StochasticTrend;
  std::optional<tf::EmpiricalVariogram> emp;
  if (!cfg.input.empty()) {
    std::size_t warmup = 0;
    const auto returns = read_returns(cfg, warmup);
    emp = tf::empirical_variogram(std::span<const double>(returns).subspan(std::min(warmup, returns.size())),
                                  cfg.lag_max, 0);
  }
  std::vector<std::string> cols{"lag", "returns_model", "pnl_model"};
  if (emp) {
    cols.push_back("empirical");
    cols.push_back("std_error");
  }
  tf::Table v{"variogram", cols, {}};
  for (long t = 1; t <= cfg.lag_max; ++t) {
    std::vector<tf::Cell> row{t};
    row.push_back(stochastic ? tf::Cell(tf::variogram_returns_stationary(market, t)) : tf::Cell(tf::NotAvailable{}));
    row.push_back(stochastic ? tf::Cell(tf::pnl_variogram_stationary(market, strat, t)) : tf::Cell(tf::NotAvailable{}));
    if (emp) {
      row.push_back(emp->ratio[t - 1]);
      row.push_back(emp->std_error[t - 1]);
    }
    v.add_row(std::move(row));
  }
  tf::Report r = new_report(cfg);
  r.tables.push_back(std::move(v));
  return r;
}

tf::Report cmd_eigen(const tf::RunConfig& cfg) {
  tf::PnlKind kind;
  const auto strat = window_strategy(cfg, kind);
  const auto spec = form_spectrum(cfg, strat, kind);
  tf::Report r = new_report(cfg);
  tf::Table x = key_value_table("extremes");
  x.add_row({std::string("mu_minus"), spec.mu_minus()});
  x.add_row({std::string("mu_plus"), spec.mu_plus()});
  if (cfg.eta < 1.0) {
    const auto lim = tf::eigen_asymptotics_long(cfg.eta);
    const auto small = tf::eigen_asymptotics_long_small_eta(cfg.eta);
    x.add_row({std::string("mu_minus_inf"), lim.mu_minus});
    x.add_row({std::string("mu_plus_inf"), lim.mu_plus});
    x.add_row({std::string("mu_minus_inf_small_eta"), small.mu_minus});
    x.add_row({std::string("mu_plus_inf_small_eta"), small.mu_plus});
  }
  if (kind == tf::PnlKind::Cumulative) {
    const auto sh = tf::eigen_asymptotics_short(cfg.eta, strat.horizon);
    x.add_row({std::string("mu_minus_short"), sh.mu_minus});
    x.add_row({std::string("mu_plus_short"), sh.mu_plus});
  }
  r.tables.push_back(std::move(x));

  tf::Table e{"eigenvalues", {"index", "value"}, {}};
  for (std::size_t i = 0; i < spec.eigenvalues().size(); ++i)
    e.add_row({static_cast<long>(i), spec.eigenvalues()[i]});
  r.tables.push_back(std::move(e));

  if (cfg.eta < 1.0) {
    tf::Table c{"cyclic_limit", {"omega", "value"}, {}};
    for (int k = 0; k <= 200; ++k) {
      const double omega = k / 200.0;
      c.add_row({omega, tf::cyclic_spectrum_limit(cfg.eta, omega)});
    }
    r.tables.push_back(std::move(c));
  }
  return r;
}

int default_threads() {
  if (const char* env = std::getenv("TRENDFOLLOW_THREADS")) {
    int n = 0;
    const std::string_view s(env);
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), n);
    if (ec == std::errc() && ptr == s.data() + s.size() && n > 0) return n;
    std::cerr << "trendfollow: ignoring TRENDFOLLOW_THREADS='" << env << "'\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Exact P&L distribution, analytics, simulation and calibration of an EMA trend follower",
               "trendfollow"};
  app.require_subcommand(1);
  std::string config_path;
  app.add_option("--config", config_path, "flat key = value file; flags override it");

  std::map<std::string, std::string> values;
  std::map<std::string, bool> switches;
  std::map<std::string, CLI::Option*> given;
  for (const auto& k : tf::config_keys()) {
    if (k.is_flag)
      given[k.name] = app.add_flag("--" + k.name, switches[k.name], k.help);
    else
      given[k.name] = app.add_option("--" + k.name, values[k.name], k.help)->type_name("VALUE");
  }
  const std::vector<std::pair<std::string, std::string>> commands = {
      {"calibrate", "fit (lambda, beta0) to the variogram of a price or return CSV"},
      {"distribution", "density, cdf, quantiles and tails of the P&L by Fourier inversion"},
      {"report", "closed-form moments, turnover, risk-adjusted P&L and the eta sweep"},
      {"simulate", "Monte Carlo statistics next to their analytic values"},
      {"variogram", "model (and optionally empirical) variograms of returns and P&L"},
      {"eigen", "spectrum of the P&L quadratic form and its asymptotic limits"}};
  for (const auto& [name, help] : commands) app.add_subcommand(name, help)->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kInputError;
  }

  try {
    tf::RunConfig cfg;
    if (!config_path.empty()) {
      std::ifstream in(config_path, std::ios::binary);
      if (!in) tf::detail::fail(tf::ErrorCode::malformed_input, "cannot open config " + config_path);
      std::stringstream buf;
      buf << in.rdbuf();
      cfg = tf::parse_run_config(buf.str(), cfg);
    }
    for (const auto& k : tf::config_keys()) {
      if (given[k.name]->count() == 0) continue;
      k.set(cfg, k.is_flag ? std::string(switches[k.name] ? "true" : "false") : values[k.name]);
    }
    cfg.command = app.get_subcommands().front()->get_name();

    const int threads = cfg.threads > 0 ? cfg.threads : default_threads();
    if (threads > 0) omp_set_num_threads(threads);

    tf::Report report;
    if (cfg.command == "calibrate") report = cmd_calibrate(cfg);
    else if (cfg.command == "distribution") report = cmd_distribution(cfg);
    else if (cfg.command == "report") report = cmd_report(cfg);
    else if (cfg.command == "simulate") report = cmd_simulate(cfg);
    else if (cfg.command == "variogram") report = cmd_variogram(cfg);
    else report = cmd_eigen(cfg);
    tf::emit(report, cfg.format, cfg.out, std::cout);
  } catch (const tf::Error& e) {
    std::cerr << "trendfollow: " << e.what() << '\n';
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    std::cerr << "trendfollow: " << e.what() << '\n';
    return kInputError;
  }
  return kOk;
}
