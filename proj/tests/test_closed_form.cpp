#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "trendfollow/closed_form.hpp"
#include "trendfollow/error.hpp"
#include "trendfollow/quadform_dist.hpp"

using namespace trendfollow;

namespace {

const MarketSpec kTrendMarket{MarketKind::StochasticTrend, 0.01, 0.1};

StrategySpec strategy(double eta, double theta = 0.0, double alpha = 1.0) {
  return {eta, 200, 300, theta, alpha};
}

double rel(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

bool close(double a, double b, double tol) { return std::abs(a - b) <= tol * std::abs(b) + 1e-15; }

// Argmax of the approximate objective over a dense log grid.
double grid_argmax(const MarketSpec& m, double theta, int points, double lo, double hi) {
  double best = -1e300;
  double arg = lo;
  for (int i = 0; i < points; ++i) {
    const double eta = lo * std::pow(hi / lo, static_cast<double>(i) / (points - 1));
    const double v = net_risk_adjusted_pnl_approx(m, theta, eta, false);
    if (v > best) best = v, arg = eta;
  }
  return arg;
}

}  // namespace

TEST_CASE("mean incremental pnl") {
  CHECK(mean_incremental_pnl({MarketKind::StochasticTrend, 0.02, 0.0}, strategy(0.03), 50) == 0.0);
  CHECK(mean_incremental_pnl(kTrendMarket, strategy(0.03), 1) == 0.0);
  const double g = gamma_of(0.01);
  CHECK(mean_stationary_pnl(kTrendMarket, strategy(0.01)) ==
        doctest::Approx(g * 0.01 * 0.99 / 0.0199).epsilon(1e-13));
  CHECK(mean_stationary_pnl(kTrendMarket, strategy(0.01)) == doctest::Approx(0.070176).epsilon(1e-4));
  CHECK(mean_stationary_pnl({MarketKind::StochasticTrend, 1.0, 0.3}, strategy(0.2)) == 0.0);
  CHECK(mean_stationary_pnl({MarketKind::StochasticTrend, 0.01, 0.0}, strategy(0.2)) == 0.0);
  CHECK(mean_incremental_pnl(kTrendMarket, strategy(0.01), 20000) ==
        doctest::Approx(mean_stationary_pnl(kTrendMarket, strategy(0.01))).epsilon(1e-12));
}

TEST_CASE("variance incremental pnl") {
  CHECK(variance_stationary_pnl({MarketKind::StochasticTrend, 0.01, 0.0}, strategy(0.05)) ==
        doctest::Approx(1.0).epsilon(1e-14));
  const double v = variance_stationary_pnl(kTrendMarket, strategy(0.01));
  CHECK(v == doctest::Approx(2.0199).epsilon(1e-4));
  CHECK(std::abs(v - 2.0) < 0.05);
  CHECK(variance_incremental_pnl(kTrendMarket, strategy(0.01), 30000) == doctest::Approx(v).epsilon(1e-12));
}

TEST_CASE("closed forms agree with the matrix expressions") {
  std::mt19937_64 gen(2024);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int draw = 0; draw < 50; ++draw) {
    const MarketSpec m{MarketKind::StochasticTrend, 0.002 + 0.3 * u(gen), 0.5 * u(gen)};
    StrategySpec s{0.002 + 0.5 * u(gen), static_cast<long>(300 * u(gen)), 1 + static_cast<long>(299 * u(gen)),
                   0.0, 1.0};
    if (draw % 10 == 0) s.eta = m.lambda;  // exercise the p = q branch
    const long t_tilde = s.total();
    CHECK(rel(mean_incremental_pnl(m, s, t_tilde), mean_incremental_pnl_numeric(m, s, t_tilde)) <
          (m.beta0 == 0.0 ? 1.0 : 1e-8));
    if (t_tilde >= 2)
      CHECK(rel(variance_incremental_pnl(m, s, t_tilde), variance_incremental_pnl_numeric(m, s, t_tilde)) < 1e-8);
  }
}

TEST_CASE("incremental moments match the quadratic-form cumulants") {
  const StrategySpec s{0.02, 150, 1, 0.0, 1.0};
  const auto form = build_pnl_matrix(s, PnlKind::Incremental);
  const auto k = cumulants(spectrum(form, covariance(kTrendMarket, s.total())));
  CHECK(k.mean() == doctest::Approx(mean_incremental_pnl(kTrendMarket, s, s.total())).epsilon(1e-10));
  CHECK(k.variance() == doctest::Approx(variance_incremental_pnl(kTrendMarket, s, s.total())).epsilon(1e-10));
}

TEST_CASE("eta = lambda formulas are continuous") {
  const MarketSpec m{MarketKind::StochasticTrend, 0.01, 0.1};
  for (long t : {2L, 3L, 10L, 150L, 2000L}) {
    const auto eq = strategy(0.01);
    const auto near = strategy(0.01 + 1e-6);
    CHECK(close(mean_incremental_pnl(m, eq, t), mean_incremental_pnl(m, near, t), 1e-4));
    CHECK(close(variance_incremental_pnl(m, eq, t), variance_incremental_pnl(m, near, t), 1e-4));
    CHECK(close(mean_turnover(m, strategy(0.01, 0.1), t), mean_turnover(m, strategy(0.01 + 1e-6, 0.1), t), 1e-4));
    CHECK(close(pnl_variogram_stationary(m, eq, t), pnl_variogram_stationary(m, near, t), 1e-4));
  }
  CHECK(rel(pnl_variogram_limit(m, strategy(0.01)), pnl_variogram_limit(m, strategy(0.01 + 1e-6))) < 1e-4);
}

TEST_CASE("mean converges geometrically to the stationary value") {
  for (double eta : {0.01, 0.03, 0.005}) {
    const auto s = strategy(eta);
    const double p = 1.0 - eta;
    const double q = 1.0 - kTrendMarket.lambda;
    const double rate = std::max(p * q, q * q);
    const double target = mean_stationary_pnl(kTrendMarket, s);
    double prev_gap = target - mean_incremental_pnl(kTrendMarket, s, 1);
    for (long t = 2; t <= 3000; ++t) {
      const double gap = target - mean_incremental_pnl(kTrendMarket, s, t);
      CHECK(gap >= -1e-15);
      CHECK(gap <= prev_gap + 1e-15);
      prev_gap = gap;
    }
    const double g1 = target - mean_incremental_pnl(kTrendMarket, s, 1500);
    const double g2 = target - mean_incremental_pnl(kTrendMarket, s, 1600);
    CHECK(std::pow(g2 / g1, 1.0 / 100) == doctest::Approx(rate).epsilon(2e-3));
  }
}

TEST_CASE("turnover") {
  CHECK(mean_turnover_stationary(kTrendMarket, strategy(0.01, 0.0)) == 0.0);
  CHECK(mean_turnover(kTrendMarket, strategy(0.01, 0.0), 40) == 0.0);
  const auto small = strategy(0.01, 0.05, 1.0);
  CHECK(mean_turnover_small_eta(small) == doctest::Approx(2.0 / std::sqrt(std::numbers::pi) * 0.05 * 0.1).epsilon(1e-12));
  CHECK(mean_turnover_small_eta(small) == doctest::Approx(0.0056419).epsilon(1e-5));
  SUBCASE("alpha = 2 stationary closed form") {
    const double eta = 0.02;
    const double p = 1.0 - eta;
    const double q = 1.0 - kTrendMarket.lambda;
    const double g2 = gamma_of(eta) * gamma_of(eta);
    const double b2 = 0.01;
    // theta Gamma(3/2)/sqrt(pi) (2 g^2) X = theta g^2 X.
    const double x = 2.0 / (1.0 + p) + 2.0 * b2 * (1.0 - q * q) / ((1.0 - p * q) * (1.0 + p) * (1.0 + q));
    CHECK(mean_turnover_stationary(kTrendMarket, strategy(eta, 0.3, 2.0)) ==
          doctest::Approx(0.3 * g2 * x).epsilon(1e-12));
  }
  SUBCASE("proportional to theta and consistent with the signal increment variance") {
    const auto s1 = strategy(0.02, 0.1, 1.5);
    const auto s2 = strategy(0.02, 0.2, 1.5);
    CHECK(mean_turnover(kTrendMarket, s2, 77) == doctest::Approx(2.0 * mean_turnover(kTrendMarket, s1, 77)));
    const double v = signal_increment_variance_numeric(kTrendMarket, 0.02, 77);
    const double expected =
        0.1 * std::tgamma(1.25) / std::sqrt(std::numbers::pi) * std::pow(2.0 * v, 0.75);
    CHECK(mean_turnover(kTrendMarket, s1, 77) == doctest::Approx(expected).epsilon(1e-10));
    CHECK(mean_turnover(kTrendMarket, s1, 40000) ==
          doctest::Approx(mean_turnover_stationary(kTrendMarket, s1)).epsilon(1e-10));
  }
  CHECK_THROWS_AS(mean_turnover(kTrendMarket, strategy(0.02, 0.1), 1), Error);
}

TEST_CASE("pnl variogram") {
  const MarketSpec iid{MarketKind::StochasticTrend, 0.01, 0.0};
  for (long t : {1L, 2L, 50L, 1000L}) CHECK(pnl_variogram_stationary(iid, strategy(0.05), t) == doctest::Approx(1.0).epsilon(1e-13));
  CHECK(pnl_variogram_stationary(kTrendMarket, strategy(0.03), 1) == doctest::Approx(1.0).epsilon(1e-13));
  const double exact = pnl_variogram_limit(kTrendMarket, strategy(0.01));
  CHECK(pnl_variogram_limit_small(kTrendMarket) == doctest::Approx(3.25).epsilon(1e-12));
  CHECK(rel(exact, 3.25) < 0.02);
  CHECK(pnl_variogram_stationary(kTrendMarket, strategy(0.01), 200000) == doctest::Approx(exact).epsilon(1e-3));
  // Direct oracle: Var(sum of t stationary increments) / (t v_inf) from the quadratic form.
  const MarketSpec m{MarketKind::StochasticTrend, 0.1, 0.3};
  const StrategySpec s{0.15, 400, 12, 0.0, 1.0};
  const auto k = cumulants(spectrum(build_pnl_matrix(s, PnlKind::Cumulative), covariance(m, s.total())));
  CHECK(k.variance() / (12.0 * variance_stationary_pnl(m, s)) ==
        doctest::Approx(pnl_variogram_stationary(m, s, 12)).epsilon(1e-9));
}

TEST_CASE("net risk adjusted pnl") {
  CHECK(net_risk_adjusted_pnl({MarketKind::StochasticTrend, 0.01, 0.0}, strategy(0.01), 0.02, true) == 0.0);
  double peak = 0.0;
  for (int i = 0; i < 2000; ++i) {
    const double eta = 1e-3 * std::pow(100.0, i / 1999.0);
    peak = std::max(peak, net_risk_adjusted_pnl(kTrendMarket, strategy(eta), eta, true));
  }
  CHECK(std::abs(peak - 0.8) < 0.05);
  for (double eta : {0.003, 0.01, 0.05}) {
    const double a = net_risk_adjusted_pnl(kTrendMarket, strategy(eta, 0.05), eta, false);
    const double b = net_risk_adjusted_pnl(kTrendMarket, strategy(eta, 0.15), eta, false);
    CHECK(b < a);
    CHECK(net_risk_adjusted_pnl_approx(kTrendMarket, 0.15, eta, false) <
          net_risk_adjusted_pnl_approx(kTrendMarket, 0.05, eta, false));
  }
  CHECK(net_risk_adjusted_pnl(kTrendMarket, strategy(0.01), 0.01, true) ==
        doctest::Approx(kAnnualization * net_risk_adjusted_pnl(kTrendMarket, strategy(0.01), 0.01, false)));
}

TEST_CASE("profitability matches the cost bound") {
  std::mt19937_64 gen(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 400; ++i) {
    const MarketSpec m{MarketKind::StochasticTrend, 0.001 + 0.049 * u(gen), 0.2 * u(gen)};
    const double eta = 0.001 + 0.049 * u(gen);
    const double bound = max_cost_bound(m, eta);
    const double theta = 2.0 * bound * u(gen);
    if (std::abs(theta - bound) < 1e-12) continue;
    CHECK((net_risk_adjusted_pnl_approx(m, theta, eta, false) > 0.0) == (theta < bound));
  }
}

TEST_CASE("cost bound") {
  CHECK(max_cost_bound({MarketKind::StochasticTrend, 0.01, 0.0}, 0.01) == 0.0);
  CHECK(max_cost_bound(kTrendMarket, 0.01) == doctest::Approx(0.62666).epsilon(1e-5));
  CHECK(max_cost_bound({MarketKind::StochasticTrend, 0.01, 0.2}, 0.01) ==
        doctest::Approx(4.0 * max_cost_bound(kTrendMarket, 0.01)).epsilon(1e-14));
}

TEST_CASE("optimal eta") {
  CHECK(optimal_eta(kTrendMarket, 0.0) == doctest::Approx(0.01 * std::sqrt(3.0)).epsilon(1e-12));
  CHECK(optimal_eta({MarketKind::StochasticTrend, 0.02, 0.0}, 0.0) == doctest::Approx(0.02).epsilon(1e-12));
  const double lo = 1e-4;
  const double hi = 0.2;
  const int points = 10000;
  const double grid_ratio = std::pow(hi / lo, 1.0 / (points - 1));
  const double a0 = grid_argmax(kTrendMarket, 0.0, points, lo, hi);
  CHECK(std::abs(std::log(a0 / optimal_eta(kTrendMarket, 0.0))) <= std::log(grid_ratio));
  for (double theta : {0.05, 0.15}) {
    const double root = optimal_eta(kTrendMarket, theta);
    CHECK(rel(root, grid_argmax(kTrendMarket, theta, points, lo, hi)) < 0.02);
    CHECK(root < optimal_eta(kTrendMarket, 0.0));
  }
  CHECK(optimal_eta(kTrendMarket, 0.15) < optimal_eta(kTrendMarket, 0.05));
  try {
    optimal_eta(kTrendMarket, 2.0);
    FAIL("expected no_profitable_eta");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::no_profitable_eta);
  }
}

TEST_CASE("eigenvalue asymptotics") {
  const auto lim = eigen_asymptotics_long(0.01);
  CHECK(lim.mu_plus == doctest::Approx(28.213).epsilon(1e-4));
  CHECK(lim.mu_minus == doctest::Approx(-3.5801).epsilon(1e-4));
  CHECK(lim.mu_plus / lim.mu_minus == doctest::Approx(-8.0).epsilon(0.02));
  const auto small = eigen_asymptotics_long_small_eta(0.01);
  CHECK(small.mu_plus == doctest::Approx(std::sqrt(800.0)));
  CHECK(small.mu_minus == doctest::Approx(-1.0 / std::sqrt(0.08)));
  CHECK(rel(small.mu_plus, lim.mu_plus) < 0.015);
  CHECK(rel(small.mu_minus, lim.mu_minus) < 0.015);
  CHECK_THROWS_AS(eigen_asymptotics_long(1.0), Error);

  const auto one = eigen_asymptotics_short(0.01, 1);
  CHECK(one.mu_plus == 1.0);
  CHECK(one.mu_minus == -1.0);
  const auto two = eigen_asymptotics_short(0.01, 2);
  CHECK(two.mu_plus == doctest::Approx(1.4849).epsilon(1e-4));
  CHECK(two.mu_minus == doctest::Approx(-1.3435).epsilon(1e-4));
  CHECK(eigen_asymptotics_short(0.01, 4).mu_plus == doctest::Approx(2.2121).epsilon(1e-4));
  for (long t : {2L, 4L}) {
    const auto spec = spectrum(build_pnl_matrix({0.01, 2000, t, 0.0, 1.0}, PnlKind::Cumulative));
    const auto conj = eigen_asymptotics_short(0.01, t);
    CHECK(rel(spec.mu_plus(), conj.mu_plus) < 0.01);
    CHECK(rel(spec.mu_minus(), conj.mu_minus) < 0.01);
  }
}

TEST_CASE("cyclic spectrum limit") {
  const double g = gamma_of(0.01);
  CHECK(cyclic_spectrum_limit(0.01, 1.0) == doctest::Approx(2.0 * g / 0.01).epsilon(1e-11));
  CHECK(cyclic_spectrum_limit(0.01, 1.0) == doctest::Approx(28.213).epsilon(1e-4));
  CHECK(cyclic_spectrum_limit(0.01, 0.0) == doctest::Approx(-g / 0.995).epsilon(1e-11));
  CHECK(cyclic_spectrum_limit(0.01, 0.0) == doctest::Approx(-0.14178).epsilon(1e-4));
  // Bulk of the t0 = 0 spectrum against the image of uniform indices.
  const double eta = 0.05;
  const long t = 2000;
  const auto ev = spectrum(build_pnl_matrix({eta, 0, t, 0.0, 1.0}, PnlKind::Cumulative)).eigenvalues();
  const double span = ev.back() - ev.front();
  double worst = 0.0;
  for (long i = t / 20; i < t - t / 20; ++i) {
    const double model = cyclic_spectrum_limit(eta, (i + 0.5) / t);
    worst = std::max(worst, std::abs(ev[i] - model) / std::max(std::abs(model), 0.03 * span));
  }
  CHECK(worst < 0.03);
}

TEST_CASE("analytics report") {
  const auto rep = analytics_report(kTrendMarket, strategy(0.01, 0.05));
  CHECK_FALSE(rep.numeric_fallback);
  CHECK(rep.mean_stationary > 0.0);
  CHECK(rep.variance_stationary > 0.0);
  CHECK(rep.turnover_stationary > 0.0);
  CHECK(rep.mu_minus_inf < 0.0);
  CHECK(rep.mu_plus_inf > 0.0);
  REQUIRE(rep.eta_opt.has_value());
  CHECK(*rep.eta_opt == doctest::Approx(optimal_eta(kTrendMarket, 0.05)));
  CHECK(rep.theta_max == doctest::Approx(max_cost_bound(kTrendMarket, 0.01)));

  const MarketSpec ar{MarketKind::AutoregressiveTrend, 0.05, 0.1};
  const auto fallback = analytics_report(ar, strategy(0.02, 0.1));
  CHECK(fallback.numeric_fallback);
  CHECK(fallback.mean_incremental == doctest::Approx(mean_incremental_pnl_numeric(ar, strategy(0.02), 500)));
  CHECK(std::isnan(fallback.mean_stationary));
  CHECK_THROWS_AS(mean_incremental_pnl(ar, strategy(0.02), 10), Error);
}
