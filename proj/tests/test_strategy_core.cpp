#include "doctest.h"

#include <cmath>
#include <random>

#include "trendfollow/error.hpp"
#include "trendfollow/market_model.hpp"
#include "trendfollow/strategy_core.hpp"

using namespace trendfollow;

namespace {

std::vector<double> gaussian_path(std::size_t n, unsigned seed) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> nd;
  std::vector<double> r(n);
  for (auto& x : r) x = nd(gen);
  return r;
}

double direct_pnl(const std::vector<double>& r, const StrategySpec& spec, PnlKind kind) {
  const auto s = signal_series(r, spec.eta);
  if (kind == PnlKind::Incremental) return r[spec.total() - 1] * s[spec.total() - 1];
  double sum = 0.0;
  for (long k = spec.t0; k < spec.total(); ++k) sum += r[k] * s[k];
  return sum;
}

}  // namespace

TEST_CASE("gamma") {
  CHECK(gamma_of(1.0) == 1.0);
  CHECK(gamma_of(0.01) == doctest::Approx(0.141067).epsilon(1e-6));
  CHECK(gamma_of(0.5) == doctest::Approx(std::sqrt(0.75)).epsilon(1e-15));
  CHECK_THROWS_AS(gamma_of(0.0), Error);
  CHECK_THROWS_AS(gamma_of(1.2), Error);
}

TEST_CASE("signal impulse response") {
  const double eta = 0.3;
  const auto s = signal_series(std::vector<double>{1, 0, 0, 0, 0}, eta);
  const double g = gamma_of(eta);
  CHECK(s[0] == 0.0);
  CHECK(s[1] == doctest::Approx(g));
  CHECK(s[2] == doctest::Approx(g * 0.7));
  CHECK(s[4] == doctest::Approx(g * 0.7 * 0.7 * 0.7));
}

TEST_CASE("signal with eta = 1 is the previous return") {
  const auto r = gaussian_path(20, 1);
  const auto s = signal_series(r, 1.0);
  CHECK(s[0] == 0.0);
  for (std::size_t t = 1; t < r.size(); ++t) CHECK(s[t] == r[t - 1]);
}

TEST_CASE("signal recursion equals gamma E r") {
  const double eta = 0.05;
  const auto r = gaussian_path(300, 2);
  const auto s = signal_series(r, eta);
  const Eigen::VectorXd rv = Eigen::Map<const Eigen::VectorXd>(r.data(), r.size());
  const Eigen::VectorXd sv = gamma_of(eta) * build_ema_matrix(1.0 - eta, 300).matrix() * rv;
  for (std::size_t t = 0; t < r.size(); ++t)
    CHECK(std::abs(s[t] - sv(t)) <= 1e-12 * (1.0 + std::abs(sv(t))));
}

TEST_CASE("signal is causal") {
  auto r = gaussian_path(50, 3);
  const auto before = signal_series(r, 0.1);
  r[20] += 5.0;
  const auto after = signal_series(r, 0.1);
  for (int k = 0; k <= 20; ++k) CHECK(before[k] == after[k]);
  CHECK(before[21] != after[21]);
}

TEST_CASE("pnl matrix structure") {
  SUBCASE("incremental, two steps, eta = 1") {
    const auto m = build_pnl_matrix({1.0, 1, 1, 0.0, 1.0}, PnlKind::Incremental).matrix();
    CHECK(m.rows() == 2);
    CHECK(m(0, 1) == 1.0);
    CHECK(m(1, 0) == 1.0);
    CHECK(m(0, 0) == 0.0);
    CHECK(m(1, 1) == 0.0);
  }
  SUBCASE("cumulative form: symmetric, zero diagonal, zero leading block") {
    const StrategySpec spec{0.05, 10, 15, 0.0, 1.0};
    const auto m = build_pnl_matrix(spec, PnlKind::Cumulative).matrix();
    CHECK((m - m.transpose()).cwiseAbs().maxCoeff() == 0.0);
    CHECK(m.trace() == 0.0);
    CHECK(m.topLeftCorner(10, 10).isZero(0.0));
  }
  SUBCASE("incremental form touches only row and column t~") {
    const StrategySpec spec{0.05, 10, 5, 0.0, 1.0};
    Eigen::MatrixXd m = build_pnl_matrix(spec, PnlKind::Incremental).matrix();
    m.row(14).setZero();
    m.col(14).setZero();
    CHECK(m.isZero(0.0));
  }
  SUBCASE("cumulative with t = 1 equals incremental at t0 + 1") {
    const StrategySpec spec{0.02, 30, 1, 0.0, 1.0};
    CHECK(build_pnl_matrix(spec, PnlKind::Cumulative).matrix() ==
          build_pnl_matrix(spec, PnlKind::Incremental).matrix());
  }
  SUBCASE("cumulative form is the sum of incremental forms") {
    const StrategySpec spec{0.1, 4, 6, 0.0, 1.0};
    Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(10, 10);
    for (long k = 1; k <= 6; ++k) {
      const auto inc = build_pnl_matrix({0.1, 4 + k - 1, 1, 0.0, 1.0}, PnlKind::Incremental).matrix();
      sum.topLeftCorner(inc.rows(), inc.cols()) += inc;
    }
    CHECK((sum - build_pnl_matrix(spec, PnlKind::Cumulative).matrix()).cwiseAbs().maxCoeff() < 1e-15);
  }
}

TEST_CASE("quadratic form equals the direct sum on random paths") {
  const StrategySpec spec{0.01, 200, 300, 0.0, 1.0};
  const auto cum = build_pnl_matrix(spec, PnlKind::Cumulative);
  const auto inc = build_pnl_matrix(spec, PnlKind::Incremental);
  for (unsigned seed = 0; seed < 100; ++seed) {
    const auto r = gaussian_path(500, 100 + seed);
    const double dc = direct_pnl(r, spec, PnlKind::Cumulative);
    const double di = direct_pnl(r, spec, PnlKind::Incremental);
    CHECK(std::abs(cum.evaluate(r) - dc) <= 1e-10 * (1.0 + std::abs(dc)));
    CHECK(std::abs(inc.evaluate(r) - di) <= 1e-10 * (1.0 + std::abs(di)));
  }
  CHECK_THROWS_AS(cum.evaluate(std::vector<double>(499, 0.0)), Error);
}

TEST_CASE("pnl from path") {
  SUBCASE("hand evaluation") {
    const auto p = pnl_from_path(std::vector<double>{1, 1}, {1.0, 0, 2, 0.0, 1.0});
    REQUIRE(p.incremental.size() == 2);
    CHECK(p.incremental[0] == 0.0);
    CHECK(p.incremental[1] == 1.0);
    CHECK(p.cumulative[0] == 0.0);
    CHECK(p.cumulative[1] == 1.0);
  }
  SUBCASE("zero returns") {
    const auto p = pnl_from_path(std::vector<double>(30, 0.0), {0.1, 10, 20, 0.0, 1.0});
    for (double v : p.cumulative) CHECK(v == 0.0);
  }
  SUBCASE("running sum ends at the quadratic form") {
    const StrategySpec spec{0.03, 40, 60, 0.0, 1.0};
    const auto r = gaussian_path(100, 9);
    const auto p = pnl_from_path(r, spec);
    const double q = build_pnl_matrix(spec, PnlKind::Cumulative).evaluate(r);
    CHECK(p.cumulative.back() == doctest::Approx(q).epsilon(1e-12));
  }
  SUBCASE("short path") {
    CHECK_THROWS_AS(pnl_from_path(std::vector<double>(5, 0.0), {0.1, 3, 3, 0.0, 1.0}), Error);
  }
}

TEST_CASE("pnl is linear in gamma") {
  // With the scale fixed by eta, doubling the signal doubles the P&L.
  const StrategySpec spec{0.2, 5, 10, 0.0, 1.0};
  const auto r = gaussian_path(15, 4);
  auto s = signal_series(r, spec.eta);
  double base = 0.0;
  double doubled = 0.0;
  for (long k = spec.t0; k < spec.total(); ++k) {
    base += r[k] * s[k];
    doubled += r[k] * (2.0 * s[k]);
  }
  const Eigen::MatrixXd m2 = 2.0 * build_pnl_matrix(spec, PnlKind::Cumulative).matrix();
  const Eigen::VectorXd rv = Eigen::Map<const Eigen::VectorXd>(r.data(), r.size());
  CHECK(0.5 * rv.dot(m2 * rv) == doctest::Approx(doubled).epsilon(1e-12));
  CHECK(doubled == doctest::Approx(2.0 * base).epsilon(1e-15));
}

TEST_CASE("strategy validation") {
  CHECK_THROWS_AS((StrategySpec{0.0, 1, 1, 0.0, 1.0}).validate(), Error);
  CHECK_THROWS_AS((StrategySpec{0.1, -1, 1, 0.0, 1.0}).validate(), Error);
  CHECK_THROWS_AS((StrategySpec{0.1, 1, 0, 0.0, 1.0}).validate(), Error);
  CHECK_THROWS_AS((StrategySpec{0.1, 1, 1, -0.1, 1.0}).validate(), Error);
  CHECK_THROWS_AS((StrategySpec{0.1, 1, 1, 0.0, 0.0}).validate(), Error);
  CHECK_NOTHROW((StrategySpec{1.0, 0, 1, 0.0, 2.0}).validate());
}
