#include "doctest.h"

#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "trendfollow/csv_io.hpp"
#include "trendfollow/error.hpp"
#include "trendfollow/montecarlo.hpp"
#include "trendfollow/normal.hpp"
#include "trendfollow/run_config.hpp"
#include "trendfollow/table.hpp"

using namespace trendfollow;
namespace fs = std::filesystem;

namespace {

const fs::path kScratch = TEST_SCRATCH_DIR;

struct Run {
  int code = -1;
  std::string out;
  std::string err;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void spit(const fs::path& p, const std::string& text) {
  fs::create_directories(p.parent_path());
  std::ofstream(p, std::ios::binary) << text;
}

Run run(const std::string& args, const std::string& env = "") {
  fs::create_directories(kScratch);
  const auto out = kScratch / "stdout.txt";
  const auto err = kScratch / "stderr.txt";
  const std::string cmd = env + " '" + std::string(TRENDFOLLOW_CLI) + "' " + args + " >'" + out.string() +
                          "' 2>'" + err.string() + "'";
  const int status = std::system(cmd.c_str());
  Run r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = slurp(out);
  r.err = slurp(err);
  return r;
}

Report parse(const std::string& text) {
  std::istringstream in(text);
  return read_csv_report(in);
}

const Table& table(const Report& r, const std::string& name) {
  const Table* t = r.find(name);
  REQUIRE(t != nullptr);
  return *t;
}

std::size_t column(const Table& t, const std::string& name) {
  for (std::size_t i = 0; i < t.columns.size(); ++i)
    if (t.columns[i] == name) return i;
  FAIL("no column " << name);
  return 0;
}

double number(const Cell& c) {
  if (const auto* d = std::get_if<double>(&c)) return *d;
  if (const auto* l = std::get_if<long>(&c)) return static_cast<double>(*l);
  FAIL("cell is not numeric");
  return 0.0;
}

double lookup(const Table& t, const std::string& name) {
  for (const auto& row : t.rows)
    if (std::get<std::string>(row[0]) == name) return number(row[1]);
  FAIL("no row " << name);
  return 0.0;
}

std::string dated(long i) {
  // 28-day months keep every generated date valid and strictly increasing.
  char date[16];
  std::snprintf(date, sizeof date, "%04ld-%02ld-%02ld", 1900 + i / 336, 1 + (i / 28) % 12, 1 + i % 28);
  return date;
}

std::string model_returns_csv(double lambda, double beta0, long rows, std::uint64_t seed) {
  SimulationConfig cfg;
  cfg.market = {MarketKind::StochasticTrend, lambda, beta0};
  cfg.strategy = {0.01, 0, rows, 0.0, 1.0};
  cfg.n_paths = 1;
  cfg.seed = seed;
  cfg.stationary_start = true;
  const Eigen::MatrixXd r = simulate_market(cfg, 0, 1);
  std::ostringstream out;
  out << "date,return\n";
  for (long i = 0; i < rows; ++i) out << dated(i) << ',' << format_number(r(i, 0)) << '\n';
  return out.str();
}

}  // namespace

TEST_CASE("run config round trip") {
  RunConfig c;
  CHECK(parse_run_config(render_run_config(c)) == c);
  c.command = "simulate";
  c.model = MarketKind::AutoregressiveTrend;
  c.lambda = 0.123456789012345;
  c.beta0 = 1e-7;
  c.kind = PnlKind::Incremental;
  c.stationary = true;
  c.input = "data/prices.csv";
  c.format = OutputFormat::Json;
  c.seed = 18446744073709551615ull;
  c.antithetic = true;
  c.k_threshold = 3.0;
  CHECK(parse_run_config(render_run_config(c)) == c);
  for (const auto& key : config_keys()) CHECK_FALSE(key.help.empty());
}

TEST_CASE("run config parsing") {
  const auto c = parse_run_config("# comment\n\n  lambda = 0.5  # trailing\neta=0.2\r\nstationary = true\n");
  CHECK(c.lambda == 0.5);
  CHECK(c.eta == 0.2);
  CHECK(c.stationary);
  CHECK_THROWS_AS(parse_run_config("lambda 0.5\n"), Error);
  CHECK_THROWS_AS(parse_run_config("lamda = 0.5\n"), Error);
  CHECK_THROWS_AS(parse_run_config("lambda = abc\n"), Error);
  CHECK_THROWS_AS(parse_run_config("model = garch\n"), Error);
  CHECK_THROWS_AS(parse_run_config("stationary = maybe\n"), Error);
}

TEST_CASE("series csv reader") {
  SUBCASE("prices with BOM and CRLF") {
    std::istringstream in("\xEF\xBB\xBF" "date,price\r\n2020-01-01,10.5\r\n2020-01-02,11\r\n");
    const auto s = read_series_csv(in);
    CHECK(s.kind == SeriesKind::Price);
    CHECK(s.values == std::vector<double>{10.5, 11.0});
    CHECK(s.dates.back() == "2020-01-02");
  }
  SUBCASE("returns with timestamps") {
    std::istringstream in("date,return\n2020-01-01T10:00,0.1\n2020-01-01T11:00,-0.2\n");
    const auto s = read_series_csv(in);
    CHECK(s.kind == SeriesKind::Return);
    CHECK(s.values[1] == -0.2);
  }
  const auto fails_at = [](const std::string& text, const std::string& where) {
    std::istringstream in(text);
    try {
      read_series_csv(in, "x.csv");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::malformed_input);
      CHECK(std::string(e.what()).find(where) != std::string::npos);
      return;
    }
    FAIL("accepted malformed input: " << text);
  };
  fails_at("", "empty input");
  fails_at("date,price\n", "no data rows");
  fails_at("day,price\n2020-01-01,1\n", "x.csv:1");
  fails_at("date,price\n2020-01-01,1\n2020-01-02,\n", "x.csv:3");
  fails_at("date,price\n2020-01-01,1\n2020-13-02,2\n", "x.csv:3");
  fails_at("date,price\n2020-01-02,1\n2020-01-01,2\n", "x.csv:3");
  fails_at("date,price\n2020-01-01,1,2\n", "x.csv:2");
  fails_at("date,price\n2020-01-01,1e\n", "x.csv:2");
}

TEST_CASE("report tables round trip") {
  Report r;
  r.meta = {{"command", "test"}, {"note", "a: b"}};
  Table t{"mixed", {"name", "x", "n", "missing"}, {}};
  t.add_row({std::string("plain"), 0.1, 3L, NotAvailable{}});
  t.add_row({std::string("needs, \"quotes\""), -2.5e-300, -7L, NotAvailable{}});
  t.add_row({std::string("NA"), 1.0, 0L, std::string("text")});
  t.add_row({std::string("specials"), std::nan(""), 1L, HUGE_VAL});
  r.tables.push_back(t);
  CHECK_THROWS_AS(r.tables[0].add_row({1.0}), Error);

  std::ostringstream csv;
  write_csv(csv, r);
  const auto back = parse(csv.str());
  REQUIRE(back.tables.size() == 1);
  CHECK(back.meta == r.meta);
  const auto& b = back.tables[0];
  CHECK(b.columns == t.columns);
  for (std::size_t i = 0; i < 3; ++i) CHECK(b.rows[i] == t.rows[i]);
  CHECK(std::isnan(std::get<double>(b.rows[3][1])));
  CHECK(std::get<double>(b.rows[3][3]) == HUGE_VAL);

  std::ostringstream json;
  write_json(json, r);
  std::istringstream jin(json.str());
  const auto jb = read_json_report(jin);
  CHECK(jb.meta == r.meta);
  for (std::size_t i = 0; i < 3; ++i) CHECK(jb.tables[0].rows[i] == t.rows[i]);

  CHECK(format_number(1.0) == "1.0");
  CHECK(format_number(0.1) == "0.1");
  CHECK(format_number(1e300) == "1e+300");
  CHECK(format_number(-0.0) == "-0.0");
}

TEST_CASE("cli exit codes") {
  CHECK(run("--help").code == 0);
  CHECK(run("").code == 2);
  CHECK(run("report --lambda 0").code == 2);
  CHECK(run("report --lambda abc").code == 2);
  CHECK(run("report --no-such-flag 1").code == 2);
  spit(kScratch / "empty.csv", "");
  const auto empty = run("calibrate --input '" + (kScratch / "empty.csv").string() + "'");
  CHECK(empty.code == 2);
  CHECK(empty.err.find("empty input") != std::string::npos);
  CHECK(run("calibrate").code == 2);
  CHECK(run("simulate --paths 0").code == 2);
  // A zero quadratic form has no distribution to invert.
  CHECK(run("distribution --beta0 0 --t0 0 --t 1 --kind incremental").code == 4);

  // A slow sinusoidal drift: the variogram grows more linearly than any model curve.
  std::ostringstream drift;
  drift << "date,return\n";
  std::mt19937_64 gen(3);
  std::normal_distribution<double> nd;
  const long n = 20000;
  for (long i = 0; i < n; ++i)
    drift << dated(i) << ',' << format_number(nd(gen) + 0.5 * std::sin(2.0 * M_PI * i / n)) << '\n';
  spit(kScratch / "drift.csv", drift.str());
  const auto trending = run("calibrate --input '" + (kScratch / "drift.csv").string() + "'");
  CHECK(trending.code == 3);
}

TEST_CASE("cli report") {
  const auto r = run("report --eta-points 400");
  REQUIRE(r.code == 0);
  const auto rep = parse(r.out);
  const auto& sweep = table(rep, "sweep");
  const auto ci = column(sweep, "net_risk_adjusted");
  double best = -1.0, arg = 0.0;
  for (const auto& row : sweep.rows)
    if (number(row[ci]) > best) best = number(row[ci]), arg = number(row[0]);
  CHECK(std::abs(best - 0.8) < 0.05);
  CHECK(std::abs(arg / 0.017321 - 1.0) < 0.05);
  CHECK(lookup(table(rep, "summary"), "eta_opt") == doctest::Approx(0.017320508).epsilon(1e-8));

  const auto peak = [](const std::string& args) {
    const auto t = table(parse(run(args).out), "sweep");
    const auto ci = column(t, "net_risk_adjusted");
    double best = -1e9, arg = 0.0;
    for (const auto& row : t.rows)
      if (number(row[ci]) > best) best = number(row[ci]), arg = number(row[0]);
    return std::pair{best, arg};
  };
  const auto low = peak("report --theta 0.05");
  const auto high = peak("report --theta 0.15");
  CHECK(high.first < low.first);
  CHECK(high.second < low.second);

  const auto zero = parse(run("report --beta0 0").out);
  CHECK(lookup(table(zero, "summary"), "mean_stationary") == 0.0);
  CHECK(lookup(table(zero, "summary"), "mean_incremental") == 0.0);
  const auto& prof = table(zero, "time_profile");
  for (const auto& row : prof.rows) CHECK(number(row[1]) == 0.0);

  const auto ar = parse(run("report --model autoregressive --lambda 0.05 --beta0 0.1").out);
  CHECK(lookup(table(ar, "summary"), "numeric_fallback") == 1.0);
  CHECK(ar.find("sweep") == nullptr);
}

TEST_CASE("cli distribution") {
  const auto r = run("distribution --beta0 0");
  REQUIRE(r.code == 0);
  const auto rep = parse(r.out);
  const auto& q = table(rep, "quantiles");
  for (const auto& row : q.rows)
    if (number(row[0]) == 0.5) CHECK(number(row[1]) < 0.0);
  CHECK(std::abs(lookup(table(rep, "summary"), "kappa1")) < 1e-9);
  const auto& d = table(rep, "density");
  CHECK(d.rows.size() >= 2001);
  CHECK(d.rows.size() <= 2101);

  const auto st = parse(run("distribution --beta0 0 --stationary --density-points 4001").out);
  const auto& sd = table(st, "density");
  double worst = 0.0;
  const double step = lookup(table(st, "summary"), "grid_step");
  for (const auto& row : sd.rows) {
    const double z = number(row[0]);
    if (std::abs(z) < 2.0 * step || std::abs(z) > 8.0) continue;
    worst = std::max(worst, std::abs(number(row[1]) - std::cyl_bessel_k(0.0, std::abs(z)) / M_PI));
  }
  CHECK(worst < 1e-6);
  for (const auto& row : table(st, "quantiles").rows)
    if (number(row[0]) == 0.5) CHECK(std::abs(number(row[1])) < 1e-9);
}

TEST_CASE("cli simulate") {
  const auto a = run("simulate --paths 2000 --seed 9");
  const auto b = run("simulate --paths 2000 --seed 9");
  REQUIRE(a.code == 0);
  CHECK((a.out == b.out));
  CHECK(a.out.find("# sampler: " + std::string(kGaussianSampler)) != std::string::npos);
  // Sampled statistics do not depend on the thread count.
  const auto threads = parse(run("simulate --paths 2000 --seed 9", "TRENDFOLLOW_THREADS=3").out);
  const auto serial = parse(run("simulate --paths 2000 --seed 9 --threads 1").out);
  CHECK((table(threads, "statistics").rows == table(serial, "statistics").rows));
  CHECK((table(threads, "quantiles").rows == table(serial, "quantiles").rows));

  const auto one = parse(run("simulate --paths 1").out);
  for (const auto& row : table(one, "comparison").rows) {
    CHECK(std::holds_alternative<NotAvailable>(row[2]));
    CHECK(std::holds_alternative<NotAvailable>(row[5]));
  }

  const auto def = run("simulate");
  REQUIRE(def.code == 0);
  const auto def_report = parse(def.out);
  const auto& cmp = table(def_report, "comparison");
  CHECK(cmp.rows.size() >= 10);
  for (const auto& row : cmp.rows) CHECK(std::get<std::string>(row[5]) == "pass");

  const auto dump = parse(run("simulate --paths 3 --t0 2 --t 3 --dump-paths 2").out);
  CHECK(table(dump, "paths").rows.size() == 10);
}

TEST_CASE("cli output formats and config precedence") {
  const auto dir = kScratch / "out_dir";
  fs::remove_all(dir);
  REQUIRE(run("eigen --t0 20 --t 30 --format json --out '" + dir.string() + "/'").code == 0);
  for (const char* name : {"extremes.json", "eigenvalues.json", "cyclic_limit.json"}) {
    REQUIRE(fs::exists(dir / name));
    std::ifstream in(dir / name);
    const auto rep = read_json_report(in);
    CHECK(rep.tables.size() == 1);
  }
  const auto file = kScratch / "variogram.csv";
  REQUIRE(run("variogram --lag-max 50 --out '" + file.string() + "'").code == 0);
  const auto vg = parse(slurp(file));
  CHECK(table(vg, "variogram").rows.size() == 50);
  CHECK(number(table(vg, "variogram").rows[0][1]) == doctest::Approx(1.0).epsilon(1e-12));

  spit(kScratch / "run.cfg", "lambda = 0.02\neta = 0.03\ntheta = 0.1\n");
  const auto cfg = parse(run("report --config '" + (kScratch / "run.cfg").string() + "' --eta 0.05").out);
  const auto meta = [&](const std::string& k) {
    for (const auto& [key, v] : cfg.meta)
      if (key == k) return v;
    return std::string();
  };
  CHECK(meta("lambda") == "0.02");
  CHECK(meta("eta") == "0.05");
  CHECK(meta("theta") == "0.1");
  CHECK(run("report --config '" + (kScratch / "missing.cfg").string() + "'").code == 2);
}

TEST_CASE("cli calibrate") {
  std::ostringstream iid;
  iid << "date,return\n";
  std::mt19937_64 gen(5);
  std::normal_distribution<double> nd;
  for (int i = 0; i < 8000; ++i) {
    iid << dated(i) << ',' << format_number(nd(gen)) << '\n';
  }
  spit(kScratch / "iid.csv", iid.str());
  const auto r = run("calibrate --lag-max 300 --input '" + (kScratch / "iid.csv").string() + "'");
  REQUIRE(r.code == 0);
  const auto iid_report = parse(r.out);
  const auto& fit = table(iid_report, "fit");
  CHECK(lookup(fit, "beta0_hat") < 0.02);
  if (lookup(fit, "beta0_hat") == 0.0) CHECK(lookup(fit, "lambda_unidentified") == 1.0);

  spit(kScratch / "model.csv", model_returns_csv(0.011, 0.08, 100000, 21));
  const auto m = run("calibrate --input '" + (kScratch / "model.csv").string() + "'");
  REQUIRE(m.code == 0);
  const auto model_report = parse(m.out);
  const auto& mf = table(model_report, "fit");
  CHECK(lookup(mf, "beta0_hat") == doctest::Approx(0.08).epsilon(0.5));
  CHECK(lookup(mf, "lambda_hat") == doctest::Approx(0.011).epsilon(0.5));
}
