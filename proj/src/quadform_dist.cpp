#include "trendfollow/quadform_dist.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>
#include <string>

#include "trendfollow/error.hpp"
#include "trendfollow/inversion_kernels.hpp"
#include "trendfollow/normal.hpp"

namespace trendfollow {

namespace {

using std::numbers::pi;

struct LinearFit {
  double intercept_mean = 0.0;  // mean of (log p - slope0 * z)
  double slope = 0.0;           // free least-squares slope
};

LinearFit fit_tail(const std::vector<double>& z, const std::vector<double>& logp, double slope0) {
  const double n = static_cast<double>(z.size());
  double mz = 0.0, ml = 0.0, mi = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    mz += z[i];
    ml += logp[i];
    mi += logp[i] - slope0 * z[i];
  }
  mz /= n;
  ml /= n;
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    sxy += (z[i] - mz) * (logp[i] - ml);
    sxx += (z[i] - mz) * (z[i] - mz);
  }
  return {mi / n, sxx > 0.0 ? sxy / sxx : 0.0};
}

TailFit fit_tails(const std::vector<double>& pdf, double first, double step, double mu_lo,
                  double mu_hi, const InversionConfig& cfg) {
  TailFit fit;
  fit.mu_minus = mu_lo;
  fit.mu_plus = mu_hi;
  const auto top = std::max_element(pdf.begin(), pdf.end());
  const double pmax = *top;
  const long imax = top - pdf.begin();
  const double upper = cfg.tail_fit_level * pmax;
  const double lower = std::max(cfg.tail_fit_floor * pmax, std::numeric_limits<double>::min());
  auto zi = [&](long i) { return first + step * static_cast<double>(i); };

  if (mu_hi > 0.0) {
    long start = imax;
    while (start < static_cast<long>(pdf.size()) && pdf[start] >= upper) ++start;
    std::vector<double> z, lp;
    for (long i = start; i < static_cast<long>(pdf.size()); ++i)
      if (pdf[i] > lower && pdf[i] < upper) {
        z.push_back(zi(i));
        lp.push_back(std::log(pdf[i]));
      }
    if (z.size() >= cfg.min_tail_points) {
      const auto lf = fit_tail(z, lp, -1.0 / mu_hi);
      fit.has_right = true;
      fit.a_plus = std::exp(lf.intercept_mean);
      fit.slope_right = lf.slope;
      fit.points_right = z.size();
    }
  }
  if (mu_lo < 0.0) {
    long start = imax;
    while (start >= 0 && pdf[start] >= upper) --start;
    std::vector<double> z, lp;
    for (long i = start; i >= 0; --i)
      if (pdf[i] > lower && pdf[i] < upper) {
        z.push_back(zi(i));
        lp.push_back(std::log(pdf[i]));
      }
    if (z.size() >= cfg.min_tail_points) {
      const auto lf = fit_tail(z, lp, 1.0 / std::abs(mu_lo));
      fit.has_left = true;
      fit.a_minus = std::exp(lf.intercept_mean);
      fit.slope_left = lf.slope;
      fit.points_left = z.size();
    }
  }
  return fit;
}

double cgf(const std::vector<double>& mu, double s) {
  double out = 0.0;
  for (double m : mu) out -= 0.5 * std::log1p(-s * m);
  return out;
}

// Direct k-sum budget, in multiples of the FFT length.
constexpr long kDirectFolds = 8;

long next_pow2(double x) {
  long n = 2;
  while (static_cast<double>(n) < x) n *= 2;
  return n;
}

std::string fmt_g(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

void check_bounds(const std::vector<double>& bound, long i_first, double step, double tol,
                  const char* what) {
  for (std::size_t j = 0; j < bound.size(); ++j) {
    const double z = (static_cast<double>(i_first + static_cast<long>(j)) + 0.5) * step;
    if (std::abs(z) < 2.0 * step) continue;
    if (!(bound[j] <= tol))
      detail::fail(ErrorCode::inversion_failure,
                   std::string(what) + " truncation bound " + fmt_g(bound[j]) +
                       " exceeds tolerance " + fmt_g(tol) + " at z = " + fmt_g(z));
  }
}

}  // namespace

DistributionResult::DistributionResult(double first, double step, std::vector<double> pdf,
                                       std::vector<double> cdf, TailFit tail,
                                       CumulantSet cumulants)
    : first_(first),
      step_(step),
      pdf_(std::move(pdf)),
      cdf_(std::move(cdf)),
      tail_(tail),
      cumulants_(cumulants) {
  detail::require(pdf_.size() == cdf_.size() && pdf_.size() >= 2, ErrorCode::size_mismatch,
                  "pdf and cdf grids must match and hold at least two points");
  // Fritsch-Carlson limited derivatives, starting from the computed density.
  const std::size_t n = cdf_.size();
  slope_ = pdf_;
  for (std::size_t k = 0; k + 1 < n; ++k) {
    const double secant = (cdf_[k + 1] - cdf_[k]) / step_;
    if (secant <= 0.0) {
      slope_[k] = 0.0;
      slope_[k + 1] = 0.0;
      continue;
    }
    const double a = slope_[k] / secant;
    const double b = slope_[k + 1] / secant;
    const double r = a * a + b * b;
    if (r > 9.0) {
      const double tau = 3.0 / std::sqrt(r);
      slope_[k] = tau * a * secant;
      slope_[k + 1] = tau * b * secant;
    }
  }
}

std::vector<double> DistributionResult::z_grid() const {
  std::vector<double> out(size());
  for (std::size_t i = 0; i < size(); ++i) out[i] = z(i);
  return out;
}

double DistributionResult::hermite(std::size_t k, double zz) const {
  const double t = (zz - z(k)) / step_;
  const double t2 = t * t;
  const double t3 = t2 * t;
  return cdf_[k] * (2 * t3 - 3 * t2 + 1) + step_ * slope_[k] * (t3 - 2 * t2 + t) +
         cdf_[k + 1] * (-2 * t3 + 3 * t2) + step_ * slope_[k + 1] * (t3 - t2);
}

double DistributionResult::cdf_at(double zz) const {
  if (zz <= z(0)) return cdf_.front();
  if (zz >= z(size() - 1)) return cdf_.back();
  const auto k = std::min<std::size_t>(static_cast<std::size_t>((zz - first_) / step_), size() - 2);
  return std::clamp(hermite(k, zz), cdf_[k], cdf_[k + 1]);
}

double DistributionResult::quantile(double q) const {
  detail::require(q > 0.0 && q < 1.0, ErrorCode::out_of_range, "quantile level must lie in (0, 1)");
  if (q < cdf_.front() || q > cdf_.back())
    detail::fail(ErrorCode::out_of_range, "quantile level beyond the tails covered by the grid");
  const auto it = std::lower_bound(cdf_.begin(), cdf_.end(), q);
  const std::size_t k = static_cast<std::size_t>(it - cdf_.begin());
  if (k == 0) return z(0);
  double lo = z(k - 1);
  double hi = z(k);
  for (int iter = 0; iter < 200 && hi - lo > 1e-15 * std::max(1.0, std::abs(hi)); ++iter) {
    const double mid = 0.5 * (lo + hi);
    (std::clamp(hermite(k - 1, mid), cdf_[k - 1], cdf_[k]) >= q ? hi : lo) = mid;
  }
  return hi;
}

double DistributionResult::integral() const { return moment(0); }

double DistributionResult::moment(int order) const {
  double s = 0.0;
  for (std::size_t i = 0; i < size(); ++i) {
    const double w = (i == 0 || i + 1 == size()) ? 0.5 : 1.0;
    s += w * pdf_[i] * std::pow(z(i), order);
  }
  return s * step_;
}

DistributionResult invert_to_distribution(const QuadFormSpectrum& spec,
                                          const InversionConfig& cfg) {
  const std::vector<double>& mu = spec.significant();
  if (mu.empty()) detail::fail(ErrorCode::degenerate_spectrum, "spectrum has no nonzero eigenvalue");
  const CumulantSet cum = cumulants(spec);
  const double sigma = std::sqrt(cum.variance());
  const double mu_hi = std::max(0.0, mu.back());
  const double mu_lo = std::min(0.0, mu.front());

  // Extent: the body plus both tails down to the Chernoff bound exp(K(s) - s z) <= tail_probability.
  const double log_eps = -std::log(cfg.tail_probability);
  double z_lo = cum.mean() - cfg.sigmas * sigma;
  double z_hi = cum.mean() + cfg.sigmas * sigma;
  constexpr double fractions[] = {0.25, 0.5, 0.7, 0.8, 0.9, 0.95};
  if (mu_hi > 0.0) {
    double best = std::numeric_limits<double>::infinity();
    for (double f : fractions) {
      const double s = f / mu_hi;
      best = std::min(best, (log_eps + cgf(mu, s)) / s);
    }
    z_hi = std::max(z_hi, best);
  }
  if (mu_lo < 0.0) {
    double best = -std::numeric_limits<double>::infinity();
    for (double f : fractions) {
      const double s = f / std::abs(mu_lo);
      best = std::max(best, -(log_eps + cgf(mu, -s)) / s);
    }
    z_lo = std::min(z_lo, best);
  }

  const double scale = std::max(mu_hi, -mu_lo);
  const double period_min = std::max(1.05 * (z_hi - z_lo), 120.0 * scale);
  const double pps = cfg.points_per_sigma * (mu.size() <= 2 ? cfg.singular_refinement : 1.0);
  const long n_fft = std::min<long>(next_pow2(period_min * pps / sigma),
                                    static_cast<long>(cfg.max_fft_size));
  const double step = period_min / static_cast<double>(n_fft);
  const double h = 2.0 * pi / period_min;

  const long i_lo = static_cast<long>(std::floor(z_lo / step - 0.5));
  const long i_hi = static_cast<long>(std::ceil(z_hi / step - 0.5));
  const long count = i_hi - i_lo + 1;
  if (count > n_fft)
    detail::fail(ErrorCode::inversion_failure, "grid does not fit in one period");
  auto node = [&](long i) { return (static_cast<double>(i) + 0.5) * step; };
  // Nodes with |z| < 2 step sit on the log singularity of few-eigenvalue spectra and are not
  // held to the truncation tolerance, so the k cutoff is set by the nearest checked node.
  auto min_abs_z = [&](long a, long b) {
    const double near = 2.5 * step;
    if (a <= -1 && b >= 0) return near;
    return std::max(near, std::min(std::abs(node(a)), std::abs(node(b))));
  };

  // Contours: real axis plus a ladder of tilts toward each tail.
  std::vector<double> tilts{0.0};
  if (cfg.tilted_tails) {
    for (double f : {0.25, 0.5, 0.75}) {
      if (mu_hi > 0.0) tilts.push_back(f / mu_hi);
      if (mu_lo < 0.0) tilts.push_back(-f / std::abs(mu_lo));
    }
  }
  std::vector<double> tilt_cgf(tilts.size());
  for (std::size_t j = 0; j < tilts.size(); ++j) tilt_cgf[j] = cgf(mu, tilts[j]);

  // Each node goes to the contour maximizing c z - K(c); the bands are intervals.
  std::vector<long> band_lo(tilts.size(), std::numeric_limits<long>::max());
  std::vector<long> band_hi(tilts.size(), std::numeric_limits<long>::min());
  for (long i = i_lo; i <= i_hi; ++i) {
    const double z = node(i);
    std::size_t best = 0;
    double best_val = 0.0;
    for (std::size_t j = 1; j < tilts.size(); ++j) {
      const double v = tilts[j] * z - tilt_cgf[j];
      if (v > best_val) {
        best_val = v;
        best = j;
      }
    }
    band_lo[best] = std::min(band_lo[best], i);
    band_hi[best] = std::max(band_hi[best], i);
  }

  // Plain truncation at the envelope cutoff (pushed further while the remaining integral is
  // above tolerance) when that fits the term budget. Otherwise the direct sum stops where
  // k |z| is large enough for the asymptotic tail sum, which needs k |z| >> n/2.
  const double k_budget = static_cast<double>(kDirectFolds) * static_cast<double>(n_fft) * h;
  auto make_contour = [&](double tilt, long a, long b, int power) {
    kernels::Contour c;
    c.step = h;
    c.tilt = tilt;
    c.tail_order = cfg.tail_order;
    const double scale = std::max(std::exp(-tilt * node(a)), std::exp(-tilt * node(b))) / pi;
    const double target = 0.01 * cfg.truncation_tolerance;
    double k = kernels::envelope_cutoff(mu, tilt, cfg.envelope_threshold);
    double remainder = std::numeric_limits<double>::infinity();
    if (k <= k_budget) {
      remainder = kernels::envelope_tail_integral(mu, tilt, k, power);
      while (scale * remainder > target && k <= k_budget) {
        k *= 1.25;
        remainder = kernels::envelope_tail_integral(mu, tilt, k, power);
      }
    }
    if (k <= k_budget && scale * remainder <= target) {
      c.tail_expansion = false;
    } else {
      const double spread = std::max(1.0, 0.5 * static_cast<double>(mu.size()));
      k = cfg.cutoff_scale * spread / min_abs_z(a, b);
    }
    const double terms = std::ceil(k / h) + 1.0;
    if (terms > static_cast<double>(std::numeric_limits<int>::max()))
      detail::fail(ErrorCode::inversion_failure, "k-sum would need too many terms");
    c.terms = std::max(16L, static_cast<long>(terms));
    if (!c.tail_expansion)
      c.truncation_bound = kernels::envelope_tail_integral(mu, tilt, (c.terms - 1) * h, power);
    return c;
  };

  std::vector<double> pdf(count, 0.0);
  for (std::size_t j = 0; j < tilts.size(); ++j) {
    if (band_lo[j] > band_hi[j]) continue;
    const long a = band_lo[j];
    const long b = band_hi[j];
    const kernels::Contour contour = make_contour(tilts[j], a, b, 0);
    kernels::Lattice lat{n_fft, step, a, b - a + 1};
    std::vector<double> bound(lat.count);
    kernels::density_lattice(mu, contour, lat,
                             std::span<double>(pdf.data() + (a - i_lo), lat.count), bound);
    check_bounds(bound, a, step, cfg.truncation_tolerance, "density");
  }

  std::vector<double> cdf(count, 0.0);
  {
    const kernels::Contour contour = make_contour(0.0, i_lo, i_hi, 1);
    kernels::Lattice lat{n_fft, step, i_lo, count};
    std::vector<double> bound(count);
    kernels::cdf_lattice(mu, contour, lat, cdf, bound);
    check_bounds(bound, i_lo, step, cfg.truncation_tolerance, "cdf");
  }

  // Roundoff cleanup only: negative densities and non-monotone cdf steps are below 1e-15.
  for (double& p : pdf) p = std::max(p, 0.0);
  double run = 0.0;
  for (double& f : cdf) {
    f = std::clamp(f, 0.0, 1.0);
    run = std::max(run, f);
    f = run;
  }

  const double first = node(i_lo);
  TailFit tail = fit_tails(pdf, first, step, mu_lo, mu_hi, cfg);
  return DistributionResult(first, step, std::move(pdf), std::move(cdf), tail, cum);
}

double quantile(const DistributionResult& dist, double q) { return dist.quantile(q); }

double tail_quantile_asymptotic(const TailFit& fit, double q, TailSide side) {
  detail::require(q > 0.0 && q < 1.0, ErrorCode::out_of_range, "quantile level must lie in (0, 1)");
  if (side == TailSide::Left) {
    if (!fit.has_left) detail::fail(ErrorCode::tail_fit_unavailable, "no left tail fit");
    const double m = std::abs(fit.mu_minus);
    return -m * std::log(fit.a_minus * m / q);
  }
  if (!fit.has_right) detail::fail(ErrorCode::tail_fit_unavailable, "no right tail fit");
  return fit.mu_plus * std::log(fit.a_plus * fit.mu_plus / (1.0 - q));
}

double gaussian_quantile(long t, double q) {
  detail::require(t >= 1, ErrorCode::invalid_parameter, "horizon must be >= 1");
  detail::require(q > 0.0 && q < 1.0, ErrorCode::out_of_range, "quantile level must lie in (0, 1)");
  return std::sqrt(static_cast<double>(t)) * normal_quantile(q);
}

}  // namespace trendfollow
