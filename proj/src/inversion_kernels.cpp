#include "trendfollow/inversion_kernels.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <memory>
#include <mutex>
#include <numbers>

#include "trendfollow/error.hpp"

namespace trendfollow::kernels {

using cplx = std::complex<double>;
using std::numbers::pi;

namespace {

constexpr int kMaxTailOrder = 24;

// Eulerian numbers A(m, k), m <= kMaxTailOrder.
struct EulerianTable {
  double a[kMaxTailOrder + 1][kMaxTailOrder + 1] = {};
  EulerianTable() {
    a[0][0] = 1.0;
    for (int m = 1; m <= kMaxTailOrder; ++m)
      for (int k = 0; k < m; ++k)
        a[m][k] = (k + 1) * a[m - 1][k] + (k > 0 ? (m - k) * a[m - 1][k - 1] : 0.0);
  }
};

const EulerianTable& eulerian() {
  static const EulerianTable table;
  return table;
}

long pos_mod(long a, long m) {
  const long r = a % m;
  return r < 0 ? r + m : r;
}

// exp(-2 pi i idx / den) for an exact integer phase.
cplx unit_phase(long idx, long den) {
  const double ang = -2.0 * pi * static_cast<double>(idx) / static_cast<double>(den);
  return {std::cos(ang), std::sin(ang)};
}

// exp(-i theta) with theta = n * hz reduced in extended precision.
cplx phase_of(long double n, long double hz) {
  constexpr long double two_pi = 6.283185307179586476925286766559005768L;
  long double th = std::fmod(n * hz, two_pi);
  const double t = static_cast<double>(th);
  return {std::cos(t), -std::sin(t)};
}

void check_contour(const Contour& c) {
  detail::require(c.step > 0.0 && std::isfinite(c.step), ErrorCode::invalid_parameter,
                  "contour step must be positive");
  detail::require(c.terms >= 1, ErrorCode::invalid_parameter, "contour needs at least one term");
  detail::require(c.tail_order >= 1 && c.tail_order <= kMaxTailOrder,
                  ErrorCode::invalid_parameter, "tail order out of range");
}

// Terms t_m = coef_m h^m A_m(x) of the tail expansion; returns the sum, last |t_m| in bound.
cplx tail_series(const std::vector<cplx>& coef, double h, cplx x, double& bound) {
  const int order = static_cast<int>(coef.size()) - 1;
  cplx sums[kMaxTailOrder + 1];
  power_sums(x, order, sums);
  cplx total = 0.0;
  double hp = 1.0;
  double last = 0.0;
  for (int m = 0; m <= order; ++m) {
    const cplx t = coef[m] * hp * sums[m];
    total += t;
    last = std::abs(t);
    hp *= h;
  }
  bound = last;
  return total;
}

// Taylor coefficients of phi(k)/k at real k0.
std::vector<cplx> cdf_taylor(std::span<const double> mu, double k0, int order) {
  const auto phi = char_fn_taylor(mu, cplx(k0, 0.0), order);
  std::vector<cplx> g(order + 1);
  for (int m = 0; m <= order; ++m) {
    cplx s = 0.0;
    double inv = 1.0 / k0;  // (-1)^(m-j) / k0^(m-j+1), built from j = m downward
    for (int j = m; j >= 0; --j) {
      s += phi[j] * inv;
      inv *= -1.0 / k0;
    }
    g[m] = s;
  }
  return g;
}

std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

struct FftwBuffer {
  explicit FftwBuffer(long n)
      : data(static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * n))) {
    if (!data) throw std::bad_alloc();
  }
  ~FftwBuffer() { fftw_free(data); }
  FftwBuffer(const FftwBuffer&) = delete;
  FftwBuffer& operator=(const FftwBuffer&) = delete;
  fftw_complex* data;
};

// In-place forward DFT, out_m = sum_r in_r exp(-2 pi i r m / n). FFTW_ESTIMATE keeps plans deterministic.
void forward_fft(fftw_complex* data, long n) {
  fftw_plan plan;
  {
    std::lock_guard<std::mutex> lock(planner_mutex());
    plan = fftw_plan_dft_1d(static_cast<int>(n), data, data, FFTW_FORWARD, FFTW_ESTIMATE);
  }
  if (!plan) detail::fail(ErrorCode::inversion_failure, "FFTW could not create a plan");
  fftw_execute(plan);
  std::lock_guard<std::mutex> lock(planner_mutex());
  fftw_destroy_plan(plan);
}

void check_lattice(const Lattice& lat, std::span<double> value, std::span<double> bound) {
  detail::require(lat.size >= 2 && lat.spacing > 0.0, ErrorCode::invalid_parameter,
                  "lattice needs size >= 2 and positive spacing");
  detail::require(lat.count >= 0 && lat.count <= lat.size, ErrorCode::invalid_parameter,
                  "lattice serves more nodes than its period holds");
  detail::require(value.size() == static_cast<std::size_t>(lat.count) &&
                      bound.size() == static_cast<std::size_t>(lat.count),
                  ErrorCode::size_mismatch, "output spans must hold lattice.count values");
}

}  // namespace

cplx char_fn(std::span<const double> mu, cplx k) {
  // Factor 1 - i k mu = (1 + Im(k) mu) - i Re(k) mu.
  double mag = 1.0;
  double log_mag = 0.0;
  double arg = 0.0;
  for (double m : mu) {
    const double a = 1.0 + k.imag() * m;
    const double b = -k.real() * m;
    mag *= a * a + b * b;
    if (mag > 1e200 || mag < 1e-200) {
      log_mag += std::log(mag);
      mag = 1.0;
    }
    arg += std::atan2(b, a);
  }
  log_mag += std::log(mag);
  return std::polar(std::exp(-0.25 * log_mag), -0.5 * arg);
}

std::vector<cplx> char_fn_taylor(std::span<const double> mu, cplx k, int order) {
  // log phi = -1/2 sum log(1 - i k mu); its m-th Taylor coefficient is 1/2 sum w^m / m,
  // w = i mu / (1 - i k mu). Then (m+1) phi_{m+1} = sum_j (j+1) g_{j+1} phi_{m-j}.
  std::vector<cplx> g(order + 2, 0.0);
  for (double m : mu) {
    const cplx w = cplx(0.0, m) / (1.0 - cplx(0.0, 1.0) * k * m);
    cplx wp = w;
    for (int j = 1; j <= order; ++j) {
      g[j] += 0.5 * wp / static_cast<double>(j);
      wp *= w;
    }
  }
  std::vector<cplx> phi(order + 1);
  phi[0] = char_fn(mu, k);
  for (int m = 0; m < order; ++m) {
    cplx s = 0.0;
    for (int j = 0; j <= m; ++j) s += static_cast<double>(j + 1) * g[j + 1] * phi[m - j];
    phi[m + 1] = s / static_cast<double>(m + 1);
  }
  return phi;
}

void power_sums(cplx x, int order, cplx* out) {
  const auto& e = eulerian();
  const cplx y = 1.0 / (1.0 - x);
  out[0] = y;
  cplx yp = y;
  for (int m = 1; m <= order; ++m) {
    yp *= y;
    cplx poly = 0.0;
    for (int k = m - 1; k >= 0; --k) poly = poly * x + e.a[m][k];
    out[m] = x * poly * yp;
  }
}

double envelope_cutoff(std::span<const double> mu, double tilt, double threshold) {
  const double target = -std::log(threshold);
  auto level = [&](double k) {
    double s = 0.0;
    for (double m : mu) {
      const double r = k * m / (1.0 - tilt * m);
      s += 0.25 * std::log1p(r * r);
    }
    return s;
  };
  double hi = 1.0;
  while (level(hi) < target) {
    hi *= 2.0;
    if (hi > 1e300) return std::numeric_limits<double>::infinity();
  }
  double lo = 0.0;
  for (int it = 0; it < 200 && hi - lo > 1e-12 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    (level(mid) < target ? lo : hi) = mid;
  }
  return hi;
}

double envelope_tail_integral(std::span<const double> mu, double tilt, double cutoff, int power) {
  // |phi(k - ic)| decays like k^(-n/2); the integral converges for n/2 + power > 1.
  if (0.5 * static_cast<double>(mu.size()) + power <= 1.0)
    return std::numeric_limits<double>::infinity();
  auto env = [&](double k) {
    double s = 0.0;
    for (double m : mu) {
      const double a = 1.0 - tilt * m;
      s += std::log(a * a + k * k * m * m);
    }
    return std::exp(-0.25 * s) * std::pow(k, -power);
  };
  // k = K e^u; integrand K e^u env(K e^u), trapezoid in u until it is negligible.
  const double du = 0.02;
  double total = 0.5 * cutoff * env(cutoff) * du;
  const double first = total;
  for (int i = 1; i < 20000; ++i) {
    const double k = cutoff * std::exp(i * du);
    const double v = k * env(k) * du;
    total += v;
    if (v < 1e-6 * first && i > 50) break;
  }
  return total;
}

PointValue density_direct(std::span<const double> mu, const Contour& contour, double z) {
  check_contour(contour);
  const double h = contour.step;
  const double c = contour.tilt;
  const long double hz = static_cast<long double>(h) * static_cast<long double>(z);
  cplx sum = 0.5 * char_fn(mu, cplx(0.0, -c));
  for (long n = 1; n < contour.terms; ++n)
    sum += char_fn(mu, cplx(n * h, -c)) * phase_of(static_cast<long double>(n), hz);

  PointValue out;
  const cplx x = phase_of(1.0L, hz);
  if (!contour.tail_expansion) {
    out.error_bound = std::exp(-c * z) / pi * contour.truncation_bound;
  } else if (std::abs(1.0 - x) < 1e-300) {
    out.error_bound = std::numeric_limits<double>::infinity();
  } else {
    const auto coef =
        char_fn_taylor(mu, cplx(contour.terms * h, -c), contour.tail_order);
    double bound = 0.0;
    sum += phase_of(static_cast<long double>(contour.terms), hz) * tail_series(coef, h, x, bound);
    out.error_bound = std::exp(-c * z) / pi * h * bound;
  }
  out.value = std::exp(-c * z) / pi * h * sum.real();
  return out;
}

PointValue cdf_direct(std::span<const double> mu, const Contour& contour, double z) {
  check_contour(contour);
  detail::require(contour.tilt == 0.0, ErrorCode::invalid_parameter,
                  "cdf sum is only defined on the real contour");
  const double h = contour.step;
  const long double hz = static_cast<long double>(h) * static_cast<long double>(z);
  cplx sum = 0.0;
  for (long n = 0; n < contour.terms; ++n) {
    const double k = (n + 0.5) * h;
    sum += char_fn(mu, cplx(k, 0.0)) / k * phase_of(n + 0.5L, hz);
  }
  PointValue out;
  const cplx x = phase_of(1.0L, hz);
  if (!contour.tail_expansion) {
    out.error_bound = contour.truncation_bound / pi;
  } else if (std::abs(1.0 - x) < 1e-300) {
    out.error_bound = std::numeric_limits<double>::infinity();
  } else {
    const double k0 = (contour.terms + 0.5) * h;
    const auto coef = cdf_taylor(mu, k0, contour.tail_order);
    double bound = 0.0;
    sum += phase_of(contour.terms + 0.5L, hz) * tail_series(coef, h, x, bound);
    out.error_bound = h / pi * bound;
  }
  out.value = 0.5 - h / pi * sum.imag();
  return out;
}

void density_lattice(std::span<const double> mu, const Contour& contour, const Lattice& lat,
                     std::span<double> value, std::span<double> error_bound) {
  check_contour(contour);
  check_lattice(lat, value, error_bound);
  const long n_fft = lat.size;
  const double h = 2.0 * pi / lat.period();
  detail::require(std::abs(h - contour.step) <= 1e-12 * h, ErrorCode::invalid_parameter,
                  "contour step does not match the lattice period");
  const double c = contour.tilt;
  const long terms = contour.terms;

  // z_i h = pi (2i+1)/N, so exp(-i n h z_i) = exp(-2 pi i n i / N) * exp(-i pi n / N).
  FftwBuffer buf(n_fft);
#pragma omp parallel for schedule(dynamic, 256)
  for (long r = 0; r < n_fft; ++r) {
    cplx acc = 0.0;
    for (long n = r; n < terms; n += n_fft) {
      cplx a = char_fn(mu, cplx(n * h, -c));
      if (n == 0) a *= 0.5;
      acc += a * unit_phase(pos_mod(n, 2 * n_fft), 2 * n_fft);
    }
    buf.data[r][0] = acc.real();
    buf.data[r][1] = acc.imag();
  }
  forward_fft(buf.data, n_fft);

  const auto coef = contour.tail_expansion
                        ? char_fn_taylor(mu, cplx(terms * h, -c), contour.tail_order)
                        : std::vector<cplx>{};
  const long cut = pos_mod(terms, 2 * n_fft);
#pragma omp parallel for schedule(static)
  for (long j = 0; j < lat.count; ++j) {
    const long i = lat.first + j;
    const long m = pos_mod(i, n_fft);
    const long odd = pos_mod(2 * i + 1, 2 * n_fft);
    cplx s(buf.data[m][0], buf.data[m][1]);
    const double z = lat.node(i);
    const double scale = std::exp(-c * z) / pi;
    if (contour.tail_expansion) {
      const cplx x = unit_phase(odd, 2 * n_fft);
      double bound = 0.0;
      s += unit_phase((cut * odd) % (2 * n_fft), 2 * n_fft) * tail_series(coef, h, x, bound);
      error_bound[j] = scale * h * bound;
    } else {
      error_bound[j] = scale * contour.truncation_bound;
    }
    value[j] = scale * h * s.real();
  }
}

void cdf_lattice(std::span<const double> mu, const Contour& contour, const Lattice& lat,
                 std::span<double> value, std::span<double> error_bound) {
  check_contour(contour);
  check_lattice(lat, value, error_bound);
  detail::require(contour.tilt == 0.0, ErrorCode::invalid_parameter,
                  "cdf sum is only defined on the real contour");
  const long n_fft = lat.size;
  const double h = 2.0 * pi / lat.period();
  detail::require(std::abs(h - contour.step) <= 1e-12 * h, ErrorCode::invalid_parameter,
                  "contour step does not match the lattice period");
  const long terms = contour.terms;

  // k_n z_i = 2 pi (2n+1)(2i+1) / (4N)
  //         = 2 pi n i / N + pi (2n+1) / (2N) + pi i / N.
  FftwBuffer buf(n_fft);
#pragma omp parallel for schedule(dynamic, 256)
  for (long r = 0; r < n_fft; ++r) {
    cplx acc = 0.0;
    for (long n = r; n < terms; n += n_fft) {
      const double k = (n + 0.5) * h;
      acc += char_fn(mu, cplx(k, 0.0)) / k * unit_phase(pos_mod(2 * n + 1, 4 * n_fft), 4 * n_fft);
    }
    buf.data[r][0] = acc.real();
    buf.data[r][1] = acc.imag();
  }
  forward_fft(buf.data, n_fft);

  const auto coef = contour.tail_expansion ? cdf_taylor(mu, (terms + 0.5) * h, contour.tail_order)
                                           : std::vector<cplx>{};
  const long cut = pos_mod(2 * terms + 1, 4 * n_fft);
#pragma omp parallel for schedule(static)
  for (long j = 0; j < lat.count; ++j) {
    const long i = lat.first + j;
    const long m = pos_mod(i, n_fft);
    cplx s = cplx(buf.data[m][0], buf.data[m][1]) * unit_phase(pos_mod(i, 2 * n_fft), 2 * n_fft);
    if (contour.tail_expansion) {
      const long odd2 = pos_mod(2 * i + 1, 2 * n_fft);
      const long odd4 = pos_mod(2 * i + 1, 4 * n_fft);
      const cplx x = unit_phase(odd2, 2 * n_fft);
      double bound = 0.0;
      s += unit_phase((cut * odd4) % (4 * n_fft), 4 * n_fft) * tail_series(coef, h, x, bound);
      error_bound[j] = h / pi * bound;
    } else {
      error_bound[j] = contour.truncation_bound / pi;
    }
    value[j] = 0.5 - h / pi * s.imag();
  }
}

}  // namespace trendfollow::kernels
