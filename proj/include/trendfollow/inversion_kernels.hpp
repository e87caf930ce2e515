#pragma once

// Trapezoid Fourier sums for the density and cdf of a Gaussian quadratic form.
//
// Density on the contour Im k = -c:
//   p(z) = exp(-c z)/pi * Re[ h (phi(-ic)/2 + sum_{n>=1} phi(n h - ic) e^{-i n h z}) ]
// Cdf (half-shifted Gil-Pelaez sum, c = 0):
//   F(z) = 1/2 - 1/pi * Im[ h sum_{n>=0} phi(k_n)/k_n e^{-i k_n z} ],  k_n = (n + 1/2) h
// Terms with n >= terms are summed by an asymptotic expansion in the derivatives of the
// summand at the cut, so the direct sum can stop long before |phi| is negligible.
//
// Two evaluators share these definitions: a direct per-point sum (serial reference) and a
// folded FFT over a lattice of nodes z_i = (i + 1/2) * spacing with spacing * h * size = 2 pi.

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

namespace trendfollow::kernels {

struct Contour {
  double step = 0.0;  ///< h
  double tilt = 0.0;  ///< c
  long terms = 0;     ///< number of directly summed terms
  int tail_order = 10;
  /// When false the sum simply stops at `terms`; truncation_bound then bounds sum_{n>=terms} |a_n|.
  bool tail_expansion = true;
  double truncation_bound = 0.0;
};

struct Lattice {
  long size = 0;         ///< FFT length N
  double spacing = 0.0;  ///< grid step; h = 2 pi / (size * spacing)
  long first = 0;        ///< lattice index of the first node served
  long count = 0;        ///< number of consecutive nodes served

  double node(long i) const { return (static_cast<double>(i) + 0.5) * spacing; }
  double period() const { return static_cast<double>(size) * spacing; }
};

struct PointValue {
  double value = 0.0;
  double error_bound = 0.0;
};

/// phi at complex argument, principal square root per factor.
std::complex<double> char_fn(std::span<const double> mu, std::complex<double> k);

/// Taylor coefficients phi^(m)(k)/m!, m = 0..order.
std::vector<std::complex<double>> char_fn_taylor(std::span<const double> mu,
                                                 std::complex<double> k, int order);

/// sum_{n>=0} n^m x^n (Abel sense) for m = 0..order, x != 1.
void power_sums(std::complex<double> x, int order, std::complex<double>* out);

/// Smallest K with prod (1 + K^2 mu^2/(1 - c mu)^2)^(-1/4) <= threshold.
double envelope_cutoff(std::span<const double> mu, double tilt, double threshold);

/// Integral of |phi(k - ic)| k^(-power) over [K, inf); infinite when it diverges.
double envelope_tail_integral(std::span<const double> mu, double tilt, double cutoff, int power);

// Serial reference: direct sums at an arbitrary z.
PointValue density_direct(std::span<const double> mu, const Contour& contour, double z);
PointValue cdf_direct(std::span<const double> mu, const Contour& contour, double z);

// Folded FFT over the lattice; OpenMP over terms and nodes. Output spans have lattice.count slots.
void density_lattice(std::span<const double> mu, const Contour& contour, const Lattice& lattice,
                     std::span<double> value, std::span<double> error_bound);
void cdf_lattice(std::span<const double> mu, const Contour& contour, const Lattice& lattice,
                 std::span<double> value, std::span<double> error_bound);

}  // namespace trendfollow::kernels
