#pragma once

#include <Eigen/Dense>

#include <array>
#include <complex>
#include <cstddef>
#include <span>
#include <vector>

#include "trendfollow/market_model.hpp"
#include "trendfollow/strategy_core.hpp"

namespace trendfollow {

/// Eigenvalues of M C (sorted ascending); the law of 1/2 r^T M r depends on nothing else.
class QuadFormSpectrum {
 public:
  explicit QuadFormSpectrum(std::vector<double> eigenvalues);

  const std::vector<double>& eigenvalues() const noexcept { return eigenvalues_; }
  /// Eigenvalues with |mu| >= 1e-12 max|mu|; the rest are exact zeros up to roundoff.
  const std::vector<double>& significant() const noexcept { return significant_; }
  double mu_minus() const noexcept { return eigenvalues_.front(); }
  double mu_plus() const noexcept { return eigenvalues_.back(); }

 private:
  std::vector<double> eigenvalues_;
  std::vector<double> significant_;
};

inline constexpr double kZeroEigenvalueRatio = 1e-12;

/// Eigenvalues of a dense symmetric matrix (LAPACK dsyevd), ascending.
std::vector<double> symmetric_eigenvalues(const Eigen::MatrixXd& a);

QuadFormSpectrum spectrum(const PnlQuadForm& form, const CovarianceMatrix& cov);
/// Independent unit-variance returns (C = I).
QuadFormSpectrum spectrum(const PnlQuadForm& form);
/// General symmetric M and SPD C, via the Cholesky factor C = L L^T and L^T M L.
QuadFormSpectrum spectrum(const Eigen::MatrixXd& m, const Eigen::MatrixXd& c);

struct CumulantSet {
  std::array<double, 4> kappa{};  ///< kappa_1 .. kappa_4

  double mean() const { return kappa[0]; }
  double variance() const { return kappa[1]; }
  double skewness() const;
  double kurtosis() const;  ///< kappa_4 / kappa_2^2 (excess)
};

/// kappa_m = (m-1)!/2 sum mu^m.
CumulantSet cumulants(const QuadFormSpectrum& spec);
/// Same from (m-1)!/2 tr((M C)^m) by explicit matrix powers; a cross-check for small sizes.
CumulantSet cumulants_by_trace(const Eigen::MatrixXd& m, const Eigen::MatrixXd& c);

std::complex<double> characteristic_function(const QuadFormSpectrum& spec, double k);
/// Analytic continuation to complex k; needs Re(1 - i k mu) > 0 for every eigenvalue.
std::complex<double> characteristic_function(const QuadFormSpectrum& spec, std::complex<double> k);
/// log E[exp(s X)] for real s with 1 - s mu > 0 for every eigenvalue.
double cumulant_generating_function(const QuadFormSpectrum& spec, double s);

struct InversionConfig {
  double sigmas = 12.0;                 ///< minimum half-width of the grid in standard deviations
  double tail_probability = 1e-50;      ///< grid extends until the Chernoff tail bound drops below this
  double points_per_sigma = 1000.0;     ///< target resolution
  double singular_refinement = 4.0;     ///< extra resolution when <= 2 eigenvalues (log singularity at 0)
  std::size_t max_fft_size = std::size_t{1} << 22;
  double envelope_threshold = 1e-10;    ///< |phi| envelope level that ends the direct k sum
  double cutoff_scale = 30.0;           ///< direct k sum runs to at least this / min|z| when needed
  int tail_order = 10;                  ///< order of the asymptotic sum of the truncated k tail
  double truncation_tolerance = 1e-8;   ///< max allowed bound on the truncated-tail error (pdf units)
  bool tilted_tails = true;             ///< evaluate tails on exponentially tilted contours
  double tail_fit_level = 1e-4;         ///< tail region: pdf below this fraction of max pdf
  double tail_fit_floor = 0.0;          ///< ... and above this fraction (0 = to the grid end)
  std::size_t min_tail_points = 16;

  bool operator==(const InversionConfig&) const = default;
};

/// Exponential tail model p(z) ~ A exp(-|z|/|mu|) on either side (power-law prefactor fixed to 1).
struct TailFit {
  bool has_left = false;
  bool has_right = false;
  double mu_minus = 0.0;
  double a_minus = 0.0;
  double mu_plus = 0.0;
  double a_plus = 0.0;
  /// Free linear-regression slopes of log pdf on the same regions (diagnostic).
  double slope_left = 0.0;
  double slope_right = 0.0;
  std::size_t points_left = 0;
  std::size_t points_right = 0;
};

class DistributionResult {
 public:
  DistributionResult(double first, double step, std::vector<double> pdf, std::vector<double> cdf,
                     TailFit tail, CumulantSet cumulants);

  std::size_t size() const noexcept { return pdf_.size(); }
  double step() const noexcept { return step_; }
  double z(std::size_t i) const noexcept { return first_ + step_ * static_cast<double>(i); }
  std::vector<double> z_grid() const;
  const std::vector<double>& pdf() const noexcept { return pdf_; }
  const std::vector<double>& cdf() const noexcept { return cdf_; }
  const TailFit& tail_fit() const noexcept { return tail_; }
  const CumulantSet& cumulants() const noexcept { return cumulants_; }

  /// Monotone cubic interpolation of the cdf; clamps outside the grid.
  double cdf_at(double z) const;
  /// Generalized inverse of the cdf.
  double quantile(double q) const;

  /// Trapezoid moments of the grid density.
  double integral() const;
  double moment(int order) const;

 private:
  double hermite(std::size_t i, double z) const;

  double first_;
  double step_;
  std::vector<double> pdf_;
  std::vector<double> cdf_;
  std::vector<double> slope_;  // limited cdf derivatives for the interpolant
  TailFit tail_;
  CumulantSet cumulants_;
};

DistributionResult invert_to_distribution(const QuadFormSpectrum& spec,
                                          const InversionConfig& config = {});

double quantile(const DistributionResult& dist, double q);

enum class TailSide { Left, Right };

/// Quantile from the fitted exponential tail.
double tail_quantile_asymptotic(const TailFit& fit, double q, TailSide side);

/// Quantile of a sum of t iid unit normals, sqrt(2t) erfinv(2q - 1).
double gaussian_quantile(long t, double q);

}  // namespace trendfollow
