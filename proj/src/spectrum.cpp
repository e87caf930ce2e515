#include <lapacke.h>

#include <algorithm>
#include <cmath>
#include <string>

#include "trendfollow/error.hpp"
#include "trendfollow/inversion_kernels.hpp"
#include "trendfollow/quadform_dist.hpp"

namespace trendfollow {

QuadFormSpectrum::QuadFormSpectrum(std::vector<double> eigenvalues)
    : eigenvalues_(std::move(eigenvalues)) {
  detail::require(!eigenvalues_.empty(), ErrorCode::invalid_parameter, "empty spectrum");
  for (double v : eigenvalues_)
    detail::require(std::isfinite(v), ErrorCode::invalid_parameter, "non-finite eigenvalue");
  std::sort(eigenvalues_.begin(), eigenvalues_.end());
  const double top = std::max(std::abs(eigenvalues_.front()), std::abs(eigenvalues_.back()));
  for (double v : eigenvalues_)
    if (std::abs(v) >= kZeroEigenvalueRatio * top && v != 0.0) significant_.push_back(v);
}

std::vector<double> symmetric_eigenvalues(const Eigen::MatrixXd& a) {
  detail::require(a.rows() == a.cols(), ErrorCode::size_mismatch, "matrix is not square");
  const lapack_int n = static_cast<lapack_int>(a.rows());
  Eigen::MatrixXd work = a;
  std::vector<double> w(n);
  const lapack_int info = LAPACKE_dsyevd(LAPACK_COL_MAJOR, 'N', 'L', n, work.data(), n, w.data());
  if (info != 0)
    detail::fail(ErrorCode::inversion_failure,
                 "symmetric eigensolver did not converge (info " + std::to_string(info) + ")");
  return w;
}

QuadFormSpectrum spectrum(const Eigen::MatrixXd& m, const Eigen::MatrixXd& c) {
  detail::require(m.rows() == m.cols() && c.rows() == c.cols() && m.rows() == c.rows(),
                  ErrorCode::size_mismatch, "M and C must be square and of equal size");
  Eigen::LLT<Eigen::MatrixXd> llt(c);
  if (llt.info() != Eigen::Success)
    detail::fail(ErrorCode::not_positive_definite, "covariance is not positive definite");
  const Eigen::MatrixXd l = llt.matrixL();
  Eigen::MatrixXd s = l.transpose() * m * l;
  s = 0.5 * (s + s.transpose()).eval();
  return QuadFormSpectrum(symmetric_eigenvalues(s));
}

QuadFormSpectrum spectrum(const PnlQuadForm& form) {
  return QuadFormSpectrum(symmetric_eigenvalues(form.matrix()));
}

QuadFormSpectrum spectrum(const PnlQuadForm& form, const CovarianceMatrix& cov) {
  detail::require(form.size() == cov.size(), ErrorCode::size_mismatch,
                  "quadratic form and covariance differ in size");
  if (cov.is_identity()) return spectrum(form);
  return spectrum(form.matrix(), cov.matrix());
}

double CumulantSet::skewness() const { return kappa[2] / std::pow(kappa[1], 1.5); }
double CumulantSet::kurtosis() const { return kappa[3] / (kappa[1] * kappa[1]); }

CumulantSet cumulants(const QuadFormSpectrum& spec) {
  CumulantSet out;
  double fact = 1.0;  // (m-1)!
  for (int m = 1; m <= 4; ++m) {
    double s = 0.0;
    for (double v : spec.significant()) s += std::pow(v, m);
    out.kappa[m - 1] = 0.5 * fact * s;
    fact *= m;
  }
  return out;
}

CumulantSet cumulants_by_trace(const Eigen::MatrixXd& m, const Eigen::MatrixXd& c) {
  detail::require(m.rows() == c.rows() && m.cols() == c.cols(), ErrorCode::size_mismatch,
                  "M and C differ in size");
  const Eigen::MatrixXd p = m * c;
  Eigen::MatrixXd pw = p;
  CumulantSet out;
  double fact = 1.0;
  for (int k = 1; k <= 4; ++k) {
    out.kappa[k - 1] = 0.5 * fact * pw.trace();
    fact *= k;
    pw = (pw * p).eval();
  }
  return out;
}

std::complex<double> characteristic_function(const QuadFormSpectrum& spec, double k) {
  return kernels::char_fn(spec.significant(), {k, 0.0});
}

std::complex<double> characteristic_function(const QuadFormSpectrum& spec,
                                             std::complex<double> k) {
  for (double m : spec.significant())
    detail::require(1.0 + k.imag() * m > 0.0, ErrorCode::out_of_range,
                    "complex argument outside the strip of analyticity");
  return kernels::char_fn(spec.significant(), k);
}

double cumulant_generating_function(const QuadFormSpectrum& spec, double s) {
  double out = 0.0;
  for (double m : spec.significant()) {
    const double a = 1.0 - s * m;
    detail::require(a > 0.0, ErrorCode::out_of_range, "argument outside the domain of the cgf");
    out -= 0.5 * std::log(a);
  }
  return out;
}

}  // namespace trendfollow
