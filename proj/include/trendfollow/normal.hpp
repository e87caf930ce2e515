#pragma once

namespace trendfollow {

/// Standard normal quantile, Wichura's AS241 (PPND16); relative accuracy about 1e-16.
double normal_quantile(double p);

/// Standard normal cdf via erfc.
double normal_cdf(double x);

inline constexpr const char* kGaussianSampler = "philox4x32-10+as241-inverse-cdf";

}  // namespace trendfollow
