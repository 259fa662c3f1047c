#pragma once

// Standard normal density, distribution and quantile functions.

namespace robreg::specfun {

/// Absolute error bound guaranteed by normal_cdf and normal_inv_cdf.
inline constexpr double kAccuracyTarget = 1e-9;

double normal_pdf(double z);
double normal_log_pdf(double z);
double normal_cdf(double z);

/// Quantile of the standard normal (Wichura's AS 241, PPND16).
double normal_inv_cdf(double p);

}  // namespace robreg::specfun
