#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "queuelab/core.hpp"

namespace queuelab::stats {

// Acklam's rational approximation to the standard normal quantile
// (|relative error| < 1.2e-9 over the open unit interval).
inline double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) throw ValidationError("normal quantile needs p in (0,1)");
  static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                             -2.759285104469687e+02, 1.383577518672690e+02,
                             -3.066479806614716e+01, 2.506628277459239e+00};
  static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                             -1.556989798598866e+02, 6.680131188771972e+01,
                             -1.328068155288572e+01};
  static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                             -2.400758277161838e+00, -2.549732539343734e+00,
                             4.374664141464968e+00,  2.938163982698783e+00};
  static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                             2.445134137142996e+00, 3.754408661907416e+00};
  const double plow = 0.02425, phigh = 1.0 - plow;
  double q, r;
  if (p < plow) {
    q = std::sqrt(-2.0 * std::log(p));
    return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
           ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  if (p > phigh) {
    q = std::sqrt(-2.0 * std::log(1.0 - p));
    return -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
           ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  q = p - 0.5;
  r = q * q;
  return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
         (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
}

// Two-sided 95% Student-t quantile. Exact table for the smallest dof, a
// Cornish-Fisher expansion above it (error well under 1e-4 there).
inline double t_quantile_975(std::size_t dof) {
  static const double small[] = {12.7062047364, 4.3026527297, 3.1824463053, 2.7764451052,
                                 2.5705818356,  2.4469118511, 2.3646242516, 2.3060041352};
  if (dof == 0) throw ValidationError("t quantile needs dof >= 1");
  if (dof <= 8) return small[dof - 1];
  const double z = normal_quantile(0.975);
  const double v = static_cast<double>(dof);
  const double z3 = z * z * z, z5 = z3 * z * z, z7 = z5 * z * z, z9 = z7 * z * z;
  return z + (z3 + z) / (4.0 * v) + (5.0 * z5 + 16.0 * z3 + 3.0 * z) / (96.0 * v * v) +
         (3.0 * z7 + 19.0 * z5 + 17.0 * z3 - 15.0 * z) / (384.0 * v * v * v) +
         (79.0 * z9 + 776.0 * z7 + 1482.0 * z5 - 1920.0 * z3 - 945.0 * z) /
             (92160.0 * v * v * v * v);
}

// Point estimate with a 95% confidence half-width.
struct SimEstimate {
  double point = 0.0;
  double half_width_95 = 0.0;
  std::uint64_t samples = 0;

  bool contains(double target) const { return std::fabs(point - target) <= half_width_95; }
  // Distance from a target in units of the half-width.
  double deviation(double target) const {
    return half_width_95 > 0.0 ? std::fabs(point - target) / half_width_95
                               : std::fabs(point - target);
  }
};

// Batch-means estimate: sample mean of the batch values, t-based half-width.
inline SimEstimate from_batches(const std::vector<double>& batches, std::uint64_t samples) {
  SimEstimate e;
  e.samples = samples;
  const std::size_t n = batches.size();
  if (n == 0) return e;
  double mean = 0.0;
  for (double v : batches) mean += v;
  mean /= static_cast<double>(n);
  e.point = mean;
  if (n >= 2) {
    double ss = 0.0;
    for (double v : batches) ss += (v - mean) * (v - mean);
    const double sd = std::sqrt(ss / static_cast<double>(n - 1));
    e.half_width_95 = t_quantile_975(n - 1) * sd / std::sqrt(static_cast<double>(n));
  }
  return e;
}

}  // namespace queuelab::stats
