// Standard normal CDF, PDF, and a high-accuracy inverse CDF.
//
// The inverse uses the Acklam rational approximation polished by one Newton
// step on Phi, and reflects u > 1/2 so that antisymmetry about the median is
// bit-exact.

#pragma once

#include <cmath>
#include <stdexcept>

namespace lpmc {

inline double normal_cdf(double x) {
  return 0.5 * std::erfc(-x * 0.7071067811865475244);  // 1/sqrt(2)
}

inline double normal_pdf(double x) {
  return 0.3989422804014326779 * std::exp(-0.5 * x * x);  // 1/sqrt(2*pi)
}

namespace detail {

// Acklam's rational approximation for u in (0, 1/2], relative error ~1e-9
// before refinement.
inline double inv_cdf_lower(double u) {
  static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                 -2.759285104469687e+02, 1.383577518672690e+02,
                                 -3.066479806614716e+01, 2.506628277459239e+00};
  static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                 -1.556989798598866e+02, 6.680131188771972e+01,
                                 -1.328068155288572e+01};
  static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                 -2.400758277161838e+00, -2.549732539343734e+00,
                                 4.374664141464968e+00,  2.938163982698783e+00};
  static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                                 2.445134137142996e+00, 3.754408661907416e+00};
  constexpr double u_low = 0.02425;

  double x;
  if (u < u_low) {
    double q = std::sqrt(-2.0 * std::log(u));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  } else {
    double q = u - 0.5;
    double r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  }
  // One Newton step on Phi(x) = u.
  double err = normal_cdf(x) - u;
  x -= err / normal_pdf(x);
  return x;
}

}  // namespace detail

inline double exact_inv_cdf(double u) {
  if (!(u > 0.0 && u < 1.0))
    throw std::domain_error("exact_inv_cdf requires u in (0, 1)");
  if (u == 0.5) return 0.0;
  if (u > 0.5) return -detail::inv_cdf_lower(1.0 - u);
  return detail::inv_cdf_lower(u);
}

}  // namespace lpmc
