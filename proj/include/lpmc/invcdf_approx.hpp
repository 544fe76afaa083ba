// Piecewise-polynomial approximations of the Gaussian inverse CDF.
//
// The upper half-line u in [1/2, 1) is covered by K intervals refined
// geometrically toward u = 1: in the variable w = -log2(1 - u) the intervals
// are equal-width on [1, w_max]. For small K (w_max = K + 1) this is the plain
// dyadic layout with breakpoints 1 - 2^-k; for large K the depth is capped at
// w_max = 45 so every breakpoint stays representable in the binary64 carrier.
// Evaluation past the deepest breakpoint clamps, giving compact support.
//
// Per-interval coefficients are the L2-optimal Legendre projection of the
// exact inverse CDF, computed with 32-node Gauss-Legendre quadrature. The
// lower half u in (0, 1/2) is evaluated by reflection, so antisymmetry about
// the median is bit-exact and the approximation has zero mean by construction.

#pragma once

#include <array>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "lpmc/gaussian.hpp"
#include "lpmc/quadrature.hpp"

namespace lpmc {

class InvCdfApprox {
 public:
  enum class Kind { linear, cubic };

  Kind kind() const { return kind_; }
  int interval_count() const { return interval_count_; }
  int degree() const { return kind_ == Kind::linear ? 1 : 3; }

  // Ascending interior breakpoints in (1/2, 1); the last is the truncation
  // point bounding the support.
  const std::vector<double>& breakpoints() const { return breakpoints_; }
  double truncation_point() const { return breakpoints_.back(); }

  // Largest attainable value; the support is [-max_value, max_value].
  double max_value() const { return tail_value_; }

  double operator()(double u) const {
    if (!(u > 0.0 && u < 1.0))
      throw std::domain_error("approx_inv_cdf requires u in (0, 1)");
    if (u == 0.5) return 0.0;
    if (u < 0.5) return -eval_upper(1.0 - u);
    return eval_upper(u);
  }

  static InvCdfApprox build(Kind kind, int interval_count);

  // Names accepted in configs: linear:K | cubic:K.
  static InvCdfApprox parse(const std::string& name) {
    auto colon = name.find(':');
    if (colon == std::string::npos)
      throw std::invalid_argument("bad approximation name: " + name);
    std::string kind_name = name.substr(0, colon);
    int k = 0;
    try {
      k = std::stoi(name.substr(colon + 1));
    } catch (const std::exception&) {
      throw std::invalid_argument("bad approximation name: " + name);
    }
    if (kind_name == "linear") return build(Kind::linear, k);
    if (kind_name == "cubic") return build(Kind::cubic, k);
    throw std::invalid_argument("bad approximation name: " + name);
  }

 private:
  InvCdfApprox() = default;

  double eval_upper(double u) const {
    double w = -std::log2(1.0 - u);
    if (w >= w_max_) return tail_value_;
    int j = static_cast<int>((w - 1.0) / step_w_);
    if (j < 0) j = 0;
    if (j >= interval_count_) j = interval_count_ - 1;
    double a = j == 0 ? 0.5 : breakpoints_[j - 1];
    double b = breakpoints_[j];
    double t = 2.0 * (u - a) / (b - a) - 1.0;
    if (t < -1.0) t = -1.0;
    if (t > 1.0) t = 1.0;
    const auto& c = coeff_[j];
    // Legendre basis P_0..P_3.
    double p2 = 1.5 * t * t - 0.5;
    double p3 = t * (2.5 * t * t - 1.5);
    return c[0] + c[1] * t + c[2] * p2 + c[3] * p3;
  }

  Kind kind_ = Kind::linear;
  int interval_count_ = 0;
  double w_max_ = 0.0;
  double step_w_ = 0.0;
  double tail_value_ = 0.0;
  std::vector<double> breakpoints_;
  std::vector<std::array<double, 4>> coeff_;
};

inline InvCdfApprox InvCdfApprox::build(Kind kind, int interval_count) {
  if (interval_count < 2 || (interval_count & (interval_count - 1)) != 0)
    throw std::invalid_argument("interval count must be a power of two >= 2");

  InvCdfApprox approx;
  approx.kind_ = kind;
  approx.interval_count_ = interval_count;
  approx.w_max_ = std::min(static_cast<double>(interval_count + 1), 45.0);
  approx.step_w_ = (approx.w_max_ - 1.0) / interval_count;
  approx.breakpoints_.resize(interval_count);
  approx.coeff_.resize(interval_count);

  const GaussLegendreRule rule = gauss_legendre(32);
  const int deg = kind == Kind::linear ? 1 : 3;

  double a = 0.5;
  for (int j = 0; j < interval_count; ++j) {
    double w_hi = 1.0 + (j + 1) * approx.step_w_;
    double b = 1.0 - std::exp2(-w_hi);
    approx.breakpoints_[j] = b;

    auto& c = approx.coeff_[j];
    c = {0.0, 0.0, 0.0, 0.0};
    // c_k = (2k+1)/2 * int_{-1}^{1} f(u(t)) P_k(t) dt.
    for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
      double t = rule.nodes[i];
      double u = 0.5 * (a + b) + 0.5 * (b - a) * t;
      double f = rule.weights[i] * exact_inv_cdf(u);
      double p2 = 1.5 * t * t - 0.5;
      double p3 = t * (2.5 * t * t - 1.5);
      c[0] += 0.5 * f;
      c[1] += 1.5 * f * t;
      if (deg == 3) {
        c[2] += 2.5 * f * p2;
        c[3] += 3.5 * f * p3;
      }
    }
    a = b;
  }

  // Clamp value past the deepest breakpoint: the last polynomial at t = 1.
  const auto& c = approx.coeff_.back();
  approx.tail_value_ = c[0] + c[1] + c[2] + c[3];
  return approx;
}

// E[Z^p] for p = 1..p_max by deterministic per-interval quadrature over both
// halves of (0, 1), including the clamped tail mass beyond the truncation
// point.
inline std::vector<double> moment_diagnostics(const InvCdfApprox& approx,
                                              int p_max) {
  if (p_max < 1 || p_max > 8)
    throw std::invalid_argument("moment order must be in [1, 8]");
  const GaussLegendreRule rule = gauss_legendre(32);
  std::vector<double> moments(p_max, 0.0);

  auto accumulate = [&](double a, double b) {
    for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
      double u = 0.5 * (a + b) + 0.5 * (b - a) * rule.nodes[i];
      double z = approx(u);
      double wgt = 0.5 * (b - a) * rule.weights[i];
      double zp = 1.0;
      for (int p = 0; p < p_max; ++p) {
        zp *= z;
        moments[p] += wgt * zp;
      }
    }
  };

  double a = 0.5;
  for (double b : approx.breakpoints()) {
    accumulate(a, b);
    accumulate(1.0 - b, 1.0 - a);  // mirrored interval
    a = b;
  }
  // Clamped tails carry mass (1 - truncation_point) each.
  double tail_mass = 1.0 - approx.truncation_point();
  double zp_hi = 1.0, zp_lo = 1.0;
  for (int p = 0; p < p_max; ++p) {
    zp_hi *= approx.max_value();
    zp_lo *= -approx.max_value();
    moments[p] += tail_mass * (zp_hi + zp_lo);
  }
  return moments;
}

}  // namespace lpmc
