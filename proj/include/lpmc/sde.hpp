// Euler-Maruyama path simulation in emulated precision.
//
// Every binary operation in the update follows the fixed parenthesization
//   X <- X (+) ((a (x) dt) (+) ((b (x) sqrt_dt) (x) Z)),
// with dt and sqrt_dt rounded into the target precision once up front. The
// optional Kahan compensation wraps only the outer accumulation; the residual
// of the inner drift + diffusion sum is deliberately left uncompensated.

#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>

#include "lpmc/gaussian.hpp"
#include "lpmc/invcdf_approx.hpp"
#include "lpmc/softfloat.hpp"
#include "lpmc/uniform.hpp"

namespace lpmc {

struct SdeModel {
  // Evaluated op-by-op in the supplied precision; t is carrier-precision.
  std::function<double(double t, double x, const PrecisionSpec&)> drift;
  std::function<double(double t, double x, const PrecisionSpec&)> diffusion;
  double x0 = 1.0;
  double horizon = 1.0;
};

inline SdeModel make_gbm(double mu = 0.05, double sigma = 0.2, double x0 = 1.0,
                         double horizon = 1.0) {
  SdeModel model;
  model.drift = [mu](double, double x, const PrecisionSpec& spec) {
    return fp_mul(round_to_precision(mu, spec), x, spec);
  };
  model.diffusion = [sigma](double, double x, const PrecisionSpec& spec) {
    return fp_mul(round_to_precision(sigma, spec), x, spec);
  };
  model.x0 = x0;
  model.horizon = horizon;
  return model;
}

struct LevelSpec {
  int level;           // l >= 0
  double horizon = 1.0;

  std::uint64_t step_count() const { return std::uint64_t{1} << level; }
  double step() const { return std::ldexp(horizon, -level); }
};

struct KahanState {
  double sum = 0.0;
  double comp = 0.0;
};

// One uncompensated update with the diffusion term given as b*sqrt_dt*z.
inline double em_step(double x, double t, double dt, double sqrt_dt, double z,
                      const SdeModel& model, const PrecisionSpec& spec) {
  double a = model.drift(t, x, spec);
  double b = model.diffusion(t, x, spec);
  double drift_term = fp_mul(a, dt, spec);
  double diffusion_term = fp_mul(fp_mul(b, sqrt_dt, spec), z, spec);
  double increment = fp_add(drift_term, diffusion_term, spec);
  return fp_add(x, increment, spec);
}

// Variant taking a precomputed Wiener increment, used for coarse paths whose
// increments are pairwise sums of the fine draws.
inline double em_step_dw(double x, double t, double dt, double dw,
                         const SdeModel& model, const PrecisionSpec& spec) {
  double a = model.drift(t, x, spec);
  double b = model.diffusion(t, x, spec);
  double drift_term = fp_mul(a, dt, spec);
  double diffusion_term = fp_mul(b, dw, spec);
  double increment = fp_add(drift_term, diffusion_term, spec);
  return fp_add(x, increment, spec);
}

namespace detail {

// Kahan-compensated accumulation of one increment; all four ops in spec.
inline double kahan_accumulate(KahanState& k, double increment,
                               const PrecisionSpec& spec) {
  double y = fp_sub(increment, k.comp, spec);
  double updated = fp_add(k.sum, y, spec);
  k.comp = fp_sub(fp_sub(updated, k.sum, spec), y, spec);
  k.sum = updated;
  return updated;
}

}  // namespace detail

inline double em_step_kahan(double x, KahanState& kahan, double t, double dt,
                            double sqrt_dt, double z, const SdeModel& model,
                            const PrecisionSpec& spec) {
  double a = model.drift(t, x, spec);
  double b = model.diffusion(t, x, spec);
  double drift_term = fp_mul(a, dt, spec);
  double diffusion_term = fp_mul(fp_mul(b, sqrt_dt, spec), z, spec);
  double increment = fp_add(drift_term, diffusion_term, spec);
  return detail::kahan_accumulate(kahan, increment, spec);
}

inline double em_step_kahan_dw(double x, KahanState& kahan, double t, double dt,
                               double dw, const SdeModel& model,
                               const PrecisionSpec& spec) {
  double a = model.drift(t, x, spec);
  double b = model.diffusion(t, x, spec);
  double drift_term = fp_mul(a, dt, spec);
  double diffusion_term = fp_mul(b, dw, spec);
  double increment = fp_add(drift_term, diffusion_term, spec);
  return detail::kahan_accumulate(kahan, increment, spec);
}

namespace detail {

inline void check_state(double x, std::uint64_t step_index) {
  if (!std::isfinite(x))
    throw std::runtime_error("non-finite state at step " +
                             std::to_string(step_index));
}

}  // namespace detail

struct PathResult {
  double terminal = 0.0;
  std::uint64_t rng_draws = 0;
  std::uint64_t steps = 0;
};

// Single-path simulation. approx == nullptr uses the exact inverse CDF; a
// non-null approx evaluates the piecewise polynomial, and only the evaluated
// variable is rounded into spec (the uniform is consumed at full precision).
inline PathResult simulate_path(const SdeModel& model, const LevelSpec& level,
                                const PrecisionSpec& spec,
                                const InvCdfApprox* approx, bool kahan,
                                UniformStream stream) {
  const std::uint64_t n_steps = level.step_count();
  const double dt_exact = level.step();
  const double dt = round_to_precision(dt_exact, spec);
  const double sqrt_dt = round_to_precision(std::sqrt(dt_exact), spec);

  double x = round_to_precision(model.x0, spec);
  KahanState ks{x, 0.0};
  for (std::uint64_t n = 0; n < n_steps; ++n) {
    double u = stream.next();
    double z = approx ? round_to_precision((*approx)(u), spec)
                      : round_to_precision(exact_inv_cdf(u), spec);
    double t = static_cast<double>(n) * dt_exact;
    x = kahan ? em_step_kahan(x, ks, t, dt, sqrt_dt, z, model, spec)
              : em_step(x, t, dt, sqrt_dt, z, model, spec);
    detail::check_state(x, n);
  }
  return {x, n_steps, n_steps};
}

// Terminal values of the exact-variable carrier path and the approximate
// low-precision path driven by the same uniforms, at the same level.
struct TwoWayResult {
  double x_hat = 0.0;  // carrier precision, exact inverse CDF
  double x_bar = 0.0;  // target precision, approximate variables
  std::uint64_t rng_draws = 0;
};

inline TwoWayResult simulate_two_way(const SdeModel& model,
                                     const LevelSpec& level,
                                     const PrecisionSpec& spec_low,
                                     const InvCdfApprox* approx, bool kahan,
                                     UniformStream stream) {
  const PrecisionSpec carrier = PrecisionSpec::carrier();
  const std::uint64_t n_steps = level.step_count();
  const double dt_exact = level.step();
  const double sqrt_dt_exact = std::sqrt(dt_exact);
  const double dt_low = round_to_precision(dt_exact, spec_low);
  const double sqrt_dt_low = round_to_precision(sqrt_dt_exact, spec_low);

  double x_hat = model.x0;
  double x_bar = round_to_precision(model.x0, spec_low);
  KahanState ks{x_bar, 0.0};
  for (std::uint64_t n = 0; n < n_steps; ++n) {
    double u = stream.next();
    double z = exact_inv_cdf(u);
    double z_bar = round_to_precision(approx ? (*approx)(u) : z, spec_low);
    double t = static_cast<double>(n) * dt_exact;
    x_hat = em_step(x_hat, t, dt_exact, sqrt_dt_exact, z, model, carrier);
    x_bar = kahan
                ? em_step_kahan(x_bar, ks, t, dt_low, sqrt_dt_low, z_bar, model,
                                spec_low)
                : em_step(x_bar, t, dt_low, sqrt_dt_low, z_bar, model, spec_low);
    detail::check_state(x_bar, n);
  }
  return {x_hat, x_bar, n_steps};
}

// The four coupled terminal values for one fine/coarse path pair. All four
// paths consume exactly the same 2^l uniform draws; coarse Wiener increments
// are pairwise sums of the fine increments in the respective precision. At
// l = 0 the coarse values are 0 by the telescoping convention.
struct CoupledResult {
  double x_hat_fine = 0.0;
  double x_hat_coarse = 0.0;
  double x_bar_fine = 0.0;
  double x_bar_coarse = 0.0;
  std::uint64_t rng_draws = 0;
  std::uint64_t steps = 0;
};

inline CoupledResult simulate_coupled(const SdeModel& model, int level,
                                      const PrecisionSpec& spec_low,
                                      const InvCdfApprox* approx, bool kahan,
                                      UniformStream stream) {
  if (level < 0) throw std::invalid_argument("level must be >= 0");
  const PrecisionSpec carrier = PrecisionSpec::carrier();
  const LevelSpec fine{level, model.horizon};
  const std::uint64_t n_fine = fine.step_count();
  const double dtf = fine.step();
  const double sqrt_dtf = std::sqrt(dtf);
  const double dtc = 2.0 * dtf;
  const double dtf_low = round_to_precision(dtf, spec_low);
  const double sqrt_dtf_low = round_to_precision(sqrt_dtf, spec_low);
  const double dtc_low = round_to_precision(dtc, spec_low);

  CoupledResult result;
  result.rng_draws = n_fine;
  result.steps = level == 0 ? n_fine : n_fine + n_fine / 2;

  double xh_f = model.x0;
  double xh_c = model.x0;
  double xb_f = round_to_precision(model.x0, spec_low);
  double xb_c = xb_f;
  KahanState ks_f{xb_f, 0.0};
  KahanState ks_c{xb_c, 0.0};

  if (level == 0) {
    double u = stream.next();
    double z = exact_inv_cdf(u);
    double z_bar = round_to_precision(approx ? (*approx)(u) : z, spec_low);
    xh_f = em_step(xh_f, 0.0, dtf, sqrt_dtf, z, model, carrier);
    xb_f = kahan ? em_step_kahan(xb_f, ks_f, 0.0, dtf_low, sqrt_dtf_low, z_bar,
                                 model, spec_low)
                 : em_step(xb_f, 0.0, dtf_low, sqrt_dtf_low, z_bar, model,
                           spec_low);
    detail::check_state(xb_f, 0);
    result = {xh_f, 0.0, xb_f, 0.0, result.rng_draws, result.steps};
    return result;
  }

  for (std::uint64_t m = 0; m < n_fine / 2; ++m) {
    double dw_hat[2];
    double dw_bar[2];
    for (int half = 0; half < 2; ++half) {
      std::uint64_t n = 2 * m + half;
      double u = stream.next();
      double z = exact_inv_cdf(u);
      double z_bar = round_to_precision(approx ? (*approx)(u) : z, spec_low);
      double t = static_cast<double>(n) * dtf;
      dw_hat[half] = sqrt_dtf * z;
      dw_bar[half] = fp_mul(sqrt_dtf_low, z_bar, spec_low);
      xh_f = em_step(xh_f, t, dtf, sqrt_dtf, z, model, carrier);
      xb_f = kahan ? em_step_kahan(xb_f, ks_f, t, dtf_low, sqrt_dtf_low, z_bar,
                                   model, spec_low)
                   : em_step(xb_f, t, dtf_low, sqrt_dtf_low, z_bar, model,
                             spec_low);
      detail::check_state(xb_f, n);
    }
    double tc = static_cast<double>(m) * dtc;
    double dwc_hat = dw_hat[0] + dw_hat[1];
    double dwc_bar = fp_add(dw_bar[0], dw_bar[1], spec_low);
    xh_c = em_step_dw(xh_c, tc, dtc, dwc_hat, model, carrier);
    xb_c = kahan ? em_step_kahan_dw(xb_c, ks_c, tc, dtc_low, dwc_bar, model,
                                    spec_low)
                 : em_step_dw(xb_c, tc, dtc_low, dwc_bar, model, spec_low);
    detail::check_state(xb_c, 2 * m + 1);
  }

  result.x_hat_fine = xh_f;
  result.x_hat_coarse = xh_c;
  result.x_bar_fine = xb_f;
  result.x_bar_coarse = xb_c;
  return result;
}

// Empirical per-step rounding residuals along simulated low-precision paths.
// eta is the outer-accumulation residual R(x + inc) - (x + inc) with inc the
// already-rounded inner sum; eta' is the inner-sum residual (A (+) B) - (A + B).
struct StepErrorStats {
  double mean_eta = 0.0;
  double mean_abs_eta = 0.0;
  double mean_eta_prime = 0.0;
  double mean_abs_eta_prime = 0.0;
  std::uint64_t samples = 0;
};

inline StepErrorStats step_error_probe(const SdeModel& model,
                                       const LevelSpec& level,
                                       const PrecisionSpec& spec,
                                       const InvCdfApprox* approx,
                                       std::uint64_t n_samples,
                                       std::uint64_t seed) {
  const std::uint64_t n_steps = level.step_count();
  const double dt_exact = level.step();
  const double dt = round_to_precision(dt_exact, spec);
  const double sqrt_dt = round_to_precision(std::sqrt(dt_exact), spec);

  StepErrorStats stats;
  double sum_eta = 0.0, sum_abs_eta = 0.0;
  double sum_etap = 0.0, sum_abs_etap = 0.0;

  std::uint64_t path_index = 0;
  while (stats.samples < n_samples) {
    UniformStream stream(seed, path_index++);
    double x = round_to_precision(model.x0, spec);
    for (std::uint64_t n = 0; n < n_steps && stats.samples < n_samples; ++n) {
      double u = stream.next();
      double z = approx ? round_to_precision((*approx)(u), spec)
                        : round_to_precision(exact_inv_cdf(u), spec);
      double t = static_cast<double>(n) * dt_exact;
      double a = model.drift(t, x, spec);
      double b = model.diffusion(t, x, spec);
      double drift_term = fp_mul(a, dt, spec);
      double diffusion_term = fp_mul(fp_mul(b, sqrt_dt, spec), z, spec);
      double inner = fp_add(drift_term, diffusion_term, spec);
      double eta_prime = inner - (drift_term + diffusion_term);
      double next = fp_add(x, inner, spec);
      double eta = next - (x + inner);
      sum_eta += eta;
      sum_abs_eta += std::abs(eta);
      sum_etap += eta_prime;
      sum_abs_etap += std::abs(eta_prime);
      stats.samples += 1;
      x = next;
      detail::check_state(x, n);
    }
  }
  double count = static_cast<double>(stats.samples);
  stats.mean_eta = sum_eta / count;
  stats.mean_abs_eta = sum_abs_eta / count;
  stats.mean_eta_prime = sum_etap / count;
  stats.mean_abs_eta_prime = sum_abs_etap / count;
  return stats;
}

}  // namespace lpmc
