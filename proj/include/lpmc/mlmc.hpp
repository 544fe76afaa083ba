// Level-wise variance and cost estimation, sample allocation, and the nested
// multilevel estimator built on coupled exact/approximate path pairs.
//
// Path batches are a fixed 256 paths; batch results are merged in index
// order, so results are identical for any thread count.

#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <thread>
#include <vector>

#include "lpmc/sde.hpp"
#include "lpmc/stats.hpp"

namespace lpmc {

struct CostModel {
  double cycles_exact_rng = 3.5;
  double cycles_approx_rng_single = 0.5;
  double cycles_approx_rng_half = 0.25;
  // Multiplies the approximate-path cost when Kahan compensation is enabled;
  // 1.4 puts the compensated half-precision cost midway between the half and
  // single precision figures (0.35 cycles per draw).
  double kahan_overhead_factor = 1.4;
  double per_step_arithmetic = 0.0;

  double approx_rng_cycles(const PrecisionSpec& spec) const {
    return spec.mantissa_bits <= 10 ? cycles_approx_rng_half
                                    : cycles_approx_rng_single;
  }
};

struct LevelStats {
  int level = 0;

  // Two-way exact difference X_hat_l - X_hat_{l-1} (carrier, exact Z).
  double mean_hat = 0.0, v_hat = 0.0, v_hat_stderr = 0.0;
  // Two-way approximate difference X_bar_l - X_bar_{l-1} (low precision).
  double mean_bar = 0.0, v_bar = 0.0, v_bar_stderr = 0.0;
  // Four-way difference.
  double mean_four = 0.0, V_bar = 0.0, V_bar_stderr = 0.0;

  // Costs per path in abstract cycle units.
  double c_hat = 0.0, c_bar = 0.0, C_bar = 0.0;

  // Sample counts behind the estimates above.
  std::uint64_t m_hat = 0, m_bar = 0, M_bar = 0;
};

struct CoupledMoments {
  MomentAccumulator d_hat;
  MomentAccumulator d_bar;
  MomentAccumulator d_four;

  void merge(const CoupledMoments& other) {
    d_hat.merge(other.d_hat);
    d_bar.merge(other.d_bar);
    d_four.merge(other.d_four);
  }
};

// Runs n_paths coupled simulations at the given level; the moment
// accumulators see samples in path-index order regardless of thread count.
inline CoupledMoments run_coupled_paths(const SdeModel& model, int level,
                                        const PrecisionSpec& spec_low,
                                        const InvCdfApprox* approx, bool kahan,
                                        std::uint64_t n_paths,
                                        std::uint64_t seed,
                                        std::uint64_t path_base,
                                        int threads = 1) {
  constexpr std::uint64_t kBatch = 256;
  const std::uint64_t n_batches = (n_paths + kBatch - 1) / kBatch;
  std::vector<CoupledMoments> batches(n_batches);

  auto run_batch = [&](std::uint64_t bi) {
    CoupledMoments acc;
    std::uint64_t begin = bi * kBatch;
    std::uint64_t end = std::min(begin + kBatch, n_paths);
    for (std::uint64_t i = begin; i < end; ++i) {
      UniformStream stream(seed, path_base + i);
      CoupledResult r =
          simulate_coupled(model, level, spec_low, approx, kahan, stream);
      double d_hat = r.x_hat_fine - r.x_hat_coarse;
      double d_bar = r.x_bar_fine - r.x_bar_coarse;
      acc.d_hat.add(d_hat);
      acc.d_bar.add(d_bar);
      acc.d_four.add(d_hat - d_bar);
    }
    batches[bi] = acc;
  };

  if (threads <= 1 || n_batches <= 1) {
    for (std::uint64_t bi = 0; bi < n_batches; ++bi) run_batch(bi);
  } else {
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (int t = 0; t < threads; ++t) {
      pool.emplace_back([&, t] {
        for (std::uint64_t bi = t; bi < n_batches; bi += threads) run_batch(bi);
      });
    }
    for (auto& th : pool) th.join();
  }

  CoupledMoments total;
  for (const auto& b : batches) total.merge(b);
  return total;
}

inline LevelStats estimate_level_stats(const SdeModel& model, int level,
                                       const PrecisionSpec& spec_low,
                                       const InvCdfApprox* approx, bool kahan,
                                       std::uint64_t n_paths,
                                       std::uint64_t seed,
                                       const CostModel& cost = {},
                                       int threads = 1,
                                       std::uint64_t path_base = 0) {
  if (n_paths < 2) throw std::invalid_argument("need at least 2 paths");
  CoupledMoments m = run_coupled_paths(model, level, spec_low, approx, kahan,
                                       n_paths, seed, path_base, threads);

  const double n_fine = std::ldexp(1.0, level);
  const double steps = level == 0 ? n_fine : 1.5 * n_fine;

  LevelStats s;
  s.level = level;
  s.mean_hat = m.d_hat.mean();
  s.v_hat = m.d_hat.variance();
  s.v_hat_stderr = m.d_hat.variance_stderr();
  s.mean_bar = m.d_bar.mean();
  s.v_bar = m.d_bar.variance();
  s.v_bar_stderr = m.d_bar.variance_stderr();
  s.mean_four = m.d_four.mean();
  s.V_bar = m.d_four.variance();
  s.V_bar_stderr = m.d_four.variance_stderr();

  s.c_hat = n_fine * cost.cycles_exact_rng + steps * cost.per_step_arithmetic;
  s.c_bar = n_fine * cost.approx_rng_cycles(spec_low) *
                (kahan ? cost.kahan_overhead_factor : 1.0) +
            steps * cost.per_step_arithmetic;
  // The four-way sampler runs both path families.
  s.C_bar = s.c_hat + s.c_bar;

  s.m_hat = s.m_bar = s.M_bar = n_paths;
  return s;
}

enum class AllocationKind { standard, nested };

struct Allocation {
  // Standard: per-level counts for the exact two-way estimator.
  // Nested: counts for the approximate two-way term.
  std::vector<std::uint64_t> primary;
  // Nested only: counts for the four-way correction term.
  std::vector<std::uint64_t> secondary;
  // Set when every variance was zero and minimal counts were returned.
  bool degenerate = false;
};

// Optimal counts m_l = 2 eps^-2 sqrt(v_l / c_l) * S with S the sum of
// sqrt(v c) over all terms, rounded up to at least one path per level.
inline Allocation allocate_samples(const std::vector<LevelStats>& stats,
                                   double eps, AllocationKind kind) {
  if (stats.empty()) throw std::invalid_argument("no level stats");
  if (!(eps > 0.0)) throw std::invalid_argument("eps must be positive");

  double s = 0.0;
  for (const auto& st : stats) {
    if (kind == AllocationKind::standard) {
      s += std::sqrt(st.v_hat * st.c_hat);
    } else {
      s += std::sqrt(st.v_bar * st.c_bar) + std::sqrt(st.V_bar * st.C_bar);
    }
  }

  Allocation alloc;
  alloc.degenerate = s == 0.0;
  const double scale = 2.0 / (eps * eps) * s;
  for (const auto& st : stats) {
    double v1 = kind == AllocationKind::standard ? st.v_hat : st.v_bar;
    double c1 = kind == AllocationKind::standard ? st.c_hat : st.c_bar;
    double m1 = v1 > 0.0 ? scale * std::sqrt(v1 / c1) : 0.0;
    alloc.primary.push_back(
        std::max<std::uint64_t>(1, static_cast<std::uint64_t>(std::ceil(m1))));
    if (kind == AllocationKind::nested) {
      double m2 = st.V_bar > 0.0 ? scale * std::sqrt(st.V_bar / st.C_bar) : 0.0;
      alloc.secondary.push_back(std::max<std::uint64_t>(
          1, static_cast<std::uint64_t>(std::ceil(m2))));
    }
  }
  return alloc;
}

struct PredictedTimes {
  double t_hat = 0.0;
  double t_bar = 0.0;
};

inline PredictedTimes predicted_times(const std::vector<LevelStats>& stats,
                                      double eps) {
  if (stats.empty()) throw std::invalid_argument("no level stats");
  if (!(eps > 0.0)) throw std::invalid_argument("eps must be positive");
  double s_hat = 0.0, s_bar = 0.0;
  for (const auto& st : stats) {
    s_hat += std::sqrt(st.v_hat * st.c_hat);
    s_bar += std::sqrt(st.v_bar * st.c_bar) + std::sqrt(st.V_bar * st.C_bar);
  }
  double scale = 2.0 / (eps * eps);
  return {scale * s_hat * s_hat, scale * s_bar * s_bar};
}

struct SpeedupResult {
  double value = 0.0;
  // Set when v_bar = 0 and only the cost ratio bounds the saving.
  bool cost_ratio_only = false;
};

// Reciprocal of the per-level savings-bound bracket
//   (v_bar c_bar)/(v_hat c_hat) * (1 + sqrt(V_bar C_bar / (v_bar c_bar)))^2.
inline SpeedupResult per_level_speedup(const LevelStats& s) {
  if (!(s.v_hat > 0.0) || !(s.c_hat > 0.0))
    throw std::invalid_argument("per_level_speedup needs v_hat, c_hat > 0");
  if (s.v_bar == 0.0) return {s.c_hat / s.c_bar, true};
  double ratio = (s.v_bar * s.c_bar) / (s.v_hat * s.c_hat);
  double mix = 1.0 + std::sqrt(s.V_bar * s.C_bar / (s.v_bar * s.c_bar));
  return {1.0 / (ratio * mix * mix), false};
}

struct EstimatorResult {
  double value = 0.0;  // theta_bar
  std::vector<double> level_contributions;
  std::vector<LevelStats> pilot_stats;
  Allocation allocation;
  PredictedTimes times;
  double eps = 0.0;
};

// Two-stage nested estimator: a fixed pilot pass per level, one allocation,
// then the main pass with the allocated counts. Deterministic given
// (config, seed): pilot and main passes use disjoint path-index namespaces.
inline EstimatorResult run_nested_estimator(const SdeModel& model, int max_level,
                                            const PrecisionSpec& spec_low,
                                            const InvCdfApprox* approx,
                                            bool kahan, double eps,
                                            std::uint64_t seed,
                                            const CostModel& cost = {},
                                            int threads = 1,
                                            std::uint64_t pilot_paths = 1000) {
  if (max_level < 0) throw std::invalid_argument("max level must be >= 0");

  auto path_base = [](int level, int phase) {
    return (static_cast<std::uint64_t>(level) << 40) |
           (static_cast<std::uint64_t>(phase) << 36);
  };

  EstimatorResult result;
  result.eps = eps;
  for (int l = 0; l <= max_level; ++l) {
    result.pilot_stats.push_back(estimate_level_stats(
        model, l, spec_low, approx, kahan, pilot_paths, seed, cost, threads,
        path_base(l, 0)));
  }
  result.allocation =
      allocate_samples(result.pilot_stats, eps, AllocationKind::nested);
  result.times = predicted_times(result.pilot_stats, eps);

  for (int l = 0; l <= max_level; ++l) {
    CoupledMoments two_way =
        run_coupled_paths(model, l, spec_low, approx, kahan,
                          result.allocation.primary[l], seed, path_base(l, 1),
                          threads);
    CoupledMoments four_way =
        run_coupled_paths(model, l, spec_low, approx, kahan,
                          result.allocation.secondary[l], seed, path_base(l, 2),
                          threads);
    double contribution = two_way.d_bar.mean() +
                          (four_way.d_hat.mean() - four_way.d_bar.mean());
    result.level_contributions.push_back(contribution);
    result.value += contribution;
  }
  return result;
}

}  // namespace lpmc
