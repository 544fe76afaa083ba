// Experiment drivers behind the CLI subcommands. Every driver is a pure
// function of (config, seed): batches are merged in a fixed order, so output
// is identical for any thread count.

#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "lpmc/invcdf_approx.hpp"
#include "lpmc/mlmc.hpp"
#include "lpmc/sde.hpp"
#include "lpmc/softfloat.hpp"
#include "lpmc/stats.hpp"

namespace lpmc {

struct ExperimentConfig {
  double mu = 0.05;
  double sigma = 0.2;
  double x0 = 1.0;
  double horizon = 1.0;

  // First entry is the low-precision role; two-way runs every entry.
  std::vector<std::string> precisions = {"fp16"};
  std::string approx = "linear:1024";  // exact | linear:K | cubic:K
  bool kahan = false;

  int level_min = 0;
  int level_max = 12;
  // Paths per level; broadcast if a single entry. Empty selects the desk
  // defaults (1e4 per level, halved per level above l = 9).
  std::vector<std::uint64_t> paths;

  std::uint64_t seed = 1;
  CostModel cost;
  int threads = 1;

  SdeModel model() const { return make_gbm(mu, sigma, x0, horizon); }

  std::uint64_t paths_for_level(int level) const {
    if (!paths.empty()) {
      std::size_t idx = static_cast<std::size_t>(level - level_min);
      if (paths.size() == 1) idx = 0;
      if (idx >= paths.size())
        throw std::invalid_argument("paths list shorter than level range");
      return paths[idx];
    }
    if (level <= 9) return 10000;
    return std::max<std::uint64_t>(2, 10000 >> (level - 9));
  }

  void validate() const {
    if (level_min < 0 || level_max < level_min)
      throw std::invalid_argument("empty or negative level range");
    if (precisions.empty()) throw std::invalid_argument("no precision given");
    for (const auto& p : precisions) PrecisionSpec::parse(p);
    if (approx != "exact") InvCdfApprox::parse(approx);
    for (int l = level_min; l <= level_max; ++l) {
      if (paths_for_level(l) < 2)
        throw std::invalid_argument("need at least 2 paths per level");
    }
  }

  // nullopt encodes the exact inverse CDF ("approx=exact").
  std::optional<InvCdfApprox> build_approx() const {
    if (approx == "exact") return std::nullopt;
    return InvCdfApprox::parse(approx);
  }
};

// ---------------------------------------------------------------------------
// two-way: variance of X_hat_N - X_bar_N per (N, precision).

struct TwoWayRow {
  std::uint64_t n_steps = 0;
  std::string precision;
  bool kahan = false;
  double variance = 0.0;
  double stderr_variance = 0.0;
  std::uint64_t paths = 0;
};

namespace detail {

template <typename Sample>
MomentAccumulator run_batched(std::uint64_t n, int threads, Sample&& sample) {
  constexpr std::uint64_t kBatch = 256;
  const std::uint64_t n_batches = (n + kBatch - 1) / kBatch;
  std::vector<MomentAccumulator> batches(n_batches);
  auto run_batch = [&](std::uint64_t bi) {
    MomentAccumulator acc;
    std::uint64_t end = std::min((bi + 1) * kBatch, n);
    for (std::uint64_t i = bi * kBatch; i < end; ++i) acc.add(sample(i));
    batches[bi] = acc;
  };
  if (threads <= 1 || n_batches <= 1) {
    for (std::uint64_t bi = 0; bi < n_batches; ++bi) run_batch(bi);
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) {
      pool.emplace_back([&, t] {
        for (std::uint64_t bi = t; bi < n_batches; bi += threads) run_batch(bi);
      });
    }
    for (auto& th : pool) th.join();
  }
  MomentAccumulator total;
  for (const auto& b : batches) total.merge(b);
  return total;
}

}  // namespace detail

inline std::vector<TwoWayRow> run_two_way_experiment(
    const ExperimentConfig& config) {
  config.validate();
  const SdeModel model = config.model();
  const auto approx = config.build_approx();
  const InvCdfApprox* approx_ptr = approx ? &*approx : nullptr;

  std::vector<TwoWayRow> rows;
  for (std::size_t pi = 0; pi < config.precisions.size(); ++pi) {
    const PrecisionSpec spec = PrecisionSpec::parse(config.precisions[pi]);
    for (int l = config.level_min; l <= config.level_max; ++l) {
      const LevelSpec level{l, config.horizon};
      const std::uint64_t n_paths = config.paths_for_level(l);
      const std::uint64_t path_base =
          (static_cast<std::uint64_t>(pi) << 48) |
          (static_cast<std::uint64_t>(l) << 40);
      MomentAccumulator acc = detail::run_batched(
          n_paths, config.threads, [&](std::uint64_t i) {
            UniformStream stream(config.seed, path_base + i);
            TwoWayResult r = simulate_two_way(model, level, spec, approx_ptr,
                                              config.kahan, stream);
            return r.x_hat - r.x_bar;
          });
      rows.push_back({level.step_count(), config.precisions[pi], config.kahan,
                      acc.variance(), acc.variance_stderr(), n_paths});
    }
  }
  return rows;
}

// ---------------------------------------------------------------------------
// four-way: the six level-variance series. The low-precision role is
// precisions[0]; the higher-precision four-way series uses precisions[1]
// when given, fp32 otherwise.

struct FourWayRow {
  int level = 0;
  std::string series;
  double variance = 0.0;
  double stderr_variance = 0.0;
  std::uint64_t paths = 0;
};

struct FourWayOutput {
  std::vector<FourWayRow> rows;
  // Per-level stats behind the series, reusable for speedup reports.
  std::vector<LevelStats> low_stats;        // precisions[0], kahan off
  std::vector<LevelStats> low_kahan_stats;  // precisions[0], kahan on
  std::vector<LevelStats> high_stats;       // high precision, kahan off
};

inline FourWayOutput run_four_way_experiment(const ExperimentConfig& config) {
  config.validate();
  const SdeModel model = config.model();
  const auto approx = config.build_approx();
  const InvCdfApprox* approx_ptr = approx ? &*approx : nullptr;

  const std::string low_name = config.precisions[0];
  const std::string high_name =
      config.precisions.size() > 1 ? config.precisions[1] : "fp32";
  const PrecisionSpec low = PrecisionSpec::parse(low_name);
  const PrecisionSpec high = PrecisionSpec::parse(high_name);

  FourWayOutput out;
  for (int l = config.level_min; l <= config.level_max; ++l) {
    const std::uint64_t n_paths = config.paths_for_level(l);
    const std::uint64_t base = static_cast<std::uint64_t>(l) << 40;
    out.low_stats.push_back(estimate_level_stats(
        model, l, low, approx_ptr, false, n_paths, config.seed, config.cost,
        config.threads, base));
    out.low_kahan_stats.push_back(estimate_level_stats(
        model, l, low, approx_ptr, true, n_paths, config.seed, config.cost,
        config.threads, base | (std::uint64_t{1} << 36)));
    out.high_stats.push_back(estimate_level_stats(
        model, l, high, approx_ptr, false, n_paths, config.seed, config.cost,
        config.threads, base | (std::uint64_t{2} << 36)));

    const LevelStats& s0 = out.low_stats.back();
    const LevelStats& s1 = out.low_kahan_stats.back();
    const LevelStats& s2 = out.high_stats.back();
    out.rows.push_back(
        {l, "two_way_exact", s0.v_hat, s0.v_hat_stderr, n_paths});
    out.rows.push_back(
        {l, "two_way_" + low_name, s0.v_bar, s0.v_bar_stderr, n_paths});
    out.rows.push_back({l, "two_way_" + low_name + "_kahan", s1.v_bar,
                        s1.v_bar_stderr, n_paths});
    out.rows.push_back(
        {l, "four_way_" + high_name, s2.V_bar, s2.V_bar_stderr, n_paths});
    out.rows.push_back(
        {l, "four_way_" + low_name, s0.V_bar, s0.V_bar_stderr, n_paths});
    out.rows.push_back({l, "four_way_" + low_name + "_kahan", s1.V_bar,
                        s1.V_bar_stderr, n_paths});
  }
  return out;
}

// ---------------------------------------------------------------------------
// speedup: per-level savings for the single / half / half+Kahan variants.

struct SpeedupRow {
  int level = 0;
  std::string variant;
  double speedup = 0.0;
  bool cost_ratio_only = false;
};

inline std::vector<SpeedupRow> run_speedup_report(
    const std::vector<LevelStats>& high_stats,
    const std::vector<LevelStats>& low_stats,
    const std::vector<LevelStats>& low_kahan_stats) {
  if (high_stats.empty()) throw std::invalid_argument("missing level stats");
  std::vector<SpeedupRow> rows;
  for (std::size_t i = 0; i < high_stats.size(); ++i) {
    SpeedupResult single = per_level_speedup(high_stats[i]);
    rows.push_back({high_stats[i].level, "single", single.value,
                    single.cost_ratio_only});
    if (i < low_stats.size()) {
      SpeedupResult half = per_level_speedup(low_stats[i]);
      rows.push_back(
          {low_stats[i].level, "half", half.value, half.cost_ratio_only});
    }
    if (i < low_kahan_stats.size()) {
      SpeedupResult hk = per_level_speedup(low_kahan_stats[i]);
      rows.push_back({low_kahan_stats[i].level, "half_kahan", hk.value,
                      hk.cost_ratio_only});
    }
  }
  return rows;
}

// ---------------------------------------------------------------------------
// density: inverse-CDF curve plus a sampled histogram of the approximation.

struct DensityRow {
  std::string series;  // "curve" or "hist"
  double x = 0.0;
  double y = 0.0;
};

inline std::vector<DensityRow> run_density_report(
    const ExperimentConfig& config, int curve_points = 2048,
    std::uint64_t hist_samples = 1000000, double bin_width = 0.05) {
  config.validate();
  const auto approx = config.build_approx();
  std::vector<DensityRow> rows;

  auto eval = [&](double u) {
    return approx ? (*approx)(u) : exact_inv_cdf(u);
  };

  for (int i = 1; i < curve_points; ++i) {
    double u = static_cast<double>(i) / curve_points;
    rows.push_back({"curve", u, eval(u)});
  }

  double z_max = approx ? approx->max_value() : exact_inv_cdf(1.0 - 0x1p-30);
  int n_bins = static_cast<int>(std::ceil(2.0 * z_max / bin_width)) + 1;
  std::vector<std::uint64_t> bins(n_bins, 0);
  UniformStream stream(config.seed, 0);
  for (std::uint64_t i = 0; i < hist_samples; ++i) {
    double z = eval(stream.next());
    int b = static_cast<int>((z + z_max) / bin_width);
    if (b < 0) b = 0;
    if (b >= n_bins) b = n_bins - 1;
    bins[b] += 1;
  }
  for (int b = 0; b < n_bins; ++b) {
    double center = -z_max + (b + 0.5) * bin_width;
    double density = static_cast<double>(bins[b]) /
                     (static_cast<double>(hist_samples) * bin_width);
    rows.push_back({"hist", center, density});
  }
  return rows;
}

// ---------------------------------------------------------------------------
// step-errors: the per-step rounding residual probe per level.

struct StepErrorRow {
  int level = 0;
  StepErrorStats stats;
};

inline std::vector<StepErrorRow> run_step_error_report(
    const ExperimentConfig& config, std::uint64_t samples) {
  config.validate();
  if (samples < 10000)
    throw std::invalid_argument("step-error probe needs >= 1e4 samples");
  const SdeModel model = config.model();
  const auto approx = config.build_approx();
  const InvCdfApprox* approx_ptr = approx ? &*approx : nullptr;
  const PrecisionSpec spec = PrecisionSpec::parse(config.precisions[0]);

  std::vector<StepErrorRow> rows;
  for (int l = config.level_min; l <= config.level_max; ++l) {
    LevelSpec level{l, config.horizon};
    rows.push_back({l, step_error_probe(model, level, spec, approx_ptr,
                                        samples, config.seed)});
  }
  return rows;
}

}  // namespace lpmc
