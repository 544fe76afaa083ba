#include <doctest.h>

#include <cmath>

#include "lpmc/experiments.hpp"

using namespace lpmc;

namespace {

ExperimentConfig small_config() {
  ExperimentConfig cfg;
  cfg.precisions = {"fp16", "fp32"};
  cfg.approx = "linear:64";
  cfg.level_min = 0;
  cfg.level_max = 3;
  cfg.paths = {500};
  return cfg;
}

}  // namespace

TEST_CASE("config validation") {
  ExperimentConfig cfg = small_config();
  CHECK_NOTHROW(cfg.validate());

  cfg.precisions = {};
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = small_config();
  cfg.precisions = {"fp13"};
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = small_config();
  cfg.approx = "linear:7";
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = small_config();
  cfg.level_max = -1;
  cfg.level_min = 0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = small_config();
  cfg.paths = {500, 500};  // shorter than the four-level range
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = small_config();
  cfg.paths = {1};
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
}

TEST_CASE("default path schedule") {
  ExperimentConfig cfg;
  CHECK(cfg.paths_for_level(0) == 10000);
  CHECK(cfg.paths_for_level(9) == 10000);
  CHECK(cfg.paths_for_level(10) == 5000);
  CHECK(cfg.paths_for_level(12) == 1250);
}

TEST_CASE("two-way experiment: shape and thread independence") {
  ExperimentConfig cfg = small_config();
  auto rows = run_two_way_experiment(cfg);
  CHECK(rows.size() == 2 * 4);  // precisions x levels
  for (const auto& r : rows) {
    CHECK(r.paths == 500);
    CHECK(r.variance >= 0.0);
  }
  // fp32 couples more tightly than fp16 at every level.
  for (int i = 0; i < 4; ++i) CHECK(rows[4 + i].variance < rows[i].variance);

  cfg.threads = 3;
  auto rows3 = run_two_way_experiment(cfg);
  for (std::size_t i = 0; i < rows.size(); ++i)
    CHECK(rows[i].variance == rows3[i].variance);
}

TEST_CASE("four-way experiment: series layout and speedup report") {
  ExperimentConfig cfg = small_config();
  auto out = run_four_way_experiment(cfg);
  CHECK(out.rows.size() == 6 * 4);
  CHECK(out.low_stats.size() == 4);
  CHECK(out.rows[0].series == "two_way_exact");
  CHECK(out.rows[1].series == "two_way_fp16");
  CHECK(out.rows[2].series == "two_way_fp16_kahan");
  CHECK(out.rows[3].series == "four_way_fp32");
  CHECK(out.rows[4].series == "four_way_fp16");
  CHECK(out.rows[5].series == "four_way_fp16_kahan");

  // The exact two-way series is shared: it cannot depend on the low precision.
  for (std::size_t i = 0; i < out.low_stats.size(); ++i) {
    CHECK(out.low_stats[i].v_hat > 0.0);
    CHECK(out.low_stats[i].V_bar >= 0.0);
  }

  auto speedups =
      run_speedup_report(out.high_stats, out.low_stats, out.low_kahan_stats);
  CHECK(speedups.size() == 3 * 4);
  for (const auto& s : speedups) CHECK(s.speedup > 0.0);
  CHECK_THROWS_AS(run_speedup_report({}, {}, {}), std::invalid_argument);
}

TEST_CASE("density report: curve and normalized histogram") {
  ExperimentConfig cfg = small_config();
  cfg.precisions = {"fp16"};
  cfg.approx = "linear:8";
  auto rows = run_density_report(cfg, 256, 100000, 0.1);

  double hist_mass = 0.0;
  int n_curve = 0, n_hist = 0;
  for (const auto& r : rows) {
    if (r.series == "curve") {
      ++n_curve;
    } else {
      CHECK(r.series == "hist");
      ++n_hist;
      hist_mass += r.y * 0.1;
    }
  }
  CHECK(n_curve == 255);
  CHECK(n_hist > 10);
  CHECK(hist_mass == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("step error report: sample floor and row range") {
  ExperimentConfig cfg = small_config();
  cfg.precisions = {"fp16"};
  cfg.level_min = 2;
  cfg.level_max = 4;
  CHECK_THROWS_AS(run_step_error_report(cfg, 5000), std::invalid_argument);
  auto rows = run_step_error_report(cfg, 10000);
  CHECK(rows.size() == 3);
  for (const auto& r : rows) {
    CHECK(r.stats.samples >= 10000);
    CHECK(r.stats.mean_abs_eta > 0.0);
  }
}
