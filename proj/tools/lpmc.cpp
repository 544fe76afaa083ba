// lpmc: experiment orchestration CLI.
//
// Subcommands: density | two-way | four-way | speedup | step-errors | estimate.
// Every run is a pure function of (config, seed); outputs are byte-identical
// across runs and thread counts. Exit codes: 0 success, 2 config error,
// 3 numerical error.

#include <CLI11.hpp>

#include <cstdint>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "lpmc/csv.hpp"
#include "lpmc/experiments.hpp"

namespace {

struct CliOptions {
  lpmc::ExperimentConfig cfg;
  std::string precision = "fp16";
  std::string levels = "0..12";
  std::string paths;
  std::string cost_model_file;
  std::string out_path;
  double eps = 1e-3;
  std::uint64_t samples = 1000000;
  std::string stats_path;
  std::string stats_out_path;
};

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> parts;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep)) parts.push_back(item);
  return parts;
}

void apply_common(CliOptions& o) {
  o.cfg.precisions.clear();
  for (const auto& p : split(o.precision, ','))
    if (!p.empty()) o.cfg.precisions.push_back(p);

  auto range = o.levels.find("..");
  try {
    if (range == std::string::npos) {
      o.cfg.level_min = o.cfg.level_max = std::stoi(o.levels);
    } else {
      o.cfg.level_min = std::stoi(o.levels.substr(0, range));
      o.cfg.level_max = std::stoi(o.levels.substr(range + 2));
    }
  } catch (const std::exception&) {
    throw std::invalid_argument("bad level range: " + o.levels);
  }

  o.cfg.paths.clear();
  if (!o.paths.empty()) {
    try {
      for (const auto& p : split(o.paths, ','))
        o.cfg.paths.push_back(std::stoull(p));
    } catch (const std::exception&) {
      throw std::invalid_argument("bad paths list: " + o.paths);
    }
  }

  if (!o.cost_model_file.empty()) {
    std::ifstream in(o.cost_model_file);
    if (!in)
      throw std::invalid_argument("cannot open cost model file: " +
                                  o.cost_model_file);
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty() || line[0] == '#') continue;
      auto eq = line.find('=');
      if (eq == std::string::npos) continue;
      std::string key = line.substr(0, eq);
      double value = std::stod(line.substr(eq + 1));
      if (key == "cycles_exact_rng") o.cfg.cost.cycles_exact_rng = value;
      else if (key == "cycles_approx_rng_single")
        o.cfg.cost.cycles_approx_rng_single = value;
      else if (key == "cycles_approx_rng_half")
        o.cfg.cost.cycles_approx_rng_half = value;
      else if (key == "kahan_overhead_factor")
        o.cfg.cost.kahan_overhead_factor = value;
      else if (key == "per_step_arithmetic")
        o.cfg.cost.per_step_arithmetic = value;
      else
        throw std::invalid_argument("unknown cost model key: " + key);
    }
  }
  o.cfg.validate();
}

class Output {
 public:
  explicit Output(const std::string& path) {
    if (!path.empty()) {
      file_.open(path);
      if (!file_)
        throw std::invalid_argument("cannot open output file: " + path);
    }
  }
  std::ostream& stream() { return file_.is_open() ? file_ : std::cout; }

 private:
  std::ofstream file_;
};

void add_common_options(CLI::App* sub, CliOptions& o) {
  sub->add_option("--precision", o.precision,
                  "bf16|fp16|fp22|fp32|carrier|custom:m (comma list allowed)");
  sub->add_option("--approx", o.cfg.approx, "exact|linear:K|cubic:K");
  sub->add_flag("--kahan", o.cfg.kahan, "Kahan-compensate the accumulation");
  sub->add_option("--levels", o.levels, "level range a..b or single level");
  sub->add_option("--paths", o.paths, "paths per level: n or n,n,...");
  sub->add_option("--seed", o.cfg.seed, "master seed");
  sub->add_option("--mu", o.cfg.mu, "GBM drift coefficient");
  sub->add_option("--sigma", o.cfg.sigma, "GBM diffusion coefficient");
  sub->add_option("--x0", o.cfg.x0, "initial value");
  sub->add_option("--horizon", o.cfg.horizon, "time horizon T");
  sub->add_option("--cost-model", o.cost_model_file,
                  "key=value cost model override file");
  sub->add_option("--threads", o.cfg.threads, "worker thread count");
  sub->add_option("--out", o.out_path, "output CSV path (default stdout)");
  sub->set_config("--config", "", "flat key=value config file; flags win");
}

void write_stats_csv(std::ostream& out,
                     const std::vector<lpmc::LevelStats>& high,
                     const std::vector<lpmc::LevelStats>& low,
                     const std::vector<lpmc::LevelStats>& low_kahan) {
  lpmc::CsvWriter csv(out);
  csv.row("level", "variant", "v_hat", "c_hat", "v_bar", "c_bar", "V_bar",
          "C_bar");
  auto emit = [&](const std::vector<lpmc::LevelStats>& stats,
                  const char* variant) {
    for (const auto& s : stats)
      csv.row(s.level, variant, s.v_hat, s.c_hat, s.v_bar, s.c_bar, s.V_bar,
              s.C_bar);
  };
  emit(high, "single");
  emit(low, "half");
  emit(low_kahan, "half_kahan");
}

std::map<std::string, std::vector<lpmc::LevelStats>> load_stats_csv(
    const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open stats file: " + path);
  std::map<std::string, std::vector<lpmc::LevelStats>> by_variant;
  std::string line;
  std::getline(in, line);  // header
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto cells = split(line, ',');
    if (cells.size() != 8)
      throw std::invalid_argument("bad stats row in " + path + ": " + line);
    lpmc::LevelStats s;
    s.level = std::stoi(cells[0]);
    s.v_hat = std::stod(cells[2]);
    s.c_hat = std::stod(cells[3]);
    s.v_bar = std::stod(cells[4]);
    s.c_bar = std::stod(cells[5]);
    s.V_bar = std::stod(cells[6]);
    s.C_bar = std::stod(cells[7]);
    by_variant[cells[1]].push_back(s);
  }
  return by_variant;
}

int run_density(CliOptions& o) {
  apply_common(o);
  auto rows = lpmc::run_density_report(o.cfg);
  Output out(o.out_path);
  lpmc::CsvWriter csv(out.stream());
  csv.row("series", "x", "y");
  for (const auto& r : rows) csv.row(r.series, r.x, r.y);
  return 0;
}

int run_two_way(CliOptions& o) {
  apply_common(o);
  auto rows = lpmc::run_two_way_experiment(o.cfg);
  Output out(o.out_path);
  lpmc::CsvWriter csv(out.stream());
  csv.row("n_steps", "precision", "kahan", "variance", "stderr", "paths");
  for (const auto& r : rows)
    csv.row(r.n_steps, r.precision, r.kahan, r.variance, r.stderr_variance,
            r.paths);
  return 0;
}

int run_four_way(CliOptions& o) {
  apply_common(o);
  auto result = lpmc::run_four_way_experiment(o.cfg);
  Output out(o.out_path);
  lpmc::CsvWriter csv(out.stream());
  csv.row("level", "series", "variance", "stderr", "paths");
  for (const auto& r : result.rows)
    csv.row(r.level, r.series, r.variance, r.stderr_variance, r.paths);
  if (!o.stats_out_path.empty()) {
    Output stats_out(o.stats_out_path);
    write_stats_csv(stats_out.stream(), result.high_stats, result.low_stats,
                    result.low_kahan_stats);
  }
  return 0;
}

int run_speedup(CliOptions& o) {
  apply_common(o);
  std::vector<lpmc::SpeedupRow> rows;
  if (!o.stats_path.empty()) {
    auto by_variant = load_stats_csv(o.stats_path);
    if (by_variant.empty())
      throw std::invalid_argument("stats file has no rows: " + o.stats_path);
    rows = lpmc::run_speedup_report(by_variant["single"], by_variant["half"],
                                    by_variant["half_kahan"]);
  } else {
    auto result = lpmc::run_four_way_experiment(o.cfg);
    rows = lpmc::run_speedup_report(result.high_stats, result.low_stats,
                                    result.low_kahan_stats);
  }
  Output out(o.out_path);
  lpmc::CsvWriter csv(out.stream());
  csv.row("level", "variant", "speedup", "cost_ratio_only");
  for (const auto& r : rows)
    csv.row(r.level, r.variant, r.speedup, r.cost_ratio_only);
  return 0;
}

int run_step_errors(CliOptions& o) {
  apply_common(o);
  auto rows = lpmc::run_step_error_report(o.cfg, o.samples);
  Output out(o.out_path);
  lpmc::CsvWriter csv(out.stream());
  csv.row("level", "mean_eta", "mean_abs_eta", "mean_eta_prime",
          "mean_abs_eta_prime", "samples");
  for (const auto& r : rows)
    csv.row(r.level, r.stats.mean_eta, r.stats.mean_abs_eta,
            r.stats.mean_eta_prime, r.stats.mean_abs_eta_prime,
            r.stats.samples);
  return 0;
}

int run_estimate(CliOptions& o) {
  apply_common(o);
  const auto approx = o.cfg.build_approx();
  const lpmc::InvCdfApprox* approx_ptr = approx ? &*approx : nullptr;
  auto result = lpmc::run_nested_estimator(
      o.cfg.model(), o.cfg.level_max,
      lpmc::PrecisionSpec::parse(o.cfg.precisions[0]), approx_ptr, o.cfg.kahan,
      o.eps, o.cfg.seed, o.cfg.cost, o.cfg.threads);
  Output out(o.out_path);
  lpmc::CsvWriter csv(out.stream());
  csv.row("quantity", "level", "value");
  csv.row("estimate", -1, result.value);
  csv.row("eps", -1, result.eps);
  csv.row("t_hat", -1, result.times.t_hat);
  csv.row("t_bar", -1, result.times.t_bar);
  for (std::size_t l = 0; l < result.level_contributions.size(); ++l) {
    csv.row("contribution", static_cast<int>(l), result.level_contributions[l]);
    csv.row("m_bar", static_cast<int>(l),
            static_cast<double>(result.allocation.primary[l]));
    csv.row("M_bar", static_cast<int>(l),
            static_cast<double>(result.allocation.secondary[l]));
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Low-precision Euler-Maruyama and nested multilevel Monte Carlo"};
  app.require_subcommand(1);

  CliOptions density_o, two_o, four_o, speed_o, step_o, est_o;

  auto* density = app.add_subcommand("density", "inverse-CDF curve + histogram");
  add_common_options(density, density_o);

  auto* two = app.add_subcommand("two-way", "variance of exact vs low-precision");
  add_common_options(two, two_o);

  auto* four = app.add_subcommand("four-way", "two/four-way level variances");
  add_common_options(four, four_o);
  four->add_option("--stats-out", four_o.stats_out_path,
                   "also write a per-level stats CSV");

  auto* speed = app.add_subcommand("speedup", "per-level speedup report");
  add_common_options(speed, speed_o);
  speed->add_option("--stats", speed_o.stats_path,
                    "stats CSV from four-way --stats-out (default: run live)");

  auto* step = app.add_subcommand("step-errors", "per-step rounding residuals");
  add_common_options(step, step_o);
  step->add_option("--samples", step_o.samples, "step samples per level");

  auto* est = app.add_subcommand("estimate", "nested estimator end-to-end");
  add_common_options(est, est_o);
  est->add_option("--eps", est_o.eps, "target RMS error");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (density->parsed()) return run_density(density_o);
    if (two->parsed()) return run_two_way(two_o);
    if (four->parsed()) return run_four_way(four_o);
    if (speed->parsed()) return run_speedup(speed_o);
    if (step->parsed()) return run_step_errors(step_o);
    if (est->parsed()) return run_estimate(est_o);
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return 3;
  }
  return 2;
}
