#include <CLI11.hpp>

#include <cmath>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "spiband/estimators.hpp"
#include "spiband/eval.hpp"
#include "spiband/io.hpp"
#include "spiband/rng.hpp"
#include "spiband/synth.hpp"

namespace {

using spiband::Alpha;
using spiband::Band;
using spiband::Method;
using spiband::SampleMatrix;

const std::vector<std::string> kMethodNames = {"olshen", "olshen2", "gspie", "bonferroni"};

const CLI::Validator OpenUnitInterval(
    [](std::string& s) {
      double v = 0.0;
      try {
        v = std::stod(s);
      } catch (...) {
        return std::string("'" + s + "' is not a number");
      }
      if (!(v > 0.0 && v < 1.0)) {
        return std::string("'" + s + "' must lie strictly between 0 and 1");
      }
      return std::string();
    },
    "FLOAT in (0,1)");

const CLI::Validator GridSizeAtLeast2(
    [](std::string& s) {
      long long v = 0;
      try {
        v = std::stoll(s);
      } catch (...) {
        return std::string("'" + s + "' is not an integer");
      }
      if (v < 2) return std::string("grid sizes must be >= 2");
      return std::string();
    },
    "INT >= 2");

// Family flags shared by synth, calibrate, and tightness. The default latent
// truth uses a Weibull-shaped base curve on an integer grid 1..n.
struct GeneratorFlags {
  std::string family = "latent";
  std::size_t grid_size = 32;
  double horizon = 0.0;  // 0 = grid_size
  double base_scale = 22.0;
  double base_shape = 1.4;
  double correlation_decay = 0.005;
  double noise_scale = 0.8;
  double scale_location = 2.5;
  double scale_spread = 0.4;
  double shape_location = 0.15;
  double shape_spread = 0.2;
};

void add_generator_flags(CLI::App* cmd, GeneratorFlags& f) {
  cmd->add_option("--family", f.family, "Synthetic family: latent or weibull")
      ->check(CLI::IsMember({"latent", "weibull"}));
  cmd->add_option("--grid-size", f.grid_size, "Number of time points")->check(GridSizeAtLeast2);
  cmd->add_option("--horizon", f.horizon, "Last grid time (default: grid size)")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--base-scale", f.base_scale, "Latent family: base curve Weibull scale")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--base-shape", f.base_shape, "Latent family: base curve Weibull shape")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--correlation-decay", f.correlation_decay,
                  "Latent family: AR(1) decay rate per unit time")
      ->check(CLI::NonNegativeNumber);
  cmd->add_option("--noise-scale", f.noise_scale, "Latent family: logit-space noise scale")
      ->check(CLI::NonNegativeNumber);
  cmd->add_option("--scale-location", f.scale_location, "Weibull family: log-scale location");
  cmd->add_option("--scale-spread", f.scale_spread, "Weibull family: log-scale spread")
      ->check(CLI::NonNegativeNumber);
  cmd->add_option("--shape-location", f.shape_location, "Weibull family: log-shape location");
  cmd->add_option("--shape-spread", f.shape_spread, "Weibull family: log-shape spread")
      ->check(CLI::NonNegativeNumber);
}

spiband::TimeGrid make_grid(std::size_t n, double horizon) {
  std::vector<double> times(n);
  for (std::size_t i = 0; i < n; ++i) {
    times[i] = horizon * static_cast<double>(i + 1) / static_cast<double>(n);
  }
  return spiband::TimeGrid(std::move(times));
}

spiband::GeneratorConfig build_generator(const GeneratorFlags& f, std::uint64_t seed) {
  const double horizon = f.horizon > 0.0 ? f.horizon : static_cast<double>(f.grid_size);
  spiband::TimeGrid grid = make_grid(f.grid_size, horizon);
  if (f.family == "weibull") {
    return spiband::WeibullFamilyConfig{std::move(grid), f.scale_location, f.scale_spread,
                                        f.shape_location, f.shape_spread, seed};
  }
  std::vector<double> base(f.grid_size);
  for (std::size_t i = 0; i < f.grid_size; ++i) {
    base[i] = std::exp(-std::pow(grid[i] / f.base_scale, f.base_shape));
  }
  return spiband::LatentGaussianConfig{std::move(grid), std::move(base), f.correlation_decay,
                                       f.noise_scale, seed};
}

std::vector<Method> parse_methods(const std::vector<std::string>& names) {
  std::vector<Method> methods;
  methods.reserve(names.size());
  for (const std::string& name : names) methods.push_back(spiband::parse_method(name));
  return methods;
}

struct EstimateArgs {
  std::string input, output, method = "olshen", plot, dump_partitions;
  double alpha = 0.05;
  std::uint64_t seed = 0;
  int bootstrap_reps = 1000;
  double split = 0.5;
  bool no_resample = false;
  bool no_projection = false;
};

int run_estimate(const EstimateArgs& args) {
  const SampleMatrix samples = spiband::read_sample_csv(args.input, /*survival=*/true);
  const Method method = spiband::parse_method(args.method);
  const spiband::EstimatorSettings settings{args.bootstrap_reps, args.split, !args.no_resample,
                                            !args.no_projection};
  const Band band = spiband::estimate_band(method, samples, Alpha(args.alpha), args.seed, settings);

  spiband::BandMetadata meta;
  meta.method = args.method;
  meta.alpha = args.alpha;
  meta.seed = args.seed;
  meta.config = nlohmann::json{{"bootstrap_reps", args.bootstrap_reps},
                               {"split_fraction", args.split},
                               {"resample", !args.no_resample},
                               {"projected", !args.no_projection}};
  nlohmann::json metrics;
  metrics["observed_coverage_insample"] = spiband::observed_coverage(band, samples);
  metrics["average_width"] = spiband::average_width(band);
  meta.metrics = std::move(metrics);
  spiband::write_band_json(band, meta, args.output);

  if (!args.plot.empty()) {
    const spiband::ColumnStats stats = spiband::column_stats(samples);
    spiband::render_band_svg(band, stats.mu, args.plot);
  }
  if (!args.dump_partitions.empty()) {
    const spiband::GspieConfig cfg{Alpha(args.alpha), args.split, args.seed};
    const spiband::GspiePartitions parts = spiband::gspie_partitions(samples, cfg);
    spiband::write_sample_csv(parts.optimization, args.dump_partitions + ".opt.csv");
    spiband::write_sample_csv(parts.validation, args.dump_partitions + ".val.csv");
  }
  return 0;
}

struct EvaluateArgs {
  std::string band_json, input, baseline_input, output;
};

int run_evaluate(const EvaluateArgs& args) {
  const spiband::LoadedBand loaded = spiband::read_band_json(args.band_json);
  const SampleMatrix test = spiband::read_sample_csv(args.input, /*survival=*/true);

  spiband::CoverageReport report;
  report.observed_coverage = spiband::observed_coverage(loaded.band, test);
  report.n_test_samples = test.row_count();
  report.average_width = spiband::average_width(loaded.band);
  if (!args.baseline_input.empty()) {
    const SampleMatrix est = spiband::read_sample_csv(args.baseline_input, /*survival=*/true);
    Band baseline = spiband::bonferroni_band(est, Alpha(loaded.metadata.alpha));
    if (loaded.metadata.config.value("projected", true)) {
      baseline = spiband::project_band(baseline);
    }
    report.percent_change_vs_baseline =
        spiband::percent_change(report.average_width, spiband::average_width(baseline));
  }

  const std::string text = spiband::coverage_report_json(report).dump(2) + "\n";
  if (args.output.empty()) {
    std::cout << text;
  } else {
    std::ofstream out(args.output, std::ios::binary);
    if (!out) throw spiband::Error(spiband::ErrorKind::IoError,
                                   "cannot open '" + args.output + "' for writing");
    out << text;
  }
  return 0;
}

void emit_report(const spiband::ExperimentReport& report, const std::string& csv_path) {
  spiband::write_report_csv(report, csv_path);
  std::cout << spiband::aggregate_json(report).dump(2) << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Simultaneous prediction intervals for sampled survival curves"};
  app.require_subcommand(1);

  // estimate
  EstimateArgs est;
  CLI::App* cmd_est = app.add_subcommand("estimate", "Estimate a band from a sample CSV");
  cmd_est->add_option("--input", est.input, "Sample CSV (header = grid times)")->required();
  cmd_est->add_option("--output", est.output, "Band JSON output path")->required();
  cmd_est->add_option("--method", est.method, "Estimator")->check(CLI::IsMember(kMethodNames));
  cmd_est->add_option("--alpha", est.alpha, "Miscoverage level")->check(OpenUnitInterval);
  cmd_est->add_option("--seed", est.seed, "RNG seed")->envname("SPIBAND_SEED");
  cmd_est->add_option("--bootstrap-reps", est.bootstrap_reps, "Bootstrap sets (olshen/olshen2)")
      ->check(CLI::PositiveNumber);
  cmd_est->add_option("--split", est.split, "GSPIE optimization fraction")
      ->check(OpenUnitInterval);
  cmd_est->add_flag("--no-resample", est.no_resample,
                    "Calibrate on the original set only (test mode)");
  cmd_est->add_flag("--no-monotone-projection", est.no_projection,
                    "Skip the survival-space projection of the band");
  cmd_est->add_option("--plot", est.plot, "Also render the band to this SVG path");
  cmd_est->add_option("--dump-partitions", est.dump_partitions,
                      "Write GSPIE partitions to PREFIX.opt.csv / PREFIX.val.csv");

  // evaluate
  EvaluateArgs ev;
  CLI::App* cmd_ev = app.add_subcommand("evaluate", "Evaluate a stored band against a test CSV");
  cmd_ev->add_option("band", ev.band_json, "Band JSON produced by estimate")->required();
  cmd_ev->add_option("--input", ev.input, "Test sample CSV")->required();
  cmd_ev->add_option("--baseline-input", ev.baseline_input,
                     "Estimation CSV for a Bonferroni width baseline");
  cmd_ev->add_option("--output", ev.output, "Coverage report JSON path (default: stdout)");

  // synth
  struct {
    std::string output;
    std::size_t count = 100;
    std::uint64_t seed = 0;
    GeneratorFlags gen;
  } sy;
  CLI::App* cmd_sy = app.add_subcommand("synth", "Generate synthetic curves to a sample CSV");
  cmd_sy->add_option("--output", sy.output, "Sample CSV output path")->required();
  cmd_sy->add_option("--count", sy.count, "Number of curves")->check(CLI::PositiveNumber);
  cmd_sy->add_option("--seed", sy.seed, "RNG seed")->envname("SPIBAND_SEED");
  add_generator_flags(cmd_sy, sy.gen);

  // calibrate
  struct {
    std::string output;
    std::vector<std::string> methods = {"olshen", "olshen2", "gspie", "bonferroni"};
    std::vector<double> alphas = {0.05};
    std::size_t trials = 50;
    std::size_t est_samples = 1000;
    std::size_t test_samples = 10000;
    std::uint64_t seed = 0;
    unsigned threads = 0;
    int bootstrap_reps = 1000;
    double split = 0.5;
    GeneratorFlags gen;
  } cal;
  CLI::App* cmd_cal = app.add_subcommand("calibrate", "Coverage calibration experiment");
  cmd_cal->add_option("--output", cal.output, "Report CSV path")->required();
  cmd_cal->add_option("--methods", cal.methods, "Comma-separated methods")
      ->delimiter(',')
      ->check(CLI::IsMember(kMethodNames));
  cmd_cal->add_option("--alphas", cal.alphas, "Comma-separated miscoverage levels")
      ->delimiter(',')
      ->check(OpenUnitInterval);
  cmd_cal->add_option("--trials", cal.trials, "Independent trials")->check(CLI::PositiveNumber);
  cmd_cal->add_option("--est-samples", cal.est_samples, "Estimation curves per trial")
      ->check(CLI::PositiveNumber);
  cmd_cal->add_option("--test-samples", cal.test_samples, "Fresh test curves per trial")
      ->check(CLI::PositiveNumber);
  cmd_cal->add_option("--seed", cal.seed, "RNG seed")->envname("SPIBAND_SEED");
  cmd_cal->add_option("--threads", cal.threads, "Worker threads (0 = all cores)");
  cmd_cal->add_option("--bootstrap-reps", cal.bootstrap_reps, "Bootstrap sets")
      ->check(CLI::PositiveNumber);
  cmd_cal->add_option("--split", cal.split, "GSPIE optimization fraction")
      ->check(OpenUnitInterval);
  add_generator_flags(cmd_cal, cal.gen);

  // tightness
  struct {
    std::string output;
    std::vector<std::string> methods = {"olshen", "olshen2", "gspie"};
    double alpha = 0.05;
    std::size_t trials = 50;
    std::size_t est_samples = 1000;
    std::uint64_t seed = 0;
    unsigned threads = 0;
    int bootstrap_reps = 1000;
    double split = 0.5;
    GeneratorFlags gen;
  } ti;
  CLI::App* cmd_ti = app.add_subcommand("tightness", "Width-vs-Bonferroni experiment");
  cmd_ti->add_option("--output", ti.output, "Report CSV path")->required();
  cmd_ti->add_option("--methods", ti.methods, "Comma-separated methods")
      ->delimiter(',')
      ->check(CLI::IsMember(kMethodNames));
  cmd_ti->add_option("--alpha", ti.alpha, "Miscoverage level")->check(OpenUnitInterval);
  cmd_ti->add_option("--trials", ti.trials, "Independent trials")->check(CLI::PositiveNumber);
  cmd_ti->add_option("--est-samples", ti.est_samples, "Estimation curves per trial")
      ->check(CLI::PositiveNumber);
  cmd_ti->add_option("--seed", ti.seed, "RNG seed")->envname("SPIBAND_SEED");
  cmd_ti->add_option("--threads", ti.threads, "Worker threads (0 = all cores)");
  cmd_ti->add_option("--bootstrap-reps", ti.bootstrap_reps, "Bootstrap sets")
      ->check(CLI::PositiveNumber);
  cmd_ti->add_option("--split", ti.split, "GSPIE optimization fraction")->check(OpenUnitInterval);
  add_generator_flags(cmd_ti, ti.gen);

  // sweep-discretization
  struct {
    std::string output;
    std::vector<std::string> methods = {"olshen", "olshen2", "gspie"};
    double alpha = 0.05;
    std::vector<std::size_t> grid_sizes = {8, 16, 32, 64, 128, 256, 512};
    std::size_t trials = 20;
    std::size_t est_samples = 300;
    std::uint64_t seed = 0;
    unsigned threads = 0;
    int bootstrap_reps = 300;
    double split = 0.5;
    double horizon = 30.0;
    double scale_location = 2.5;
    double scale_spread = 0.4;
    double shape_location = 0.15;
    double shape_spread = 0.2;
  } sw;
  CLI::App* cmd_sw =
      app.add_subcommand("sweep-discretization", "Width as a function of grid resolution");
  cmd_sw->add_option("--output", sw.output, "Report CSV path")->required();
  cmd_sw->add_option("--methods", sw.methods, "Comma-separated methods")
      ->delimiter(',')
      ->check(CLI::IsMember(kMethodNames));
  cmd_sw->add_option("--alpha", sw.alpha, "Miscoverage level")->check(OpenUnitInterval);
  cmd_sw->add_option("--grid-sizes", sw.grid_sizes, "Comma-separated grid sizes")
      ->delimiter(',')
      ->check(GridSizeAtLeast2);
  cmd_sw->add_option("--trials", sw.trials, "Trials per grid size")->check(CLI::PositiveNumber);
  cmd_sw->add_option("--est-samples", sw.est_samples, "Estimation curves per trial")
      ->check(CLI::PositiveNumber);
  cmd_sw->add_option("--seed", sw.seed, "RNG seed")->envname("SPIBAND_SEED");
  cmd_sw->add_option("--threads", sw.threads, "Worker threads (0 = all cores)");
  cmd_sw->add_option("--bootstrap-reps", sw.bootstrap_reps, "Bootstrap sets")
      ->check(CLI::PositiveNumber);
  cmd_sw->add_option("--split", sw.split, "GSPIE optimization fraction")->check(OpenUnitInterval);
  cmd_sw->add_option("--horizon", sw.horizon, "Last grid time")->check(CLI::PositiveNumber);
  cmd_sw->add_option("--scale-location", sw.scale_location, "Weibull log-scale location");
  cmd_sw->add_option("--scale-spread", sw.scale_spread, "Weibull log-scale spread")
      ->check(CLI::NonNegativeNumber);
  cmd_sw->add_option("--shape-location", sw.shape_location, "Weibull log-shape location");
  cmd_sw->add_option("--shape-spread", sw.shape_spread, "Weibull log-shape spread")
      ->check(CLI::NonNegativeNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    app.exit(e);
    return 2;
  }

  if (cmd_est->parsed() && !est.dump_partitions.empty() && est.method != "gspie") {
    std::cerr << "--dump-partitions requires --method gspie\n";
    return 2;
  }

  try {
    if (cmd_est->parsed()) return run_estimate(est);
    if (cmd_ev->parsed()) return run_evaluate(ev);
    if (cmd_sy->parsed()) {
      const SampleMatrix samples =
          spiband::generate_curves(build_generator(sy.gen, sy.seed), sy.count);
      spiband::write_sample_csv(samples, sy.output);
      return 0;
    }
    if (cmd_cal->parsed()) {
      const spiband::CalibrationParams params{
          .truth = build_generator(cal.gen, 0),
          .methods = parse_methods(cal.methods),
          .alphas = cal.alphas,
          .trials = cal.trials,
          .est_samples = cal.est_samples,
          .test_samples = cal.test_samples,
          .seed = cal.seed,
          .settings = {cal.bootstrap_reps, cal.split, true, true},
          .threads = cal.threads};
      emit_report(spiband::calibration_experiment(params), cal.output);
      return 0;
    }
    if (cmd_ti->parsed()) {
      const spiband::TightnessParams params{
          .truth = build_generator(ti.gen, 0),
          .methods = parse_methods(ti.methods),
          .alpha = ti.alpha,
          .trials = ti.trials,
          .est_samples = ti.est_samples,
          .seed = ti.seed,
          .settings = {ti.bootstrap_reps, ti.split, true, true},
          .threads = ti.threads};
      emit_report(spiband::tightness_experiment(params), ti.output);
      return 0;
    }
    if (cmd_sw->parsed()) {
      const spiband::SweepParams params{
          .scale_location = sw.scale_location,
          .scale_spread = sw.scale_spread,
          .shape_location = sw.shape_location,
          .shape_spread = sw.shape_spread,
          .horizon = sw.horizon,
          .methods = parse_methods(sw.methods),
          .alpha = sw.alpha,
          .grid_sizes = sw.grid_sizes,
          .trials = sw.trials,
          .est_samples = sw.est_samples,
          .seed = sw.seed,
          .settings = {sw.bootstrap_reps, sw.split, true, true},
          .threads = sw.threads};
      emit_report(spiband::discretization_sweep(params), sw.output);
      return 0;
    }
  } catch (const spiband::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
