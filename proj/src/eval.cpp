#include "spiband/eval.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>

#include "spiband/rng.hpp"

namespace spiband {

namespace {

// Per-trial substream roles hanging off derive_stream_seed(seed, trial).
constexpr std::uint64_t kEstStream = 1;
constexpr std::uint64_t kTestStream = 2;
constexpr std::uint64_t kEstimatorStream = 3;

void parallel_for(std::size_t count, unsigned threads,
                  const std::function<void(std::size_t)>& body) {
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, count));
  if (threads <= 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= count) return;
      try {
        body(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
        next.store(count);  // drain remaining work
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (unsigned w = 0; w < threads; ++w) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

void require_trials(std::size_t trials) {
  if (trials < 1) throw Error(ErrorKind::InvalidConfig, "trials must be >= 1");
}

void require_methods(const std::vector<Method>& methods) {
  if (methods.empty()) throw Error(ErrorKind::InvalidConfig, "at least one method is required");
}

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double sample_stddev(const std::vector<double>& v, double mean) {
  if (v.size() < 2) return 0.0;
  double s = 0.0;
  for (double x : v) s += (x - mean) * (x - mean);
  return std::sqrt(s / static_cast<double>(v.size() - 1));
}

}  // namespace

const char* to_string(Method method) {
  switch (method) {
    case Method::olshen: return "olshen";
    case Method::olshen2: return "olshen2";
    case Method::gspie: return "gspie";
    case Method::bonferroni: return "bonferroni";
  }
  return "unknown";
}

Method parse_method(std::string_view name) {
  if (name == "olshen") return Method::olshen;
  if (name == "olshen2") return Method::olshen2;
  if (name == "gspie") return Method::gspie;
  if (name == "bonferroni") return Method::bonferroni;
  throw Error(ErrorKind::ParseError, "unknown method '" + std::string(name) +
                                         "' (expected olshen, olshen2, gspie, or bonferroni)");
}

double observed_coverage(const Band& band, const SampleMatrix& test) {
  if (!(band.grid() == test.grid())) {
    throw Error(ErrorKind::DimensionMismatch, "band and test set use different grids");
  }
  if (test.row_count() == 0) {
    throw Error(ErrorKind::EmptyMatrix, "observed_coverage needs at least one test row");
  }
  std::size_t covered = 0;
  for (std::size_t i = 0; i < test.row_count(); ++i) {
    if (contains(band, test.row(i))) ++covered;
  }
  return static_cast<double>(covered) / static_cast<double>(test.row_count());
}

double average_width(const Band& band) {
  double s = 0.0;
  for (std::size_t t = 0; t < band.size(); ++t) s += band.upper(t) - band.lower(t);
  return s / static_cast<double>(band.size());
}

double percent_change(double width, double baseline_width) {
  if (baseline_width > 0.0) return 100.0 * (width - baseline_width) / baseline_width;
  if (width == 0.0 && baseline_width == 0.0) return 0.0;
  throw Error(ErrorKind::ZeroBaseline, "baseline width must be positive");
}

SampleMatrix generate_curves(const GeneratorConfig& cfg, std::size_t count) {
  return std::visit(
      [count](const auto& c) {
        if constexpr (std::is_same_v<std::decay_t<decltype(c)>, WeibullFamilyConfig>) {
          return gen_weibull_curves(c, count);
        } else {
          return gen_latent_gaussian_curves(c, count);
        }
      },
      cfg);
}

GeneratorConfig reseeded(GeneratorConfig cfg, std::uint64_t seed) {
  std::visit([seed](auto& c) { c.seed = seed; }, cfg);
  return cfg;
}

const TimeGrid& generator_grid(const GeneratorConfig& cfg) {
  return std::visit([](const auto& c) -> const TimeGrid& { return c.grid; }, cfg);
}

Band estimate_band(Method method, const SampleMatrix& samples, Alpha alpha, std::uint64_t seed,
                   const EstimatorSettings& settings) {
  const double a[] = {alpha.value};
  return estimate_bands(method, samples, a, seed, settings).front();
}

std::vector<Band> estimate_bands(Method method, const SampleMatrix& samples,
                                 std::span<const double> alphas, std::uint64_t seed,
                                 const EstimatorSettings& settings) {
  if (alphas.empty()) throw Error(ErrorKind::InvalidConfig, "at least one alpha is required");
  std::vector<Band> bands;
  switch (method) {
    case Method::olshen: {
      OlshenConfig cfg{Alpha(alphas.front()), settings.bootstrap_reps, seed, settings.resample,
                       StddevDenominator::population};
      bands = olshen_bands(samples, cfg, alphas);
      break;
    }
    case Method::olshen2: {
      OlshenConfig cfg{Alpha(alphas.front()), settings.bootstrap_reps, seed, settings.resample,
                       StddevDenominator::population};
      bands = two_sided_olshen_bands(samples, cfg, alphas);
      break;
    }
    case Method::gspie: {
      GspieConfig cfg{Alpha(alphas.front()), settings.split_fraction, seed};
      bands = gspie_bands(samples, cfg, alphas);
      break;
    }
    case Method::bonferroni: {
      bands.reserve(alphas.size());
      for (double a : alphas) bands.push_back(bonferroni_band(samples, Alpha(a)));
      break;
    }
  }
  if (settings.project) {
    for (Band& b : bands) b = project_band(b);
  }
  return bands;
}

std::vector<AggregateRow> aggregate_rows(const std::vector<TrialRow>& rows) {
  struct Group {
    AggregateRow key;
    std::vector<double> coverage, width, pc;
    bool pc_complete = true;
  };
  std::vector<Group> groups;
  for (const TrialRow& row : rows) {
    Group* g = nullptr;
    for (Group& cand : groups) {
      if (cand.key.method == row.method && cand.key.alpha == row.alpha &&
          cand.key.grid_size == row.grid_size) {
        g = &cand;
        break;
      }
    }
    if (!g) {
      groups.emplace_back();
      g = &groups.back();
      g->key.method = row.method;
      g->key.alpha = row.alpha;
      g->key.grid_size = row.grid_size;
    }
    g->coverage.push_back(row.observed_coverage);
    g->width.push_back(row.average_width);
    if (row.percent_change) {
      g->pc.push_back(*row.percent_change);
    } else {
      g->pc_complete = false;
    }
  }

  std::vector<AggregateRow> out;
  out.reserve(groups.size());
  for (Group& g : groups) {
    AggregateRow agg = g.key;
    agg.trials = g.coverage.size();
    agg.mean_coverage = mean_of(g.coverage);
    agg.stddev_coverage = sample_stddev(g.coverage, agg.mean_coverage);
    agg.mean_width = mean_of(g.width);
    agg.stddev_width = sample_stddev(g.width, agg.mean_width);
    agg.width_ci_halfwidth =
        1.96 * agg.stddev_width / std::sqrt(static_cast<double>(agg.trials));
    if (g.pc_complete && !g.pc.empty()) {
      agg.mean_percent_change = mean_of(g.pc);
      agg.stddev_percent_change = sample_stddev(g.pc, *agg.mean_percent_change);
    }
    out.push_back(std::move(agg));
  }
  return out;
}

ExperimentReport calibration_experiment(const CalibrationParams& params) {
  require_trials(params.trials);
  require_methods(params.methods);
  if (params.alphas.empty()) throw Error(ErrorKind::InvalidConfig, "at least one alpha required");
  for (double a : params.alphas) Alpha{a};
  const std::size_t n = generator_grid(params.truth).size();
  const std::size_t per_trial = params.methods.size() * params.alphas.size();

  std::vector<TrialRow> rows(params.trials * per_trial);
  parallel_for(params.trials, params.threads, [&](std::size_t trial) {
    const std::uint64_t trial_seed = rng::derive_stream_seed(params.seed, trial);
    const SampleMatrix est = generate_curves(
        reseeded(params.truth, rng::derive_stream_seed(trial_seed, kEstStream)),
        params.est_samples);
    const SampleMatrix test = generate_curves(
        reseeded(params.truth, rng::derive_stream_seed(trial_seed, kTestStream)),
        params.test_samples);
    const std::uint64_t estimator_seed = rng::derive_stream_seed(trial_seed, kEstimatorStream);
    for (std::size_t mi = 0; mi < params.methods.size(); ++mi) {
      const std::vector<Band> bands = estimate_bands(params.methods[mi], est, params.alphas,
                                                     estimator_seed, params.settings);
      for (std::size_t ai = 0; ai < params.alphas.size(); ++ai) {
        TrialRow& row = rows[trial * per_trial + mi * params.alphas.size() + ai];
        row.trial = trial + 1;
        row.method = params.methods[mi];
        row.alpha = params.alphas[ai];
        row.grid_size = n;
        row.observed_coverage = observed_coverage(bands[ai], test);
        row.average_width = average_width(bands[ai]);
      }
    }
  });
  return ExperimentReport{rows, aggregate_rows(rows)};
}

ExperimentReport tightness_experiment(const TightnessParams& params) {
  require_trials(params.trials);
  require_methods(params.methods);
  Alpha alpha{params.alpha};
  const std::size_t n = generator_grid(params.truth).size();
  const std::size_t per_trial = params.methods.size();

  std::vector<TrialRow> rows(params.trials * per_trial);
  parallel_for(params.trials, params.threads, [&](std::size_t trial) {
    const std::uint64_t trial_seed = rng::derive_stream_seed(params.seed, trial);
    const SampleMatrix est = generate_curves(
        reseeded(params.truth, rng::derive_stream_seed(trial_seed, kEstStream)),
        params.est_samples);
    const std::uint64_t estimator_seed = rng::derive_stream_seed(trial_seed, kEstimatorStream);
    const Band baseline =
        estimate_band(Method::bonferroni, est, alpha, estimator_seed, params.settings);
    const double baseline_width = average_width(baseline);
    for (std::size_t mi = 0; mi < params.methods.size(); ++mi) {
      const Band band =
          estimate_band(params.methods[mi], est, alpha, estimator_seed, params.settings);
      TrialRow& row = rows[trial * per_trial + mi];
      row.trial = trial + 1;
      row.method = params.methods[mi];
      row.alpha = params.alpha;
      row.grid_size = n;
      row.observed_coverage = observed_coverage(band, est);
      row.average_width = average_width(band);
      row.percent_change = percent_change(row.average_width, baseline_width);
    }
  });
  return ExperimentReport{rows, aggregate_rows(rows)};
}

ExperimentReport discretization_sweep(const SweepParams& params) {
  require_trials(params.trials);
  require_methods(params.methods);
  Alpha alpha{params.alpha};
  if (params.grid_sizes.empty()) {
    throw Error(ErrorKind::InvalidConfig, "at least one grid size is required");
  }
  for (std::size_t n : params.grid_sizes) {
    if (n < 2) throw Error(ErrorKind::InvalidConfig, "grid sizes must be >= 2");
  }
  if (!(params.horizon > 0.0)) {
    throw Error(ErrorKind::InvalidConfig, "horizon must be > 0");
  }

  const std::size_t per_trial = params.methods.size();
  const std::size_t units = params.grid_sizes.size() * params.trials;
  std::vector<TrialRow> rows(units * per_trial);
  parallel_for(units, params.threads, [&](std::size_t unit) {
    const std::size_t gi = unit / params.trials;
    const std::size_t trial = unit % params.trials;
    const std::size_t n = params.grid_sizes[gi];

    std::vector<double> times(n);
    for (std::size_t i = 0; i < n; ++i) {
      times[i] = params.horizon * static_cast<double>(i + 1) / static_cast<double>(n);
    }
    const std::uint64_t grid_seed = rng::derive_stream_seed(params.seed, gi);
    const std::uint64_t trial_seed = rng::derive_stream_seed(grid_seed, trial);
    WeibullFamilyConfig cfg{TimeGrid(std::move(times)),
                            params.scale_location,
                            params.scale_spread,
                            params.shape_location,
                            params.shape_spread,
                            rng::derive_stream_seed(trial_seed, kEstStream)};
    const SampleMatrix est = gen_weibull_curves(cfg, params.est_samples);
    const std::uint64_t estimator_seed = rng::derive_stream_seed(trial_seed, kEstimatorStream);
    for (std::size_t mi = 0; mi < params.methods.size(); ++mi) {
      const Band band =
          estimate_band(params.methods[mi], est, alpha, estimator_seed, params.settings);
      TrialRow& row = rows[unit * per_trial + mi];
      row.trial = trial + 1;
      row.method = params.methods[mi];
      row.alpha = params.alpha;
      row.grid_size = n;
      row.observed_coverage = observed_coverage(band, est);
      row.average_width = average_width(band);
    }
  });
  return ExperimentReport{rows, aggregate_rows(rows)};
}

}  // namespace spiband
