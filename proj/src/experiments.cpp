#include "pacfs/experiments.hpp"

#include "pacfs/error.hpp"
#include "pacfs/moments.hpp"
#include "pacfs/rng.hpp"

#include <algorithm>
#include <atomic>
#include <bit>
#include <chrono>
#include <cmath>
#include <exception>
#include <limits>
#include <numbers>
#include <numeric>
#include <thread>

namespace pacfs {

namespace {

using Clock = std::chrono::steady_clock;

// Runs task(i) for i in [0, count) on `threads` workers. Tasks that have not
// started when the budget runs out are skipped; returns which ones ran.
template <class Task>
std::vector<char> run_tasks(std::size_t count, unsigned threads, std::optional<double> budget_seconds,
                            Clock::time_point start, Task&& task) {
  std::vector<char> done(count, 0);
  std::vector<std::exception_ptr> errors(count);
  std::atomic<std::size_t> next{0};
  std::atomic<bool> expired{false};
  auto worker = [&] {
    for (;;) {
      if (budget_seconds) {
        const double elapsed = std::chrono::duration<double>(Clock::now() - start).count();
        if (elapsed > *budget_seconds) expired = true;
      }
      if (expired) return;
      const std::size_t i = next++;
      if (i >= count) return;
      try {
        task(i);
        done[i] = 1;
      } catch (...) {
        errors[i] = std::current_exception();
        expired = true;
      }
    }
  };
  threads = std::max(1u, threads);
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return done;
}

std::uint64_t replicate_seed(std::uint64_t seed, std::size_t N, std::size_t replicate) {
  return derive_seed(derive_seed(seed, N), replicate);
}

void require_truth(const SyntheticModel& model) {
  if (model.truth.size() == 0) {
    throw ConfigError("the experiment needs a model with truth coefficients (closed-form truths have no exact risk)");
  }
}

SelectionOptions selection_options(const ExperimentOptions& options) {
  SelectionOptions s;
  s.schedule = options.schedule;
  return s;
}

// The bound event for every feature, with the excess risk of the slab
// center over the best multiple of the feature.
bool transductive_event(const SampleStats& stats, const ConfidenceRadius& radius) {
  for (std::size_t h = 0; h < stats.size(); ++h) {
    const auto& f = stats.features[h];
    if (f.degenerate) continue;
    const double gap = f.center() - *f.test_alpha();
    if (f.v * gap * gap > radius.beta[h]) return false;
  }
  return true;
}

double elapsed_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

void finish_partial(ExperimentReport& report, const std::vector<char>& done) {
  const auto missing = static_cast<std::size_t>(std::count(done.begin(), done.end(), 0));
  if (missing > 0) {
    report.partial = true;
    report.warnings.push_back("budget exhausted: " + std::to_string(missing) + " of " + std::to_string(done.size()) +
                              " replicates skipped");
  }
}

}  // namespace

std::string_view to_string(NoiseKind kind) {
  switch (kind) {
    case NoiseKind::Gaussian: return "gaussian";
    case NoiseKind::Uniform: return "uniform";
    case NoiseKind::Rademacher: return "rademacher";
  }
  return "unknown";
}

NoiseKind noise_kind_from_string(std::string_view name) {
  for (auto k : {NoiseKind::Gaussian, NoiseKind::Uniform, NoiseKind::Rademacher}) {
    if (to_string(k) == name) return k;
  }
  throw ConfigError("unknown noise kind '" + std::string(name) + "'");
}

double NoiseSpec::second_moment() const {
  switch (kind) {
    case NoiseKind::Gaussian: return scale * scale;
    case NoiseKind::Uniform: return scale * scale / 3.0;
    case NoiseKind::Rademacher: return scale * scale;
  }
  return 0.0;
}

double NoiseSpec::sup() const {
  if (kind == NoiseKind::Gaussian && scale > 0.0) return std::numeric_limits<double>::infinity();
  return std::abs(scale);
}

double NoiseSpec::sample(Rng& rng) const {
  switch (kind) {
    case NoiseKind::Gaussian: return scale * rng.normal();
    case NoiseKind::Uniform: return rng.uniform(-scale, scale);
    case NoiseKind::Rademacher: return (rng.next() >> 63) ? scale : -scale;
  }
  return 0.0;
}

std::string_view to_string(Regularity regularity) {
  switch (regularity) {
    case Regularity::None: return "none";
    case Regularity::Sobolev: return "sobolev";
    case Regularity::Besov: return "besov";
  }
  return "unknown";
}

FeatureDictionary SyntheticModel::basis_dictionary(std::size_t m) const {
  if (m == 0) throw ConfigError("basis needs at least one function");
  if (basis == DictionaryKind::Trigonometric) return FeatureDictionary::trigonometric(m);
  if (basis == DictionaryKind::Haar) {
    if ((m & (m - 1)) != 0 || m < 2) throw ConfigError("haar bases have a power-of-two size >= 2");
    return FeatureDictionary::haar(std::countr_zero(m) - 1, design);
  }
  throw ConfigError("synthetic models use a trigonometric or haar basis");
}

double SyntheticModel::f(double x) const {
  if (function) return function(x);
  const FeatureDictionary dict = basis_dictionary(static_cast<std::size_t>(truth.size()));
  Eigen::RowVectorXd row(truth.size());
  Eigen::RowVectorXd point(1);
  point(0) = x;
  dict.evaluate_point(point, row);
  return row.dot(truth);
}

double sup_norm_bound(DictionaryKind basis, const Eigen::VectorXd& coefficients) {
  const auto n = coefficients.size();
  if (n == 0) return 0.0;
  if (basis == DictionaryKind::Haar) {
    const FeatureDictionary dict = FeatureDictionary::haar(std::countr_zero(static_cast<std::size_t>(n)) - 1);
    const Eigen::Index cells = n;
    Eigen::RowVectorXd row(n);
    Eigen::RowVectorXd point(1);
    double best = 0.0;
    for (Eigen::Index c = 0; c < cells; ++c) {
      point(0) = (static_cast<double>(c) + 0.5) / static_cast<double>(cells);
      dict.evaluate_point(point, row);
      best = std::max(best, std::abs(row.dot(coefficients)));
    }
    return best;
  }
  if (basis != DictionaryKind::Trigonometric) throw ConfigError("sup bound needs a trigonometric or haar basis");
  const FeatureDictionary dict = FeatureDictionary::trigonometric(static_cast<std::size_t>(n));
  double lipschitz = 0.0;
  for (Eigen::Index k = 1; k < n; ++k) {
    lipschitz += std::abs(coefficients(k)) * std::numbers::sqrt2 * 2.0 * std::numbers::pi *
                 static_cast<double>((k + 1) / 2);
  }
  constexpr Eigen::Index grid = 8001;
  const double h = 1.0 / static_cast<double>(grid - 1);
  Eigen::RowVectorXd row(n);
  Eigen::RowVectorXd point(1);
  double best = 0.0;
  for (Eigen::Index i = 0; i < grid; ++i) {
    point(0) = static_cast<double>(i) * h;
    dict.evaluate_point(point, row);
    best = std::max(best, std::abs(row.dot(coefficients)));
  }
  return best + lipschitz * h / 2.0;
}

SyntheticModel sobolev_model(double beta, std::size_t length, NoiseSpec noise, double scale) {
  if (!(beta > 0.0)) throw ConfigError("sobolev smoothness must be positive");
  if (length == 0) throw ConfigError("sobolev truth needs at least one coefficient");
  SyntheticModel model;
  model.basis = DictionaryKind::Trigonometric;
  model.truth.resize(static_cast<Eigen::Index>(length));
  for (std::size_t k = 1; k <= length; ++k) {
    const double sign = (k % 2 == 1) ? 1.0 : -1.0;
    model.truth(static_cast<Eigen::Index>(k - 1)) =
        sign * scale * std::pow(static_cast<double>(k), -(beta + 0.5) - 0.01);
  }
  model.noise = noise;
  model.sup_bound = sup_norm_bound(model.basis, model.truth);
  model.regularity = Regularity::Sobolev;
  model.smoothness = beta;
  return model;
}

SyntheticModel besov_model(double s, double p, int levels, NoiseSpec noise, double scale) {
  if (!(s > 0.0) || !(p >= 1.0)) throw ConfigError("besov model needs s > 0 and p >= 1");
  if (levels < 1 || levels > 20) throw ConfigError("besov model needs 1..20 levels");
  SyntheticModel model;
  model.basis = DictionaryKind::Haar;
  model.truth = Eigen::VectorXd::Zero(Eigen::Index{1} << levels);
  model.truth(0) = scale;
  for (int j = 0; j < levels; ++j) {
    const auto cells = Eigen::Index{1} << j;
    // One spike per level at a position that wanders across the interval.
    const auto cell = static_cast<Eigen::Index>(std::floor(std::fmod(0.618033988749895 * (j + 1), 1.0) * cells));
    model.truth(cells + cell) = scale * std::pow(2.0, -j * (s + 0.5 - 1.0 / p));
  }
  model.noise = noise;
  model.sup_bound = sup_norm_bound(model.basis, model.truth);
  model.regularity = Regularity::Besov;
  model.smoothness = s;
  model.besov_p = p;
  return model;
}

SyntheticModel coefficient_model(DictionaryKind basis, Eigen::VectorXd truth, NoiseSpec noise) {
  SyntheticModel model;
  model.basis = basis;
  model.truth = std::move(truth);
  model.basis_dictionary(static_cast<std::size_t>(model.truth.size()));
  model.noise = noise;
  model.sup_bound = sup_norm_bound(basis, model.truth);
  return model;
}

Dataset generate(const SyntheticModel& model, std::size_t N, std::size_t k_test, std::uint64_t seed) {
  if (N == 0) throw ConfigError("generate needs N >= 1");
  if (!model.function && model.truth.size() == 0) throw ConfigError("model has no truth");
  const std::size_t total = (k_test + 1) * N;
  Rng rng(seed);
  Points x(static_cast<Eigen::Index>(total), 1);
  Eigen::VectorXd y(static_cast<Eigen::Index>(total));

  std::optional<FeatureDictionary> dict;
  if (!model.function) dict = model.basis_dictionary(static_cast<std::size_t>(model.truth.size()));
  Eigen::RowVectorXd row(model.truth.size());
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    x(i, 0) = rng.uniform(model.design.lower, model.design.upper);
    double fx = 0.0;
    if (model.function) {
      fx = model.function(x(i, 0));
    } else {
      dict->evaluate_point(x.row(i), row);
      fx = row.dot(model.truth);
    }
    y(i) = fx + model.noise.sample(rng);
  }

  const auto n = static_cast<Eigen::Index>(N);
  Dataset data;
  data.train_x = x.topRows(n);
  data.train_y = y.head(n);
  data.test_x = x.bottomRows(x.rows() - n);
  if (k_test > 0) data.hidden_test_y = y.tail(y.size() - n);
  return data;
}

double exact_excess_risk(const SyntheticModel& model, const Eigen::VectorXd& coefficients, DictionaryKind basis) {
  require_truth(model);
  if (basis != model.basis) {
    throw ConfigError("exact risk needs coefficients in the model's basis (" + std::string(to_string(model.basis)) +
                      "), got " + std::string(to_string(basis)));
  }
  const Eigen::Index n = std::max(coefficients.size(), model.truth.size());
  double risk = model.tail_energy;
  for (Eigen::Index k = 0; k < n; ++k) {
    const double c = k < coefficients.size() ? coefficients(k) : 0.0;
    const double f = k < model.truth.size() ? model.truth(k) : 0.0;
    risk += (c - f) * (c - f);
  }
  return risk;
}

double single_feature_excess(const SyntheticModel& model, std::size_t k, double a) {
  require_truth(model);
  const auto i = static_cast<Eigen::Index>(k);
  const double f = i < model.truth.size() ? model.truth(i) : 0.0;
  return (a - f) * (a - f);
}

std::string_view to_string(DimensionRule rule) {
  return rule == DimensionRule::Identity ? "identity" : "power_of_two";
}

DimensionRule dimension_rule_from_string(std::string_view name) {
  if (name == "identity") return DimensionRule::Identity;
  if (name == "power_of_two") return DimensionRule::PowerOfTwo;
  throw ConfigError("unknown m rule '" + std::string(name) + "' (expected identity or power_of_two)");
}

std::size_t dimension_for(DimensionRule rule, std::size_t N) {
  if (rule == DimensionRule::Identity) return N;
  return std::size_t{1} << (std::bit_width(N) - 1);
}

BoundSpec model_bound_spec(const SyntheticModel& model, BoundVariant variant, double epsilon,
                           const ExperimentOptions& options) {
  BoundSpec spec;
  spec.variant = variant;
  spec.epsilon = epsilon;
  spec.mode = options.mode;
  const double sigma = std::sqrt(model.noise.second_moment()) * options.sigma_multiplier;
  if (variant == BoundVariant::IndExact) {
    spec.B = model.sup_bound;
    spec.sigma2 = sigma * sigma;
  } else if (is_transductive(variant)) {
    if (model.noise.bounded()) {
      spec.B = model.sup_bound + model.noise.sup();
    } else if (variant == BoundVariant::TrBasicBounded && options.mode != BoundMode::Simulation) {
      throw ConfigError("tr_basic_bounded needs bounded labels; the model's noise is " +
                        std::string(to_string(model.noise.kind)));
    }
  }
  spec.validate();
  return spec;
}

double median(std::vector<double> values) {
  if (values.empty()) throw ConfigError("median of an empty sample");
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

std::pair<double, double> ols_fit(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw ConfigError("least squares needs two or more points");
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  if (!(sxx > 0.0)) throw ConfigError("least squares needs distinct abscissae");
  const double slope = sxy / sxx;
  return {slope, my - slope * mx};
}

ExperimentReport rate_experiment(const SyntheticModel& model, const RateConfig& config,
                                 const ExperimentOptions& options) {
  const auto start = Clock::now();
  require_truth(model);
  if (config.grid.size() < 4) throw ConfigError("rate experiments need a grid of at least 4 values of N");
  for (auto N : config.grid) {
    if (N < 32) throw ConfigError("rate experiments need every N >= 32");
  }
  if (config.replicates == 0) throw ConfigError("rate experiments need at least one replicate");
  if (!(config.epsilon_exponent > 0.0)) throw ConfigError("epsilon exponent must be positive");

  const std::size_t G = config.grid.size();
  const std::size_t R = config.replicates;
  ExperimentReport report;
  report.kind = model.regularity == Regularity::Besov ? "rate-besov" : "rate-sobolev";

  std::vector<std::shared_ptr<const FeatureDictionary>> dicts(G);
  std::vector<std::shared_ptr<const DesignMoments>> moments(G);
  report.per_n.resize(G);
  for (std::size_t g = 0; g < G; ++g) {
    const std::size_t N = config.grid[g];
    const std::size_t m = dimension_for(config.m_rule, N);
    dicts[g] = std::make_shared<const FeatureDictionary>(model.basis_dictionary(m));
    report.per_n[g].N = N;
    report.per_n[g].m = m;
    report.per_n[g].epsilon = std::pow(static_cast<double>(N), -config.epsilon_exponent);
  }

  report.rows.resize(G * R);
  auto task = [&](std::size_t i) {
    const std::size_t g = i / R;
    const std::size_t r = i % R;
    const std::size_t N = config.grid[g];
    const std::uint64_t seed = replicate_seed(options.seed, N, r);
    const Dataset data = generate(model, N, 0, seed);
    const BoundSpec spec = model_bound_spec(model, BoundVariant::IndExact, report.per_n[g].epsilon, options);
    const Fit fit = fit_inductive(dicts[g], data.train_x, data.train_y, moments[g], spec, selection_options(options));
    const SelectionModel clipped = clip_coefficients(fit.model, *fit.moments, model.sup_bound);
    ReportRow& row = report.rows[i];
    row.N = N;
    row.replicate = r;
    row.seed = seed;
    row.mse = exact_excess_risk(model, clipped.coefficients, model.basis);
    row.selected = fit.model.stopped_at();
  };

  std::vector<char> done(G * R, 0);
  for (std::size_t g = 0; g < G; ++g) {
    // Identity Grams are shared by every replicate at this N and released after it.
    moments[g] = std::make_shared<const DesignMoments>(exact_moments(*dicts[g]));
    const auto chunk = run_tasks(R, options.threads, options.budget_seconds, start,
                                 [&](std::size_t r) { task(g * R + r); });
    std::copy(chunk.begin(), chunk.end(), done.begin() + static_cast<std::ptrdiff_t>(g * R));
    moments[g].reset();
  }
  finish_partial(report, done);

  std::vector<ReportRow> rows;
  for (std::size_t i = 0; i < done.size(); ++i) {
    if (done[i]) rows.push_back(report.rows[i]);
  }

  std::vector<double> lx, ly;
  std::vector<NSummary> summaries;
  for (std::size_t g = 0; g < G; ++g) {
    std::vector<double> values;
    for (std::size_t r = 0; r < R; ++r) {
      if (done[g * R + r]) values.push_back(report.rows[g * R + r].mse);
    }
    if (values.empty()) continue;
    NSummary s = report.per_n[g];
    s.median_mse = median(values);
    s.replicates = values.size();
    summaries.push_back(s);
    const double N = static_cast<double>(s.N);
    if (s.median_mse > 0.0) {
      lx.push_back(std::log(N / std::log(N)));
      ly.push_back(std::log(s.median_mse));
    }
  }
  report.per_n = std::move(summaries);
  report.rows = std::move(rows);
  if (lx.size() >= 2) report.slope = ols_fit(lx, ly).first;

  // Spread of the slope across replicates that completed the whole grid.
  std::vector<double> slopes;
  for (std::size_t r = 0; r < R; ++r) {
    std::vector<double> x, y;
    for (std::size_t g = 0; g < G; ++g) {
      const std::size_t i = g * R + r;
      if (!done[i]) break;
      const auto& row = std::find_if(report.rows.begin(), report.rows.end(), [&](const ReportRow& rr) {
        return rr.N == config.grid[g] && rr.replicate == r;
      });
      if (row->mse <= 0.0) break;
      const double N = static_cast<double>(config.grid[g]);
      x.push_back(std::log(N / std::log(N)));
      y.push_back(std::log(row->mse));
    }
    if (x.size() == G) slopes.push_back(ols_fit(x, y).first);
  }
  if (slopes.size() >= 2) {
    const double mean = std::accumulate(slopes.begin(), slopes.end(), 0.0) / static_cast<double>(slopes.size());
    double ss = 0.0;
    for (double s : slopes) ss += (s - mean) * (s - mean);
    report.slope_stderr = std::sqrt(ss / static_cast<double>(slopes.size() - 1)) /
                          std::sqrt(static_cast<double>(slopes.size()));
  }
  report.runtime_seconds = elapsed_since(start);
  return report;
}

ExperimentReport coverage_study(const SyntheticModel& model, const CoverageConfig& config,
                                const ExperimentOptions& options) {
  const auto start = Clock::now();
  require_truth(model);
  if (config.replicates < 100) throw ConfigError("coverage studies need at least 100 replicates");
  if (config.N == 0 || config.m == 0) throw ConfigError("coverage studies need N >= 1 and m >= 1");
  if (config.variant == BoundVariant::IndSvm) {
    throw ConfigError("ind_svm coverage needs kernel features without an exact risk oracle");
  }
  const bool transductive = is_transductive(config.variant);
  if (transductive && config.k_test == 0) throw ConfigError("transductive coverage needs k_test >= 1");
  const BoundSpec spec = model_bound_spec(model, config.variant, config.epsilon, options);
  auto dict = std::make_shared<const FeatureDictionary>(model.basis_dictionary(config.m));
  std::shared_ptr<const DesignMoments> moments;
  if (!transductive) moments = std::make_shared<const DesignMoments>(exact_moments(*dict));

  ExperimentReport report;
  report.kind = "coverage";
  report.rows.resize(config.replicates);
  auto task = [&](std::size_t r) {
    const std::uint64_t seed = replicate_seed(options.seed, config.N, r);
    ReportRow& row = report.rows[r];
    row.N = config.N;
    row.replicate = r;
    row.seed = seed;
    if (!transductive) {
      const Dataset data = generate(model, config.N, 0, seed);
      const Fit fit = fit_inductive(dict, data.train_x, data.train_y, moments, spec, selection_options(options));
      bool event = true;
      for (std::size_t k = 0; k < fit.stats.size() && event; ++k) {
        const auto& f = fit.stats.features[k];
        if (f.degenerate) continue;
        // R(a theta_k) - R(abar_k theta_k) with abar_k the truth coefficient.
        event = single_feature_excess(model, k, f.center()) <= fit.radius.beta[k];
      }
      row.coverage_event = event;
      row.mse = exact_excess_risk(model, fit.model.coefficients, model.basis);
      row.selected = fit.model.stopped_at();
    } else {
      const Dataset data = generate(model, config.N, config.k_test, seed);
      const Fit fit = fit_transductive(dict, data, spec, selection_options(options));
      row.coverage_event = transductive_event(fit.stats, fit.radius);
      const Eigen::VectorXd pred = predict(fit.model, data.test_x);
      row.mse = (pred - *data.hidden_test_y).squaredNorm() / static_cast<double>(pred.size());
      row.selected = fit.model.stopped_at();
    }
  };
  const auto done = run_tasks(config.replicates, options.threads, options.budget_seconds, start, task);
  finish_partial(report, done);
  std::vector<ReportRow> rows;
  for (std::size_t i = 0; i < done.size(); ++i) {
    if (done[i]) rows.push_back(report.rows[i]);
  }
  report.rows = std::move(rows);
  if (!report.rows.empty()) {
    const auto hits = std::count_if(report.rows.begin(), report.rows.end(),
                                    [](const ReportRow& r) { return *r.coverage_event; });
    report.coverage = static_cast<double>(hits) / static_cast<double>(report.rows.size());
  }
  report.runtime_seconds = elapsed_since(start);
  return report;
}

ExperimentReport transductive_experiment(const SyntheticModel& model, const TransductiveConfig& config,
                                         const ExperimentOptions& options) {
  const auto start = Clock::now();
  if (!is_transductive(config.variant)) throw ConfigError("transductive experiments need a transductive variant");
  if (config.N == 0 || config.k_test == 0 || config.m == 0) {
    throw ConfigError("transductive experiments need N, k_test and m >= 1");
  }
  if (config.replicates == 0) throw ConfigError("transductive experiments need at least one replicate");
  const BoundSpec spec = model_bound_spec(model, config.variant, config.epsilon, options);
  auto dict = std::make_shared<const FeatureDictionary>(model.basis_dictionary(config.m));

  ExperimentReport report;
  report.kind = "transductive";
  report.rows.resize(config.replicates);
  auto task = [&](std::size_t r) {
    const std::uint64_t seed = replicate_seed(options.seed, config.N, r);
    const Dataset data = generate(model, config.N, config.k_test, seed);
    const Fit fit = fit_transductive(dict, data, spec, selection_options(options));
    const FeatureMatrix test = dict->evaluate(data.test_x);
    const Eigen::VectorXd& y = *data.hidden_test_y;
    const double n = static_cast<double>(y.size());

    // Replays the trace on the hidden labels: r2 must drop by at least d2^2 per step.
    Eigen::VectorXd pred = Eigen::VectorXd::Zero(y.size());
    double previous = (y - pred).squaredNorm() / n;
    bool chain = true;
    for (const auto& step : fit.model.trace) {
      pred.noalias() += step.update * test.col(static_cast<Eigen::Index>(step.feature));
      const double current = (y - pred).squaredNorm() / n;
      if (current > previous - step.delta + 1e-9) chain = false;
      previous = current;
    }

    ReportRow& row = report.rows[r];
    row.N = config.N;
    row.replicate = r;
    row.seed = seed;
    row.mse = (test * fit.model.coefficients - y).squaredNorm() / n;
    row.zero_mse = y.squaredNorm() / n;
    row.chain_holds = chain;
    row.coverage_event = transductive_event(fit.stats, fit.radius);
    row.selected = fit.model.stopped_at();
  };
  const auto done = run_tasks(config.replicates, options.threads, options.budget_seconds, start, task);
  finish_partial(report, done);
  std::vector<ReportRow> rows;
  for (std::size_t i = 0; i < done.size(); ++i) {
    if (done[i]) rows.push_back(report.rows[i]);
  }
  report.rows = std::move(rows);
  if (!report.rows.empty()) {
    const double count = static_cast<double>(report.rows.size());
    double chains = 0.0, events = 0.0, mse = 0.0, zero = 0.0;
    for (const auto& row : report.rows) {
      chains += *row.chain_holds ? 1.0 : 0.0;
      events += *row.coverage_event ? 1.0 : 0.0;
      mse += row.mse;
      zero += *row.zero_mse;
    }
    report.chain_frequency = chains / count;
    report.coverage = events / count;
    report.mean_test_mse = mse / count;
    report.mean_zero_mse = zero / count;
  }
  report.runtime_seconds = elapsed_since(start);
  return report;
}

}  // namespace pacfs
