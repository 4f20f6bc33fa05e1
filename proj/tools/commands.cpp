#include "commands.hpp"

#include "pacfs/bounds.hpp"
#include "pacfs/dictionary.hpp"
#include "pacfs/error.hpp"
#include "pacfs/experiments.hpp"
#include "pacfs/io.hpp"
#include "pacfs/moments.hpp"
#include "pacfs/selector.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <bit>
#include <filesystem>
#include <functional>
#include <map>
#include <ostream>

namespace pacfs::cli {

namespace {

struct Common {
  std::string config_path;
  std::uint64_t seed = 0;
  unsigned threads = 1;
  std::string out = ".";
  bool json = false;
  CLI::Option* seed_opt = nullptr;
  CLI::Option* threads_opt = nullptr;
  CLI::Option* out_opt = nullptr;
};

void add_common(CLI::App* sub, Common& c) {
  sub->add_option("--config", c.config_path, "JSON configuration file");
  c.seed_opt = sub->add_option("--seed", c.seed, "random seed");
  c.threads_opt = sub->add_option("--threads", c.threads, "worker threads")->check(CLI::PositiveNumber);
  c.out_opt = sub->add_option("--out", c.out, "output directory");
  sub->add_flag("--json", c.json, "machine-readable output");
}

template <class T>
void set_if(const CLI::Option* opt, Json& target, const char* key, const T& value) {
  if (opt != nullptr && opt->count() > 0) target[key] = value;
}

Json& object_at(Json& cfg, const char* key) {
  if (!cfg.contains(key)) cfg[key] = Json::object();
  if (!cfg[key].is_object()) throw ConfigError("config field '" + std::string(key) + "' must be an object");
  return cfg[key];
}

// Returns cfg[key], storing `fallback` first when the key is absent so the
// echoed configuration is fully resolved.
template <class T>
T resolved(Json& cfg, const char* key, const T& fallback) {
  if (!cfg.contains(key)) cfg[key] = fallback;
  return cfg[key].get<T>();
}

std::string required_string(const Json& cfg, const char* key) {
  if (!cfg.contains(key) || !cfg[key].is_string()) {
    throw ConfigError("missing required setting '" + std::string(key) + "'");
  }
  return cfg[key].get<std::string>();
}

// Reads the config file and applies the shared flags on top of it.
struct Run {
  Json config = Json::object();
  std::uint64_t seed = 0;
  unsigned threads = 1;
  std::filesystem::path out;
  bool json = false;
};

Run start_run(const Common& c) {
  Run run;
  if (!c.config_path.empty()) {
    try {
      run.config = Json::parse(read_text(c.config_path));
    } catch (const Json::parse_error& e) {
      throw ConfigError("config file '" + c.config_path + "' is not valid JSON: " + e.what());
    } catch (const DataError& e) {
      throw ConfigError(e.what());
    }
    if (!run.config.is_object()) throw ConfigError("config file must hold a JSON object");
  }
  set_if(c.seed_opt, run.config, "seed", c.seed);
  run.seed = resolved<std::uint64_t>(run.config, "seed", 0);
  run.threads = run.config.contains("threads") ? run.config["threads"].get<unsigned>() : 1u;
  if (c.threads_opt->count() > 0) run.threads = c.threads;
  run.out = run.config.contains("out") ? run.config["out"].get<std::string>() : std::string(".");
  if (c.out_opt->count() > 0) run.out = c.out;
  run.config.erase("threads");
  run.config.erase("out");
  run.json = c.json;
  if (run.threads == 0) throw ConfigError("--threads must be at least 1");
  return run;
}

void ensure_out_dir(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw ConfigError("cannot create output directory '" + dir.string() + "': " + ec.message());
}

// ---------------------------------------------------------------------------
// Shared resolution of dictionary, moments, bound and selector settings
// ---------------------------------------------------------------------------

struct DictionaryFlags {
  std::string kind;
  std::size_t m = 0;
  double gamma = 1.0;
  std::vector<double> scales;
  std::string centers;
  int levels = 0;
  std::size_t top = 0;
  CLI::Option* kind_opt = nullptr;
  CLI::Option* m_opt = nullptr;
  CLI::Option* gamma_opt = nullptr;
  CLI::Option* scales_opt = nullptr;
  CLI::Option* centers_opt = nullptr;
  CLI::Option* levels_opt = nullptr;
  CLI::Option* top_opt = nullptr;

  void add(CLI::App* sub) {
    kind_opt = sub->add_option("--dictionary", kind,
                               "trigonometric, haar, gaussian_kernel, multiscale_gaussian, kernel_pca");
    m_opt = sub->add_option("--m", m, "number of features");
    gamma_opt = sub->add_option("--gamma", gamma, "gaussian bandwidth in exp(-gamma d^2 / 2)");
    scales_opt = sub->add_option("--scales", scales, "bandwidths of the multiscale dictionary");
    centers_opt = sub->add_option("--centers", centers, "kernel centers or design: train or all");
    levels_opt = sub->add_option("--levels", levels, "haar levels");
    top_opt = sub->add_option("--top", top, "kernel PCA components kept");
  }

  void apply(Json& cfg) const {
    if (kind_opt->count() + m_opt->count() + gamma_opt->count() + scales_opt->count() + centers_opt->count() +
            levels_opt->count() + top_opt->count() ==
        0) {
      return;
    }
    Json& d = object_at(cfg, "dictionary");
    set_if(kind_opt, d, "kind", kind);
    set_if(m_opt, d, "m", m);
    Json& p = object_at(d, "parameters");
    set_if(gamma_opt, p, "gamma", gamma);
    set_if(scales_opt, p, "scales", scales);
    if (centers_opt->count() > 0) {
      const std::string kind_name = d.value("kind", std::string());
      p[kind_name == "kernel_pca" ? "design" : "centers"] = centers;
    }
    set_if(levels_opt, p, "levels", levels);
    set_if(top_opt, p, "top", top);
  }
};

struct BoundFlags {
  std::vector<std::string> variants;
  double epsilon = 0.05;
  double B = 0.0;
  double sigma2 = 0.0;
  std::string mode;
  double kappa = 0.0;
  std::string schedule;
  CLI::Option* variant_opt = nullptr;
  CLI::Option* epsilon_opt = nullptr;
  CLI::Option* B_opt = nullptr;
  CLI::Option* sigma2_opt = nullptr;
  CLI::Option* mode_opt = nullptr;
  CLI::Option* kappa_opt = nullptr;
  CLI::Option* schedule_opt = nullptr;

  void add(CLI::App* sub, bool repeatable_variant) {
    variant_opt = sub->add_option("--variant", variants, "bound variant");
    if (!repeatable_variant) variant_opt->expected(1);
    epsilon_opt = sub->add_option("--epsilon", epsilon, "confidence level epsilon in (0, 1)");
    B_opt = sub->add_option("--B", B, "bound on |f| (inductive) or |Y| (transductive)");
    sigma2_opt = sub->add_option("--sigma2", sigma2, "noise second moment");
    mode_opt = sub->add_option("--bound-mode", mode, "auto, simulation or deployment");
    kappa_opt = sub->add_option("--kappa", kappa, "stopping threshold in (0, 1/N)");
    schedule_opt = sub->add_option("--schedule", schedule, "greedy_max or round_robin");
  }

  void apply(Json& cfg) const {
    if (variant_opt->count() + epsilon_opt->count() + B_opt->count() + sigma2_opt->count() + mode_opt->count() > 0) {
      Json& b = object_at(cfg, "bound");
      if (variant_opt->count() > 0) b["variant"] = variants.front();
      set_if(epsilon_opt, b, "epsilon", epsilon);
      set_if(B_opt, b, "B", B);
      set_if(sigma2_opt, b, "sigma2", sigma2);
      set_if(mode_opt, b, "mode", mode);
    }
    if (variants.size() > 1) cfg["variants"] = variants;
    set_if(kappa_opt, cfg, "kappa", kappa);
    set_if(schedule_opt, cfg, "schedule", schedule);
  }
};

struct DataFlags {
  std::string train;
  std::string test;
  std::string moments;
  std::size_t mc_samples = 0;
  std::string gram;
  CLI::Option* train_opt = nullptr;
  CLI::Option* test_opt = nullptr;
  CLI::Option* moments_opt = nullptr;
  CLI::Option* samples_opt = nullptr;
  CLI::Option* gram_opt = nullptr;

  void add(CLI::App* sub, bool with_test, bool with_moments) {
    train_opt = sub->add_option("--train", train, "labeled CSV (x1..xd,y)");
    if (with_test) test_opt = sub->add_option("--test", test, "unlabeled CSV (x1..xd)");
    if (with_moments) {
      moments_opt = sub->add_option("--moments", moments, "exact, monte_carlo or user_supplied");
      samples_opt = sub->add_option("--mc-samples", mc_samples, "Monte-Carlo draws");
      gram_opt = sub->add_option("--gram", gram, "Gram matrix CSV for user_supplied moments");
    }
  }

  void apply(Json& cfg) const {
    set_if(train_opt, cfg, "train", train);
    set_if(test_opt, cfg, "test", test);
    if (moments_opt == nullptr) return;
    if (moments_opt->count() + samples_opt->count() + gram_opt->count() == 0) return;
    Json& mo = object_at(cfg, "moments");
    set_if(moments_opt, mo, "source", moments);
    set_if(samples_opt, mo, "samples", mc_samples);
    if (gram_opt->count() > 0) {
      mo["file"] = gram;
      if (!mo.contains("source")) mo["source"] = "user_supplied";
    }
  }
};

// Replaces "train"/"all" point-set references in a dictionary recipe.
FeatureDictionary resolve_dictionary(Json& cfg, const Points& train, const Points* all) {
  if (!cfg.contains("dictionary")) throw ConfigError("missing required setting 'dictionary'");
  Json recipe = cfg["dictionary"];
  if (!recipe.is_object()) throw ConfigError("'dictionary' must be an object");
  if (recipe.contains("parameters")) {
    for (const char* key : {"centers", "design"}) {
      Json& p = recipe["parameters"];
      if (!p.contains(key) || !p[key].is_string()) continue;
      const std::string which = p[key].get<std::string>();
      if (which == "train") {
        p[key] = matrix_to_json(train);
      } else if (which == "all") {
        if (all == nullptr) throw ConfigError("dictionary points 'all' need test points (transduce)");
        p[key] = matrix_to_json(*all);
      } else {
        throw ConfigError("dictionary " + std::string(key) + " must be 'train', 'all' or a matrix");
      }
    }
  }
  return dictionary_from_json(recipe);
}

DesignMoments resolve_moments(Json& cfg, const FeatureDictionary& dict, std::uint64_t seed, unsigned threads) {
  Json& mo = object_at(cfg, "moments");
  const std::string source = resolved<std::string>(mo, "source", dict.is_orthonormal() ? "exact" : "monte_carlo");
  if (source == "exact") return exact_moments(dict);
  if (source == "monte_carlo") {
    UniformSampler sampler;
    sampler.dimension = dict.dimension();
    sampler.lower = resolved<double>(mo, "lower", 0.0);
    sampler.upper = resolved<double>(mo, "upper", 1.0);
    const auto samples = resolved<std::size_t>(mo, "samples", 100000);
    return monte_carlo_moments(dict, sampler, samples, derive_seed(seed, 0), threads);
  }
  if (source == "user_supplied") {
    const std::string file = required_string(mo, "file");
    DesignMoments moments = load_gram_csv(file);
    if (moments.size() != dict.size()) {
      throw DataError("Gram file '" + file + "' is " + std::to_string(moments.size()) + " x " +
                      std::to_string(moments.size()) + " but the dictionary has " + std::to_string(dict.size()) +
                      " features");
    }
    return moments;
  }
  throw ConfigError("unknown moments source '" + source + "' (expected exact, monte_carlo or user_supplied)");
}

BoundSpec resolve_bound(Json& cfg) {
  if (!cfg.contains("bound")) throw ConfigError("missing required setting 'bound' (at least its variant)");
  Json& b = cfg["bound"];
  if (!b.is_object() || !b.contains("variant")) throw ConfigError("missing required setting 'bound.variant'");
  resolved<double>(b, "epsilon", 0.05);
  return bound_spec_from_json(b);
}

SelectionOptions resolve_selection(Json& cfg) {
  SelectionOptions opts;
  opts.schedule = schedule_from_string(resolved<std::string>(cfg, "schedule", "greedy_max"));
  if (cfg.contains("kappa") && !cfg["kappa"].is_null()) opts.kappa = cfg["kappa"].get<double>();
  return opts;
}

std::string join_features(const SelectionModel& model) {
  std::vector<std::size_t> features;
  for (Eigen::Index k = 0; k < model.coefficients.size(); ++k) {
    if (model.coefficients(k) != 0.0) features.push_back(static_cast<std::size_t>(k));
  }
  std::string s;
  for (auto k : features) s += (s.empty() ? "" : " ") + std::to_string(k);
  return s.empty() ? "(none)" : s;
}

void print_summary(std::ostream& out, const Run& run, const SelectionModel& model, std::size_t N,
                   const std::filesystem::path& model_path) {
  if (run.json) {
    Json j = {{"N", N},
              {"m", model.size()},
              {"variant", to_string(model.variant)},
              {"epsilon", model.epsilon},
              {"kappa", model.kappa},
              {"stopped_at", model.stopped_at()},
              {"model", model_path.string()}};
    Json selected = Json::array();
    for (Eigen::Index k = 0; k < model.coefficients.size(); ++k) {
      if (model.coefficients(k) != 0.0) selected.push_back(k);
    }
    j["selected"] = selected;
    out << dump(j);
    return;
  }
  out << "N = " << N << ", m = " << model.size() << ", variant " << to_string(model.variant) << ", epsilon "
      << format_double(model.epsilon) << ", kappa " << format_double(model.kappa) << "\n";
  out << "stopped after n0 = " << model.stopped_at() << " steps; nonzero features: " << join_features(model) << "\n";
  const std::size_t head = std::min<std::size_t>(model.trace.size(), 10);
  if (head > 0) {
    out << "step\tfeature\tgamma\ttau\tdelta\tupdate\n";
    for (std::size_t i = 0; i < head; ++i) {
      const auto& r = model.trace[i];
      out << r.step << "\t" << r.feature << "\t" << format_double(r.gamma) << "\t" << format_double(r.tau) << "\t"
          << format_double(r.delta) << "\t" << format_double(r.update) << "\n";
    }
    if (model.trace.size() > head) out << "... (" << model.trace.size() - head << " more steps)\n";
  }
  out << "model written to " << model_path.string() << "\n";
}

void print_warnings(std::ostream& err, const std::vector<std::string>& warnings) {
  for (const auto& w : warnings) err << "warning: " << w << "\n";
}

// ---------------------------------------------------------------------------
// Subcommands
// ---------------------------------------------------------------------------

int cmd_fit(Run run, std::ostream& out, std::ostream& err) {
  Json& cfg = run.config;
  const LabeledData data = read_labeled_csv(required_string(cfg, "train"));
  auto dict = std::make_shared<const FeatureDictionary>(resolve_dictionary(cfg, data.x, nullptr));
  const BoundSpec spec = resolve_bound(cfg);
  if (is_transductive(spec.variant)) {
    throw ConfigError("bound variant " + std::string(to_string(spec.variant)) + " is transductive; use transduce");
  }
  const SelectionOptions opts = resolve_selection(cfg);
  auto moments = std::make_shared<const DesignMoments>(resolve_moments(cfg, *dict, run.seed, run.threads));
  const Fit fit = fit_inductive(dict, data.x, data.y, moments, spec, opts);
  print_warnings(err, fit.model.warnings);

  ensure_out_dir(run.out);
  const auto path = run.out / "model.json";
  write_text(path.string(), dump(model_to_json(fit.model, cfg, run.seed)));
  print_summary(out, run, fit.model, static_cast<std::size_t>(data.x.rows()), path);
  return kOk;
}

int cmd_transduce(Run run, std::ostream& out, std::ostream& err) {
  Json& cfg = run.config;
  const LabeledData train = read_labeled_csv(required_string(cfg, "train"));
  const Points test = read_unlabeled_csv(required_string(cfg, "test"));
  if (test.cols() != train.x.cols()) {
    throw DataError("train points have dimension " + std::to_string(train.x.cols()) + " but test points have " +
                    std::to_string(test.cols()));
  }
  Dataset data{train.x, train.y, test, std::nullopt};
  const Points all = data.all_points();
  auto dict = std::make_shared<const FeatureDictionary>(resolve_dictionary(cfg, train.x, &all));
  const BoundSpec spec = resolve_bound(cfg);
  if (!is_transductive(spec.variant)) {
    throw ConfigError("bound variant " + std::string(to_string(spec.variant)) + " is inductive; use fit");
  }
  if (train.x.rows() > 0 && test.rows() > 0 && test.rows() % train.x.rows() == 0) {
    cfg["k_test"] = test.rows() / train.x.rows();
  }
  const SelectionOptions opts = resolve_selection(cfg);
  ensure_out_dir(run.out);
  const auto model_path = run.out / "model.json";
  const auto pred_path = run.out / "predictions.csv";

  SelectionModel model;
  Eigen::VectorXd predictions(0);
  if (test.rows() == 0) {
    err << "warning: the test file has no rows; writing empty predictions\n";
    model.coefficients = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(dict->size()));
    model.dictionary = dict;
    model.variant = spec.variant;
    model.epsilon = spec.epsilon;
    model.schedule = opts.schedule;
    model.kappa = opts.kappa.value_or(1.0 / (2.0 * static_cast<double>(std::max<Eigen::Index>(train.x.rows(), 1))));
  } else {
    const Fit fit = fit_transductive(dict, data, spec, opts);
    print_warnings(err, fit.model.warnings);
    model = fit.model;
    predictions = predict(model, test);
  }
  write_text(pred_path.string(), predictions_csv(predictions));
  write_text(model_path.string(), dump(model_to_json(model, cfg, run.seed)));
  print_summary(out, run, model, static_cast<std::size_t>(train.x.rows()), model_path);
  if (!run.json) out << "predictions written to " << pred_path.string() << "\n";
  return kOk;
}

int cmd_bounds(Run run, std::ostream& out, std::ostream&) {
  Json& cfg = run.config;
  const LabeledData train = read_labeled_csv(required_string(cfg, "train"));
  const BoundSpec base = resolve_bound(cfg);
  std::vector<BoundVariant> variants{base.variant};
  if (cfg.contains("variants")) {
    variants.clear();
    for (const auto& v : cfg["variants"]) variants.push_back(bound_variant_from_string(v.get<std::string>()));
  }
  const bool transductive = is_transductive(variants.front());
  for (auto v : variants) {
    if (is_transductive(v) != transductive) throw ConfigError("cannot mix inductive and transductive variants");
  }

  std::shared_ptr<const FeatureDictionary> dict;
  DesignMoments moments;
  SampleStats stats;
  FeatureMatrix train_features;
  if (transductive) {
    const Points test = read_unlabeled_csv(required_string(cfg, "test"));
    if (test.cols() != train.x.cols()) throw DataError("train and test dimensions differ");
    const Dataset data{train.x, train.y, test, std::nullopt};
    const Points all = data.all_points();
    dict = std::make_shared<const FeatureDictionary>(resolve_dictionary(cfg, train.x, &all));
    const FeatureMatrix features = dict->evaluate(all);
    const std::size_t N = data.train_size();
    if (test.rows() == 0 || data.test_size() % N != 0) {
      throw DataError("transductive bounds need k*N test rows (N = " + std::to_string(N) + ")");
    }
    moments = empirical_test_moments(features, N, data.test_size() / N);
    stats = transductive_stats(features, train.y, moments, N);
  } else {
    dict = std::make_shared<const FeatureDictionary>(resolve_dictionary(cfg, train.x, nullptr));
    moments = resolve_moments(cfg, *dict, run.seed, run.threads);
    train_features = dict->evaluate(train.x);
    stats = inductive_stats(train_features, train.y, moments);
  }

  std::vector<ConfidenceRadius> radii;
  for (auto v : variants) {
    BoundSpec spec = base;
    spec.variant = v;
    if (v == BoundVariant::IndSvm) {
      const auto owners = anchor_owners(dict->anchors(), train.x);
      std::map<std::size_t, std::size_t> counts;
      std::size_t per_point = 0;
      for (auto o : owners) per_point = std::max(per_point, ++counts[o]);
      radii.push_back(compute_radius(leave_one_out_stats(train_features, train.y, moments, owners, per_point), spec));
    } else {
      radii.push_back(compute_radius(stats, spec));
    }
  }

  if (run.json) {
    Json j = artifact_header(cfg, run.seed);
    Json names = Json::array();
    Json modes = Json::array();
    for (const auto& r : radii) {
      names.push_back(to_string(r.variant));
      modes.push_back(to_string(r.mode));
    }
    j["variants"] = names;
    j["modes"] = modes;
    Json rows = Json::array();
    for (std::size_t k = 0; k < stats.size(); ++k) {
      const auto& f = stats.features[k];
      Json beta = Json::object();
      Json tau = Json::object();
      for (const auto& r : radii) {
        beta[std::string(to_string(r.variant))] = number_or_null(r.beta[k]);
        tau[std::string(to_string(r.variant))] = number_or_null(r.tau[k]);
      }
      rows.push_back({{"k", k},
                      {"v", f.v},
                      {"alpha_hat", number_or_null(f.alpha_hat())},
                      {"C", number_or_null(f.normalization_ratio())},
                      {"beta", beta},
                      {"tau", tau}});
    }
    j["rows"] = rows;
    out << dump(j);
    return kOk;
  }
  out << "k\tv\talpha_hat\tC";
  for (const auto& r : radii) out << "\tbeta[" << to_string(r.variant) << "]\ttau[" << to_string(r.variant) << "]";
  out << "\n";
  for (std::size_t k = 0; k < stats.size(); ++k) {
    const auto& f = stats.features[k];
    out << k << "\t" << format_double(f.v) << "\t" << format_double(f.alpha_hat()) << "\t"
        << format_double(f.normalization_ratio());
    for (const auto& r : radii) out << "\t" << format_double(r.beta[k]) << "\t" << format_double(r.tau[k]);
    out << "\n";
  }
  return kOk;
}

NoiseSpec resolve_noise(Json& cfg, NoiseKind kind, double scale) {
  Json& n = object_at(cfg, "noise");
  NoiseSpec noise;
  noise.kind = noise_kind_from_string(resolved<std::string>(n, "kind", std::string(to_string(kind))));
  noise.scale = resolved<double>(n, "scale", scale);
  if (!(noise.scale >= 0.0)) throw ConfigError("noise scale must be nonnegative");
  return noise;
}

int cmd_experiment(Run run, const std::string& kind_flag, std::ostream& out, std::ostream& err) {
  Json& cfg = run.config;
  if (!kind_flag.empty()) cfg["kind"] = kind_flag;
  const std::string kind = required_string(cfg, "kind");

  ExperimentOptions options;
  options.seed = run.seed;
  options.threads = run.threads;
  options.schedule = schedule_from_string(resolved<std::string>(cfg, "schedule", "greedy_max"));
  options.mode = bound_mode_from_string(resolved<std::string>(cfg, "bound_mode", "auto"));
  options.sigma_multiplier = resolved<double>(cfg, "sigma_multiplier", 1.0);
  if (cfg.contains("budget_seconds") && !cfg["budget_seconds"].is_null()) {
    options.budget_seconds = cfg["budget_seconds"].get<double>();
  }

  ExperimentReport report;
  if (kind == "rate-sobolev" || kind == "rate-besov") {
    const bool sobolev = kind == "rate-sobolev";
    RateConfig rc;
    rc.grid = resolved<std::vector<std::size_t>>(cfg, "grid", rc.grid);
    rc.replicates = resolved<std::size_t>(cfg, "replicates", rc.replicates);
    rc.epsilon_exponent = resolved<double>(cfg, "epsilon_exponent", rc.epsilon_exponent);
    rc.m_rule = dimension_rule_from_string(
        resolved<std::string>(cfg, "m_rule", sobolev ? "identity" : "power_of_two"));
    if (rc.grid.empty()) throw ConfigError("rate experiments need a grid of at least 4 values of N");
    const std::size_t largest = *std::max_element(rc.grid.begin(), rc.grid.end());
    const NoiseSpec noise = resolve_noise(cfg, NoiseKind::Gaussian, 0.25);
    SyntheticModel model;
    if (sobolev) {
      const double beta = resolved<double>(cfg, "beta", 1.0);
      model = sobolev_model(beta, resolved<std::size_t>(cfg, "truth_length", 2 * largest), noise);
    } else {
      const double s = resolved<double>(cfg, "s", 0.75);
      const double p = resolved<double>(cfg, "p", 1.0);
      const int levels = resolved<int>(cfg, "levels", static_cast<int>(std::bit_width(largest)));
      model = besov_model(s, p, levels, noise);
    }
    report = rate_experiment(model, rc, options);
  } else if (kind == "coverage") {
    CoverageConfig cc;
    cc.variant = bound_variant_from_string(resolved<std::string>(cfg, "variant", "ind_exact"));
    cc.N = resolved<std::size_t>(cfg, "N", cc.N);
    cc.m = resolved<std::size_t>(cfg, "m", cc.m);
    cc.epsilon = resolved<double>(cfg, "epsilon", cc.epsilon);
    cc.replicates = resolved<std::size_t>(cfg, "replicates", cc.replicates);
    if (is_transductive(cc.variant)) cc.k_test = resolved<std::size_t>(cfg, "k_test", cc.k_test);
    const NoiseSpec noise = resolve_noise(cfg, NoiseKind::Gaussian, 0.5);
    const auto model =
        sobolev_model(resolved<double>(cfg, "beta", 1.0), resolved<std::size_t>(cfg, "truth_length", cc.m), noise);
    report = coverage_study(model, cc, options);
  } else if (kind == "transductive") {
    TransductiveConfig tc;
    tc.variant = bound_variant_from_string(resolved<std::string>(cfg, "variant", "tr_basic_bounded"));
    tc.N = resolved<std::size_t>(cfg, "N", tc.N);
    tc.k_test = resolved<std::size_t>(cfg, "k_test", tc.k_test);
    tc.m = resolved<std::size_t>(cfg, "m", tc.m);
    tc.epsilon = resolved<double>(cfg, "epsilon", tc.epsilon);
    tc.replicates = resolved<std::size_t>(cfg, "replicates", tc.replicates);
    const NoiseSpec noise = resolve_noise(cfg, NoiseKind::Uniform, 0.5);
    const auto model =
        sobolev_model(resolved<double>(cfg, "beta", 1.0), resolved<std::size_t>(cfg, "truth_length", tc.m), noise);
    report = transductive_experiment(model, tc, options);
  } else {
    throw ConfigError("unknown experiment kind '" + kind +
                      "' (expected rate-sobolev, rate-besov, coverage or transductive)");
  }

  ensure_out_dir(run.out);
  const auto json_path = run.out / "report.json";
  const auto csv_path = run.out / "report.csv";
  write_text(json_path.string(), dump(report_to_json(report, cfg, run.seed)));
  write_text(csv_path.string(), report_csv(report));
  print_warnings(err, report.warnings);

  if (run.json) {
    Json j = {{"kind", report.kind}, {"partial", report.partial}, {"report", json_path.string()},
              {"csv", csv_path.string()}, {"rows", report.rows.size()}};
    if (report.slope) j["slope"] = *report.slope;
    if (report.slope_stderr) j["slope_stderr"] = *report.slope_stderr;
    if (report.coverage) j["coverage"] = *report.coverage;
    if (report.chain_frequency) j["chain_frequency"] = *report.chain_frequency;
    out << dump(j);
  } else {
    out << "experiment " << report.kind << ": " << report.rows.size() << " replicate rows"
        << (report.partial ? " (partial)" : "") << "\n";
    for (const auto& s : report.per_n) {
      out << "  N = " << s.N << ", m = " << s.m << ": median mse " << format_double(s.median_mse) << " over "
          << s.replicates << " replicates\n";
    }
    if (report.slope) {
      out << "  slope " << format_double(*report.slope);
      if (report.slope_stderr) out << " (standard error " << format_double(*report.slope_stderr) << ")";
      out << "\n";
    }
    if (report.coverage) out << "  coverage " << format_double(*report.coverage) << "\n";
    if (report.chain_frequency) out << "  risk-decrease chain frequency " << format_double(*report.chain_frequency) << "\n";
    if (report.mean_test_mse) {
      out << "  mean test mse " << format_double(*report.mean_test_mse) << " (zero predictor "
          << format_double(*report.mean_zero_mse) << ")\n";
    }
    out << "report written to " << json_path.string() << " and " << csv_path.string() << "\n";
  }
  if (report.partial) {
    err << "error: wall-clock budget exceeded; partial results written\n";
    return kBudgetExceeded;
  }
  return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Feature selection with confidence-region projections"};
  app.name("pacfs");
  app.require_subcommand(1);

  Common fit_common, trans_common, bounds_common, exp_common;
  DictionaryFlags fit_dict, trans_dict, bounds_dict;
  BoundFlags fit_bound, trans_bound, bounds_bound;
  DataFlags fit_data, trans_data, bounds_data;

  auto* fit = app.add_subcommand("fit", "fit a model on labeled data");
  add_common(fit, fit_common);
  fit_data.add(fit, false, true);
  fit_dict.add(fit);
  fit_bound.add(fit, false);

  auto* trans = app.add_subcommand("transduce", "predict the labels of unlabeled test points");
  add_common(trans, trans_common);
  trans_data.add(trans, true, false);
  trans_dict.add(trans);
  trans_bound.add(trans, false);

  auto* bounds = app.add_subcommand("bounds", "print per-feature confidence radii");
  add_common(bounds, bounds_common);
  bounds_data.add(bounds, true, true);
  bounds_dict.add(bounds);
  bounds_bound.add(bounds, true);

  auto* exp = app.add_subcommand("experiment", "run a synthetic experiment");
  add_common(exp, exp_common);
  std::string exp_kind;
  exp->add_option("kind", exp_kind, "rate-sobolev, rate-besov, coverage or transductive");
  struct ExperimentFlags {
    std::vector<std::size_t> grid;
    std::size_t replicates = 0, N = 0, m = 0, k_test = 0, truth_length = 0;
    double epsilon = 0.0, epsilon_exponent = 0.0, sigma_multiplier = 1.0, budget = 0.0, beta = 0.0;
    double noise_scale = 0.0;
    std::string variant, noise, m_rule, schedule, mode;
  } ef;
  std::vector<std::function<void(Json&)>> exp_apply;
  auto bind = [&](const char* flag, auto& value, const char* key, const char* help) {
    CLI::Option* opt = exp->add_option(flag, value, help);
    exp_apply.push_back([opt, &value, key](Json& cfg) { set_if(opt, cfg, key, value); });
  };
  bind("--grid", ef.grid, "grid", "sample sizes N");
  bind("--replicates", ef.replicates, "replicates", "replicates per N");
  bind("--N", ef.N, "N", "training sample size");
  bind("--m", ef.m, "m", "number of features");
  bind("--k-test", ef.k_test, "k_test", "test block size in multiples of N");
  bind("--truth-length", ef.truth_length, "truth_length", "number of truth coefficients");
  bind("--epsilon", ef.epsilon, "epsilon", "confidence level");
  bind("--epsilon-exponent", ef.epsilon_exponent, "epsilon_exponent", "epsilon = N^-exponent in rate runs");
  bind("--sigma-multiplier", ef.sigma_multiplier, "sigma_multiplier", "factor applied to the sigma given to the bound");
  bind("--budget-seconds", ef.budget, "budget_seconds", "wall-clock cap");
  bind("--beta", ef.beta, "beta", "Sobolev smoothness");
  bind("--variant", ef.variant, "variant", "bound variant");
  bind("--m-rule", ef.m_rule, "m_rule", "identity or power_of_two");
  bind("--schedule", ef.schedule, "schedule", "greedy_max or round_robin");
  bind("--bound-mode", ef.mode, "bound_mode", "auto, simulation or deployment");
  CLI::Option* noise_opt = exp->add_option("--noise", ef.noise, "gaussian, uniform or rademacher");
  CLI::Option* noise_scale_opt = exp->add_option("--noise-scale", ef.noise_scale, "noise scale");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kConfigError;
  }

  try {
    if (fit->parsed()) {
      Run r = start_run(fit_common);
      fit_data.apply(r.config);
      fit_dict.apply(r.config);
      fit_bound.apply(r.config);
      return cmd_fit(std::move(r), out, err);
    }
    if (trans->parsed()) {
      Run r = start_run(trans_common);
      trans_data.apply(r.config);
      trans_dict.apply(r.config);
      trans_bound.apply(r.config);
      return cmd_transduce(std::move(r), out, err);
    }
    if (bounds->parsed()) {
      Run r = start_run(bounds_common);
      bounds_data.apply(r.config);
      bounds_dict.apply(r.config);
      bounds_bound.apply(r.config);
      return cmd_bounds(std::move(r), out, err);
    }
    Run r = start_run(exp_common);
    for (auto& f : exp_apply) f(r.config);
    if (noise_opt->count() + noise_scale_opt->count() > 0) {
      Json& n = object_at(r.config, "noise");
      set_if(noise_opt, n, "kind", ef.noise);
      set_if(noise_scale_opt, n, "scale", ef.noise_scale);
    }
    return cmd_experiment(std::move(r), exp_kind, out, err);
  } catch (const ConfigError& e) {
    err << "configuration error: " << e.what() << "\n";
    return kConfigError;
  } catch (const DataError& e) {
    err << "data error: " << e.what() << "\n";
    return kDataError;
  } catch (const NumericalError& e) {
    err << "numerical error: " << e.what() << "\n";
    return kNumericalError;
  } catch (const BudgetExceeded& e) {
    err << "budget exceeded: " << e.what() << "\n";
    return kBudgetExceeded;
  } catch (const Json::exception& e) {
    err << "configuration error: " << e.what() << "\n";
    return kConfigError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kFailure;
  }
}

}  // namespace pacfs::cli
