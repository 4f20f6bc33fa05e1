// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on failure.

#include "commands.hpp"
#include "pacfs/bounds.hpp"
#include "pacfs/experiments.hpp"
#include "pacfs/io.hpp"
#include "pacfs/rng.hpp"
#include "pacfs/selector.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>

using namespace pacfs;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

int failures = 0;

void report(int id, const std::string& name, double limit_seconds, const std::function<Outcome()>& body) {
  const auto start = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  const bool in_time = limit_seconds <= 0.0 || seconds < limit_seconds;
  const bool pass = o.pass && in_time;
  if (!pass) ++failures;
  std::ostringstream line;
  line << (pass ? "PASS" : "FAIL") << "  [" << id << "] " << name << ": " << o.detail;
  line.precision(3);
  line << " (" << std::fixed << seconds << " s";
  if (limit_seconds > 0.0) line << ", limit " << limit_seconds << " s";
  line << ")";
  if (!in_time) line << " over time";
  std::cout << line.str() << std::endl;
}

std::string num(double x) { return format_double(x); }

double soft(double x, double tau) { return x > tau ? x - tau : (x < -tau ? x + tau : 0.0); }

Outcome soft_threshold_equivalence() {
  const auto model = sobolev_model(1.0, 64, {NoiseKind::Gaussian, 0.3});
  const auto data = generate(model, 4096, 0, 101);
  auto dict = std::make_shared<const FeatureDictionary>(FeatureDictionary::trigonometric(16));
  auto moments = std::make_shared<const DesignMoments>(exact_moments(*dict));
  const BoundSpec spec = model_bound_spec(model, BoundVariant::IndExact, 0.05, {});
  SelectionOptions opt;
  opt.schedule = Schedule::RoundRobin;
  const Fit fit = fit_inductive(dict, data.train_x, data.train_y, moments, spec, opt);

  double worst = 0.0;
  std::size_t selected = 0;
  for (std::size_t k = 0; k < 16; ++k) {
    const double expected = soft(fit.stats.features[k].center(), fit.radius.tau[k]);
    worst = std::max(worst, std::abs(fit.model.coefficients(static_cast<Eigen::Index>(k)) - expected));
    if (expected != 0.0) ++selected;
  }
  opt.warm_start = fit.model.coefficients;
  const auto again = run_selection(fit.stats, *moments, fit.radius, opt);
  const double moved = (again.coefficients - fit.model.coefficients).cwiseAbs().maxCoeff();
  return {worst <= 1e-12 && moved <= 1e-12 && selected > 0,
          "max deviation " + num(worst) + ", second pass moved " + num(moved) + ", " + std::to_string(selected) +
              " nonzero of 16"};
}

Outcome projection_geometry() {
  Rng rng(202);
  double worst_member = -INFINITY, worst_idem = 0.0, worst_delta = 0.0;
  for (int t = 0; t < 1000; ++t) {
    const double v = 0.01 + 10.0 * rng.uniform();
    const double tau = 2.0 * rng.uniform();
    const double gamma = rng.uniform(-5.0, 5.0);
    const double start = rng.uniform(-3.0, 3.0);
    SampleStats stats;
    stats.train_size = 10;
    FeatureStats f;
    f.v = v;
    f.n = 10;
    f.sq_mean = v;
    f.cross_mean = (start + gamma) * v;
    stats.features.push_back(f);
    const auto moments = make_moments(Eigen::MatrixXd::Constant(1, 1, v), {}, false);
    ConfidenceRadius radius;
    radius.beta = {tau * tau * v};
    radius.tau = {tau};
    radius.observables.resize(1);
    const Eigen::VectorXd c = Eigen::VectorXd::Constant(1, start);
    const auto p = project_feature(c, 0, moments, stats, radius);
    worst_member = std::max(worst_member, slab_distance(p.coefficients, 0, moments, stats) - std::sqrt(radius.beta[0]));
    const auto q = project_feature(p.coefficients, 0, moments, stats, radius);
    worst_idem = std::max(worst_idem, std::abs(q.coefficients(0) - p.coefficients(0)));
    const double step = p.coefficients(0) - start;
    worst_delta = std::max(worst_delta, std::abs(p.delta - v * step * step));
  }
  return {worst_member <= 1e-10 && worst_idem <= 1e-12 && worst_delta <= 1e-12,
          "membership excess " + num(worst_member) + ", idempotence " + num(worst_idem) + ", delta error " +
              num(worst_delta)};
}

Outcome risk_decrease_chain() {
  const auto model = sobolev_model(1.0, 32, {NoiseKind::Uniform, 0.5});
  TransductiveConfig config;
  config.variant = BoundVariant::TrBasicBounded;
  config.N = 64;
  config.k_test = 1;
  config.m = 32;
  config.epsilon = 0.1;
  config.replicates = 500;
  ExperimentOptions options;
  options.seed = 303;
  const auto report = transductive_experiment(model, config, options);
  const double threshold = 0.9 - 3.0 * std::sqrt(0.1 * 0.9 / 500.0);
  const double freq = report.chain_frequency.value_or(0.0);
  return {!report.partial && freq >= threshold,
          "chain frequency " + num(freq) + " (threshold " + num(threshold) + ", " +
              std::to_string(report.rows.size()) + " datasets)"};
}

Outcome coverage() {
  const auto model = sobolev_model(1.0, 64, {NoiseKind::Gaussian, 0.5});
  CoverageConfig config;
  ExperimentOptions options;
  options.seed = 404;
  const auto report = coverage_study(model, config, options);
  const double threshold = 0.75 - 3.0 * std::sqrt(0.25 * 0.75 / 500.0);
  const double cov = report.coverage.value_or(0.0);
  return {!report.partial && cov >= threshold, "coverage " + num(cov) + " (threshold " + num(threshold) + ")"};
}

Outcome sobolev_rate() {
  RateConfig config;
  const auto model = sobolev_model(1.0, 2 * config.grid.back(), {NoiseKind::Gaussian, 0.25});
  ExperimentOptions options;
  options.seed = 505;
  const auto report = rate_experiment(model, config, options);
  const double slope = report.slope.value_or(NAN);
  std::string medians;
  for (const auto& s : report.per_n) medians += (medians.empty() ? "" : " ") + num(s.median_mse);
  return {!report.partial && slope >= -0.83 && slope <= -0.50,
          "slope " + num(slope) + " +/- " + num(report.slope_stderr.value_or(NAN)) +
              " (target [-0.83, -0.5]); medians " + medians};
}

Outcome variant_ordering() {
  Rng rng(606);
  const std::size_t N = 256;
  const double noise = 0.05;
  std::size_t better = 0, total = 0;
  for (int rep = 0; rep < 5; ++rep) {
    Points x(2 * N, 1);
    Eigen::VectorXd y(2 * N);
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      x(i, 0) = rng.uniform();
      y(i) = 2.0 + rng.uniform(-noise, noise);
    }
    Points centers(16, 1);
    for (Eigen::Index c = 0; c < 16; ++c) centers(c, 0) = (static_cast<double>(c) + 0.5) / 16.0;
    const auto dict = FeatureDictionary::gaussian_kernel(centers, 0.5);
    const FeatureMatrix features = dict.evaluate(x);
    const auto moments = empirical_test_moments(features, N, 1);
    const auto stats = transductive_stats(features, y.head(N), moments, N);
    BoundSpec spec;
    spec.epsilon = 0.1;
    spec.B = 2.0 + noise;
    spec.variant = BoundVariant::TrBasicBounded;
    const auto basic = tr_basic_bounded(stats, spec);
    spec.variant = BoundVariant::TrVariance;
    const auto variance = tr_variance(stats, spec);
    for (std::size_t k = 0; k < stats.size(); ++k) {
      ++total;
      if (variance.beta[k] < basic.beta[k]) ++better;
    }
  }
  const double frac = static_cast<double>(better) / static_cast<double>(total);
  return {frac >= 0.9, "tr_variance smaller for " + std::to_string(better) + " of " + std::to_string(total) +
                           " features (" + num(frac) + ")"};
}

Outcome clipping_contraction() {
  Rng rng(707);
  std::size_t violations = 0;
  for (int t = 0; t < 1000; ++t) {
    const double B = 3.0 * rng.uniform();
    Eigen::VectorXd c(16), f(16);
    for (Eigen::Index i = 0; i < 16; ++i) {
      c(i) = 4.0 * rng.normal();
      f(i) = rng.uniform(-B, B);
    }
    if ((clip_coefficients(c, B) - f).norm() > (c - f).norm()) ++violations;
  }
  return {violations == 0, std::to_string(violations) + " violations in 1000 pairs"};
}

Outcome determinism() {
  const fs::path dir = fs::current_path() / "acceptance_work";
  fs::remove_all(dir);
  fs::create_directories(dir);
  const auto model = sobolev_model(1.0, 16, {NoiseKind::Gaussian, 0.2});
  const auto data = generate(model, 80, 0, 808);
  write_text((dir / "train.csv").string(), labeled_csv(data.train_x, data.train_y));

  auto run_cli = [](std::vector<std::string> args) {
    std::ostringstream out, err;
    const int code = cli::run(args, out, err);
    if (code != 0) throw std::runtime_error("command failed (" + std::to_string(code) + "): " + err.str());
  };
  auto fit = [&](const std::string& threads, const std::string& out) {
    run_cli({"fit", "--train", (dir / "train.csv").string(), "--dictionary", "gaussian_kernel", "--m", "80",
             "--centers", "train", "--gamma", "20", "--variant", "ind_exact", "--B", "2", "--sigma2", "0.04",
             "--epsilon", "0.1", "--mc-samples", "50000", "--seed", "9", "--threads", threads, "--out",
             (dir / out).string()});
    return read_text((dir / out / "model.json").string());
  };
  auto experiment = [&](const std::string& threads, const std::string& out) {
    run_cli({"experiment", "coverage", "--replicates", "120", "--N", "64", "--m", "32", "--seed", "9",
             "--threads", threads, "--out", (dir / out).string()});
    return read_text((dir / out / "report.json").string()) + read_text((dir / out / "report.csv").string());
  };
  const bool fit_same = fit("1", "fit1") == fit("4", "fit4");
  const bool exp_same = experiment("1", "exp1") == experiment("4", "exp4");
  return {fit_same && exp_same, std::string("fit artifacts ") + (fit_same ? "identical" : "differ") +
                                    ", experiment artifacts " + (exp_same ? "identical" : "differ")};
}

}  // namespace

int main() {
  report(1, "soft-threshold equivalence", 1.0, soft_threshold_equivalence);
  report(2, "projection geometry", 1.0, projection_geometry);
  report(3, "per-step risk decrease", 120.0, risk_decrease_chain);
  report(4, "simultaneous coverage", 180.0, coverage);
  report(5, "Sobolev rate slope", 600.0, sobolev_rate);
  report(6, "variance bound ordering", 60.0, variant_ordering);
  report(7, "clipping contraction", 1.0, clipping_contraction);
  report(8, "thread-count determinism", 0.0, determinism);
  std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criteria failed") << std::endl;
  return failures == 0 ? 0 : 1;
}
