#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "pacfs/error.hpp"
#include "pacfs/experiments.hpp"
#include "pacfs/rng.hpp"

#include <cmath>

using namespace pacfs;

namespace {

NoiseSpec gaussian(double scale) { return {NoiseKind::Gaussian, scale}; }
NoiseSpec uniform(double scale) { return {NoiseKind::Uniform, scale}; }

}  // namespace

TEST_CASE("noiseless constant truth") {
  const auto model = coefficient_model(DictionaryKind::Trigonometric, Eigen::VectorXd::Constant(1, 1.7), gaussian(0.0));
  const auto data = generate(model, 25, 0, 3);
  CHECK(data.train_y == Eigen::VectorXd::Constant(25, 1.7));
  CHECK(data.test_size() == 0);
  CHECK_FALSE(data.hidden_test_y.has_value());
  CHECK(model.sup_bound == doctest::Approx(1.7));
}

TEST_CASE("generation is deterministic in the seed") {
  const auto model = sobolev_model(1.0, 20, gaussian(0.5));
  const auto a = generate(model, 40, 2, 11);
  const auto b = generate(model, 40, 2, 11);
  const auto c = generate(model, 40, 2, 12);
  CHECK(a.train_x == b.train_x);
  CHECK(a.train_y == b.train_y);
  CHECK(a.test_x == b.test_x);
  CHECK(*a.hidden_test_y == *b.hidden_test_y);
  CHECK(a.train_y != c.train_y);
  CHECK(a.test_size() == 80);
  CHECK(((a.train_x.array() >= 0.0) && (a.train_x.array() < 1.0)).all());
}

TEST_CASE("noise moments") {
  Rng rng(5);
  const std::size_t n = 200000;
  for (const NoiseSpec& noise : {gaussian(0.7), uniform(0.7), NoiseSpec{NoiseKind::Rademacher, 0.7}}) {
    CAPTURE(to_string(noise.kind));
    double sum = 0.0, sq = 0.0, largest = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double e = noise.sample(rng);
      sum += e;
      sq += e * e;
      largest = std::max(largest, std::abs(e));
    }
    const double sd = std::sqrt(noise.second_moment() / static_cast<double>(n));
    CHECK(std::abs(sum / static_cast<double>(n)) < 5.0 * sd);
    CHECK(sq / static_cast<double>(n) == doctest::Approx(noise.second_moment()).epsilon(0.02));
    CHECK(largest <= noise.sup());
  }
  CHECK(gaussian(0.7).sup() == INFINITY);
  CHECK_FALSE(gaussian(0.7).bounded());
  CHECK(gaussian(0.0).bounded());
}

TEST_CASE("sobolev truth") {
  const auto model = sobolev_model(1.0, 6, gaussian(0.1));
  CHECK(model.truth(0) == doctest::Approx(1.0));
  CHECK(model.truth(1) == doctest::Approx(-std::pow(2.0, -1.51)));
  CHECK(model.truth(2) == doctest::Approx(std::pow(3.0, -1.51)));
  // Weighted square sum stays finite for the beta = 1 ellipsoid.
  const auto long_model = sobolev_model(1.0, 5000, gaussian(0.1));
  double weighted = 0.0;
  for (Eigen::Index k = 0; k < long_model.truth.size(); ++k) {
    weighted += std::pow(static_cast<double>(k + 1), 2.0) * long_model.truth(k) * long_model.truth(k);
  }
  CHECK(weighted < 100.0);
}

TEST_CASE("sup bound is honest") {
  for (std::uint64_t seed : {1, 2, 3}) {
    Rng rng(seed);
    Eigen::VectorXd c(9);
    for (Eigen::Index i = 0; i < 9; ++i) c(i) = rng.normal();
    const auto model = coefficient_model(DictionaryKind::Trigonometric, c, gaussian(0.0));
    const auto dict = FeatureDictionary::trigonometric(9);
    Points grid(100000, 1);
    for (Eigen::Index i = 0; i < grid.rows(); ++i) grid(i, 0) = rng.uniform();
    const double observed = (dict.evaluate(grid) * c).cwiseAbs().maxCoeff();
    CHECK(model.sup_bound >= observed);
    CHECK(model.sup_bound <= observed * 1.01 + 1e-3);
  }
  const auto besov = besov_model(0.75, 1.0, 6, gaussian(0.1));
  CHECK(besov.truth.size() == 64);
  Points grid(64, 1);
  for (Eigen::Index i = 0; i < 64; ++i) grid(i, 0) = (static_cast<double>(i) + 0.5) / 64.0;
  const double exact = (besov.basis_dictionary(64).evaluate(grid) * besov.truth).cwiseAbs().maxCoeff();
  CHECK(besov.sup_bound == doctest::Approx(exact).epsilon(1e-14));
}

TEST_CASE("exact excess risk") {
  const auto model = coefficient_model(DictionaryKind::Trigonometric, Eigen::Vector3d(2.0, 0.0, 0.0), gaussian(0.0));
  CHECK(exact_excess_risk(model, Eigen::Vector3d(2.0, 0.0, 0.0), DictionaryKind::Trigonometric) == 0.0);
  CHECK(exact_excess_risk(model, Eigen::Vector3d::Zero(), DictionaryKind::Trigonometric) == 4.0);
  CHECK(exact_excess_risk(model, Eigen::VectorXd::Zero(1), DictionaryKind::Trigonometric) == 4.0);
  CHECK_THROWS_AS(exact_excess_risk(model, Eigen::Vector3d::Zero(), DictionaryKind::Haar), ConfigError);
  CHECK(single_feature_excess(model, 0, 1.5) == 0.25);
  CHECK(single_feature_excess(model, 7, 1.5) == 2.25);

  SyntheticModel closed;
  closed.function = [](double x) { return x; };
  CHECK_THROWS_AS(exact_excess_risk(closed, Eigen::Vector3d::Zero(), DictionaryKind::Trigonometric), ConfigError);
}

TEST_CASE("exact risk agrees with Monte-Carlo") {
  Rng rng(21);
  Eigen::VectorXd truth(5), c(5);
  for (Eigen::Index i = 0; i < 5; ++i) {
    truth(i) = rng.normal();
    c(i) = rng.normal();
  }
  const auto model = coefficient_model(DictionaryKind::Trigonometric, truth, gaussian(0.0));
  const auto dict = FeatureDictionary::trigonometric(5);
  const Eigen::VectorXd diff = c - truth;
  const std::size_t n = 10'000'000;
  double sum = 0.0, sq = 0.0;
  Eigen::RowVectorXd row(5);
  Eigen::RowVectorXd point(1);
  for (std::size_t i = 0; i < n; ++i) {
    point(0) = rng.uniform();
    dict.evaluate_point(point, row);
    const double e = row.dot(diff);
    sum += e * e;
    sq += e * e * e * e;
  }
  const double mean = sum / static_cast<double>(n);
  const double se = std::sqrt((sq / static_cast<double>(n) - mean * mean) / static_cast<double>(n));
  CHECK(std::abs(exact_excess_risk(model, c, DictionaryKind::Trigonometric) - mean) <= 3.0 * se);
}

TEST_CASE("median and least squares") {
  CHECK(median({3.0, 1.0, 2.0}) == 2.0);
  CHECK(median({4.0, 1.0, 2.0, 3.0}) == 2.5);
  CHECK_THROWS_AS(median({}), ConfigError);
  const auto [slope, intercept] = ols_fit({1.0, 2.0, 3.0, 4.0}, {3.0, 5.0, 7.0, 9.0});
  CHECK(slope == doctest::Approx(2.0));
  CHECK(intercept == doctest::Approx(1.0));
  CHECK_THROWS_AS(ols_fit({1.0, 1.0}, {1.0, 2.0}), ConfigError);
  CHECK(dimension_for(DimensionRule::PowerOfTwo, 100) == 64);
  CHECK(dimension_for(DimensionRule::PowerOfTwo, 128) == 128);
  CHECK(dimension_for(DimensionRule::Identity, 100) == 100);
}

TEST_CASE("bound specs implied by a model") {
  const auto model = sobolev_model(1.0, 16, gaussian(0.5));
  ExperimentOptions options;
  const auto ind = model_bound_spec(model, BoundVariant::IndExact, 0.1, options);
  CHECK(*ind.B == model.sup_bound);
  CHECK(*ind.sigma2 == doctest::Approx(0.25));
  options.sigma_multiplier = 2.0;
  CHECK(*model_bound_spec(model, BoundVariant::IndExact, 0.1, options).sigma2 == doctest::Approx(1.0));
  options.sigma_multiplier = 1.0;
  CHECK_THROWS_AS(model_bound_spec(model, BoundVariant::TrBasicBounded, 0.1, options), ConfigError);
  options.mode = BoundMode::Simulation;
  CHECK_NOTHROW(model_bound_spec(model, BoundVariant::TrBasicBounded, 0.1, options));

  const auto bounded = sobolev_model(1.0, 16, uniform(0.5));
  const auto tr = model_bound_spec(bounded, BoundVariant::TrBasicBounded, 0.1, {});
  CHECK(*tr.B == doctest::Approx(bounded.sup_bound + 0.5));
}

TEST_CASE("coverage holds up to binomial slack") {
  const auto model = sobolev_model(1.0, 64, gaussian(0.5));
  CoverageConfig config;
  config.replicates = 200;
  ExperimentOptions options;
  options.seed = 4;
  const auto report = coverage_study(model, config, options);
  REQUIRE(report.coverage.has_value());
  CHECK(report.rows.size() == 200);
  CHECK(*report.coverage >= 0.75 - 3.0 * std::sqrt(0.25 * 0.75 / 200.0));
  CHECK(*report.coverage <= 1.0);

  config.replicates = 50;
  CHECK_THROWS_AS(coverage_study(model, config, options), ConfigError);
}

TEST_CASE("coverage is independent of the thread count") {
  const auto model = sobolev_model(1.0, 32, gaussian(0.5));
  CoverageConfig config;
  config.N = 64;
  config.m = 32;
  config.replicates = 100;
  ExperimentOptions options;
  options.seed = 9;
  const auto one = coverage_study(model, config, options);
  options.threads = 3;
  const auto three = coverage_study(model, config, options);
  REQUIRE(one.rows.size() == three.rows.size());
  for (std::size_t i = 0; i < one.rows.size(); ++i) {
    CHECK(one.rows[i].mse == three.rows[i].mse);
    CHECK(one.rows[i].seed == three.rows[i].seed);
    CHECK(one.rows[i].coverage_event == three.rows[i].coverage_event);
  }
}

TEST_CASE("noiseless transductive fits beat the zero predictor") {
  Eigen::VectorXd truth = Eigen::VectorXd::Zero(8);
  truth(1) = 1.0;
  truth(4) = -0.6;
  const auto model = coefficient_model(DictionaryKind::Trigonometric, truth, uniform(0.0));
  TransductiveConfig config;
  config.N = 512;
  config.m = 8;
  config.replicates = 30;
  ExperimentOptions options;
  options.seed = 2;
  const auto report = transductive_experiment(model, config, options);
  REQUIRE(report.rows.size() == 30);
  for (const auto& row : report.rows) {
    REQUIRE(row.zero_mse.has_value());
    CHECK(row.mse < *row.zero_mse);
    CHECK(row.chain_holds.value_or(false));
  }
  REQUIRE(report.chain_frequency.has_value());
  CHECK(*report.chain_frequency == 1.0);
}

TEST_CASE("noiseless rate experiment is consistent") {
  Eigen::VectorXd truth = Eigen::VectorXd::Zero(4);
  truth(0) = 0.5;
  truth(1) = 1.0;
  truth(3) = -0.5;
  const auto model = coefficient_model(DictionaryKind::Trigonometric, truth, gaussian(0.0));
  RateConfig config;
  config.grid = {64, 128, 256, 512, 1024};
  config.replicates = 5;
  ExperimentOptions options;
  options.seed = 1;
  const auto report = rate_experiment(model, config, options);
  REQUIRE(report.per_n.size() == 5);
  for (std::size_t i = 1; i < report.per_n.size(); ++i) {
    CHECK(report.per_n[i].median_mse <= report.per_n[i - 1].median_mse);
  }
  CHECK(report.per_n.back().median_mse < report.per_n.front().median_mse);
  REQUIRE(report.slope.has_value());
  CHECK(*report.slope < 0.0);
  CHECK(report.per_n[2].m == 256);
  CHECK(report.per_n[2].epsilon == doctest::Approx(1.0 / (256.0 * 256.0)));

  config.grid = {64, 128, 256};
  CHECK_THROWS_AS(rate_experiment(model, config, options), ConfigError);
  config.grid = {16, 64, 128, 256};
  CHECK_THROWS_AS(rate_experiment(model, config, options), ConfigError);
}

TEST_CASE("budget marks the report partial") {
  const auto model = sobolev_model(1.0, 64, gaussian(0.5));
  CoverageConfig config;
  config.replicates = 100000;
  ExperimentOptions options;
  options.budget_seconds = 0.05;
  const auto report = coverage_study(model, config, options);
  CHECK(report.partial);
  CHECK(report.rows.size() < 100000);
  CHECK(report.warnings.size() >= 1);
}
