#pragma once

#include "pacfs/bounds.hpp"
#include "pacfs/dictionary.hpp"
#include "pacfs/selector.hpp"
#include "pacfs/types.hpp"

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace pacfs {

class Rng;

enum class NoiseKind { Gaussian, Uniform, Rademacher };

std::string_view to_string(NoiseKind kind);
NoiseKind noise_kind_from_string(std::string_view name);

/// Centered noise: Gaussian(0, scale), Uniform(-scale, scale) or scale * Rademacher.
struct NoiseSpec {
  NoiseKind kind = NoiseKind::Gaussian;
  double scale = 0.0;

  double second_moment() const;
  /// Almost-sure bound on |eta|; +inf for Gaussian noise.
  double sup() const;
  bool bounded() const { return kind != NoiseKind::Gaussian || scale == 0.0; }
  double sample(Rng& rng) const;
};

enum class Regularity { None, Sobolev, Besov };

std::string_view to_string(Regularity regularity);

/// Y = f(X) + eta with X uniform on the basis domain.
///
/// The truth is a coefficient sequence in an orthonormal basis (trigonometric
/// or Haar). A closed-form `function` may replace it for data generation; the
/// exact-risk oracle then refuses to run.
struct SyntheticModel {
  DictionaryKind basis = DictionaryKind::Trigonometric;
  Eigen::VectorXd truth;
  double tail_energy = 0.0;  // sum of squared truth coefficients not stored
  std::function<double(double)> function;
  Interval design;
  NoiseSpec noise;
  double sup_bound = 0.0;  // B >= sup |f|
  Regularity regularity = Regularity::None;
  double smoothness = 0.0;
  double besov_p = 0.0;

  /// Basis with at least `m` functions in the model's ordering.
  FeatureDictionary basis_dictionary(std::size_t m) const;
  double f(double x) const;
};

/// f_k = scale * (-1)^(k+1) * k^(-(beta + 1/2) - 0.01), k = 1..length, trigonometric basis.
SyntheticModel sobolev_model(double beta, std::size_t length, NoiseSpec noise, double scale = 1.0);

/// One Haar wavelet per level with magnitude 2^(-j (s + 1/2 - 1/p)), levels 0..levels-1.
SyntheticModel besov_model(double s, double p, int levels, NoiseSpec noise, double scale = 1.0);

/// Model with the given truth coefficients in the trigonometric or Haar basis.
SyntheticModel coefficient_model(DictionaryKind basis, Eigen::VectorXd truth, NoiseSpec noise);

/// (k_test + 1) N i.i.d. draws; the labels of the last k_test N are hidden.
Dataset generate(const SyntheticModel& model, std::size_t N, std::size_t k_test, std::uint64_t seed);

/// ||theta_c - f||^2 under the uniform design, by Parseval.
double exact_excess_risk(const SyntheticModel& model, const Eigen::VectorXd& coefficients, DictionaryKind basis);

/// R(a theta_k) - R(f_k theta_k) for an orthonormal feature k.
double single_feature_excess(const SyntheticModel& model, std::size_t k, double a);

/// Sup bound of a finite expansion: exact for Haar, grid maximum plus a
/// Lipschitz margin for trigonometric series.
double sup_norm_bound(DictionaryKind basis, const Eigen::VectorXd& coefficients);

struct ExperimentOptions {
  std::uint64_t seed = 0;
  unsigned threads = 1;
  std::optional<double> budget_seconds;
  Schedule schedule = Schedule::GreedyMax;
  BoundMode mode = BoundMode::Auto;
  double sigma_multiplier = 1.0;
};

enum class DimensionRule { Identity, PowerOfTwo };

std::string_view to_string(DimensionRule rule);
DimensionRule dimension_rule_from_string(std::string_view name);
std::size_t dimension_for(DimensionRule rule, std::size_t N);

struct ReportRow {
  std::size_t N = 0;
  std::size_t replicate = 0;
  double mse = 0.0;
  std::optional<bool> coverage_event;
  std::uint64_t seed = 0;
  std::size_t selected = 0;  // n0
  std::optional<double> zero_mse;
  std::optional<bool> chain_holds;
};

struct NSummary {
  std::size_t N = 0;
  std::size_t m = 0;
  double epsilon = 0.0;
  double median_mse = 0.0;
  std::size_t replicates = 0;
};

struct ExperimentReport {
  std::string kind;
  std::vector<ReportRow> rows;
  std::vector<NSummary> per_n;
  std::optional<double> slope;
  std::optional<double> slope_stderr;
  std::optional<double> coverage;
  std::optional<double> chain_frequency;
  std::optional<double> mean_test_mse;
  std::optional<double> mean_zero_mse;
  bool partial = false;
  double runtime_seconds = 0.0;
  std::vector<std::string> warnings;
};

struct RateConfig {
  std::vector<std::size_t> grid{64, 128, 256, 512, 1024, 2048, 4096};
  std::size_t replicates = 20;
  double epsilon_exponent = 2.0;  // epsilon = N^-exponent
  DimensionRule m_rule = DimensionRule::Identity;
};

/// Fits IndExact with the model's B and sigma, clips at B and records the
/// exact excess risk; the slope is fitted to log(median mse) against log(N / log N).
ExperimentReport rate_experiment(const SyntheticModel& model, const RateConfig& config,
                                 const ExperimentOptions& options);

struct CoverageConfig {
  BoundVariant variant = BoundVariant::IndExact;
  std::size_t N = 128;
  std::size_t m = 64;
  double epsilon = 0.25;
  std::size_t replicates = 500;
  std::size_t k_test = 1;  // transductive variants only
};

/// Fraction of replicates where the bound holds for every feature at once.
ExperimentReport coverage_study(const SyntheticModel& model, const CoverageConfig& config,
                                const ExperimentOptions& options);

struct TransductiveConfig {
  BoundVariant variant = BoundVariant::TrBasicBounded;
  std::size_t N = 64;
  std::size_t k_test = 1;
  std::size_t m = 32;
  double epsilon = 0.1;
  std::size_t replicates = 100;
};

/// Fits on the train block, predicts the test block and checks the per-step
/// risk decrease on the hidden labels.
ExperimentReport transductive_experiment(const SyntheticModel& model, const TransductiveConfig& config,
                                         const ExperimentOptions& options);

/// Bound specification implied by a model's constants.
BoundSpec model_bound_spec(const SyntheticModel& model, BoundVariant variant, double epsilon,
                           const ExperimentOptions& options);

/// Median of a nonempty vector (mean of the middle pair for even sizes).
double median(std::vector<double> values);

/// OLS slope and intercept of y on x.
std::pair<double, double> ols_fit(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace pacfs
