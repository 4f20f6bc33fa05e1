#pragma once

#include "pacfs/moments.hpp"
#include "pacfs/types.hpp"

#include <Eigen/Dense>

#include <cstddef>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace pacfs {

// ---------------------------------------------------------------------------
// Per-feature sample statistics
// ---------------------------------------------------------------------------

enum class Setting { Inductive, Transductive };

/// Everything the confidence radii and the selector need about one feature.
/// Means are over the `n` training rows the feature is fitted on; sums over
/// the test block are kept raw because the transductive bounds mix 1/N and
/// 1/(kN) normalizations.
struct FeatureStats {
  double v = 0.0;             // normalizing second moment (design or test block)
  std::size_t n = 0;          // training rows used (N, or N-1 when leaving one out)
  double sq_mean = 0.0;       // (1/n) sum theta^2
  double cross_mean = 0.0;    // (1/n) sum theta Y
  double sq_y2_mean = 0.0;    // (1/n) sum theta^2 Y^2
  double product_var = 0.0;   // (1/n) sum (theta Y - cross_mean)^2
  double train_fourth = 0.0;        // sum over train of theta^4 Y^4
  double train_theta_fourth = 0.0;  // sum over train of theta^4
  double test_theta_sq = 0.0;       // sum over test of theta^2
  double test_theta_fourth = 0.0;   // sum over test of theta^4
  // Available only when the test labels are known (simulation).
  std::optional<double> test_cross;   // sum over test of theta Y
  std::optional<double> test_sq_y2;   // sum over test of theta^2 Y^2
  std::optional<double> test_fourth;  // sum over test of theta^4 Y^4
  std::optional<double> product_range;  // max - min of theta Y over all rows
  bool degenerate = false;

  /// C_k * alpha_hat_k, the center of the confidence slab.
  double center() const { return cross_mean / v; }
  /// Least-squares coefficient on the training rows (NaN if the column is zero there).
  double alpha_hat() const { return cross_mean / sq_mean; }
  /// Empirical-to-design second-moment ratio C_k.
  double normalization_ratio() const { return sq_mean / v; }
  /// alpha_2 of the test block, when test labels are known.
  std::optional<double> test_alpha() const;
};

struct SampleStats {
  Setting setting = Setting::Inductive;
  std::size_t train_size = 0;  // N
  std::size_t test_multiplier = 0;  // k (transductive only)
  std::size_t per_point = 0;   // m' for leave-one-out dictionaries, else 0
  bool test_labels = false;
  std::vector<FeatureStats> features;

  std::size_t size() const { return features.size(); }
};

/// Inductive statistics over N training rows; v comes from the design moments.
SampleStats inductive_stats(const FeatureMatrix& train, const Eigen::VectorXd& y, const DesignMoments& moments);

/// Leave-one-out statistics for point-anchored dictionaries: feature k is
/// fitted on every training row except `owners[k]`. `per_point` is m'.
SampleStats leave_one_out_stats(const FeatureMatrix& train, const Eigen::VectorXd& y,
                                const DesignMoments& moments, std::span<const std::size_t> owners,
                                std::size_t per_point);

/// Row index of each feature's anchor among the training points.
std::vector<std::size_t> anchor_owners(const Points& anchors, const Points& train);

/// Transductive statistics. `features` holds all (k+1)N rows, train first;
/// `moments` must be the empirical test moments of the same matrix.
SampleStats transductive_stats(const FeatureMatrix& features, const Eigen::VectorXd& train_y,
                               const DesignMoments& moments, std::size_t train_size,
                               const std::optional<Eigen::VectorXd>& test_y = std::nullopt);

// ---------------------------------------------------------------------------
// Confidence radii
// ---------------------------------------------------------------------------

enum class BoundVariant {
  IndExact,
  IndVarFirstOrder,
  IndSvm,
  TrBasicBounded,
  TrFirstOrder,
  TrVariance,
  TrGeneralK,
};

std::string_view to_string(BoundVariant variant);
BoundVariant bound_variant_from_string(std::string_view name);
bool is_transductive(BoundVariant variant);

/// Which expression is used where a bound involves test labels.
///  - Simulation: the test-label expression (labels must be known).
///  - Deployment: the majorant built from B, (b_Y, B_Y) or (beta_h, B_h).
///  - Auto: Deployment when its constants are configured, else Simulation
///    when labels are known, else a ConfigError.
enum class BoundMode { Auto, Simulation, Deployment };

std::string_view to_string(BoundMode mode);
BoundMode bound_mode_from_string(std::string_view name);

struct SubExponential {
  double beta = 1.0;  // exponent beta_h > 0
  double bound = 1.0; // B_h >= 1
};

struct BoundSpec {
  BoundVariant variant = BoundVariant::IndExact;
  double epsilon = 0.05;
  std::optional<double> B;       // |f| <= B (IndExact) or |Y| <= B (transductive)
  std::optional<double> sigma2;  // noise second moment (IndExact)
  /// Per-feature (beta_h, B_h) for TrGeneralK; one entry applies to all.
  std::vector<SubExponential> subexp;
  /// (b_Y, B_Y) with P exp(b_Y |Y|) <= B_Y, for TrFirstOrder deployment.
  std::optional<SubExponential> subexp_y;
  BoundMode mode = BoundMode::Auto;

  void validate() const;
};

/// Intermediate statistics recorded for one feature.
struct RadiusObservables {
  double second_moment_ratio = 0.0;  // (1/N sum theta^2 Y^2) / v
  double variance = 0.0;             // V_hat, V_1 or the variance estimator
  double fourth_moment = 0.0;        // (1/N) sum theta^4 Y^4 or its majorant
  double range = 0.0;                // S_id or its majorant
};

/// beta(eps, k) per feature, with the coefficient-space threshold
/// tau_k = sqrt(beta_k / v_k). Degenerate features get beta = tau = +inf.
struct ConfidenceRadius {
  BoundVariant variant = BoundVariant::IndExact;
  BoundMode mode = BoundMode::Deployment;  // resolved mode actually used
  std::vector<double> beta;
  std::vector<double> tau;
  std::vector<RadiusObservables> observables;

  std::size_t size() const { return beta.size(); }
};

ConfidenceRadius ind_exact(const SampleStats& stats, const BoundSpec& spec);
ConfidenceRadius ind_var_first_order(const SampleStats& stats, const BoundSpec& spec);
ConfidenceRadius ind_svm(const SampleStats& stats, const BoundSpec& spec);
ConfidenceRadius tr_basic_bounded(const SampleStats& stats, const BoundSpec& spec);
ConfidenceRadius tr_first_order(const SampleStats& stats, const BoundSpec& spec);
ConfidenceRadius tr_variance(const SampleStats& stats, const BoundSpec& spec);
ConfidenceRadius tr_general_k(const SampleStats& stats, const BoundSpec& spec);

/// Dispatches on spec.variant.
ConfidenceRadius compute_radius(const SampleStats& stats, const BoundSpec& spec);

/// 1 / (1 - 2 log(4m/eps) / N), the prefactor of the variance bound.
double variance_bound_prefactor(std::size_t N, std::size_t m, double epsilon);

}  // namespace pacfs
