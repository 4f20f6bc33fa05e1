#pragma once

#include "pacfs/bounds.hpp"
#include "pacfs/dictionary.hpp"
#include "pacfs/moments.hpp"
#include "pacfs/types.hpp"

#include <Eigen/Dense>

#include <cstddef>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace pacfs {

enum class Schedule { GreedyMax, RoundRobin };

std::string_view to_string(Schedule schedule);
Schedule schedule_from_string(std::string_view name);

struct IterationRecord {
  std::size_t step = 0;     // 1-based
  std::size_t feature = 0;  // 0-based index k(n)
  double gamma = 0.0;
  double tau = 0.0;
  double delta = 0.0;
  double update = 0.0;
};

struct SelectionOptions {
  Schedule schedule = Schedule::GreedyMax;
  std::optional<double> kappa;  // defaults to 1/(2N)
  std::optional<Eigen::VectorXd> warm_start;
  std::size_t max_iterations = 1'000'000;
};

struct SelectionModel {
  Eigen::VectorXd coefficients;
  std::shared_ptr<const FeatureDictionary> dictionary;
  BoundVariant variant = BoundVariant::IndExact;
  double epsilon = 0.0;
  double kappa = 0.0;
  Schedule schedule = Schedule::GreedyMax;
  std::vector<IterationRecord> trace;
  std::vector<std::string> warnings;

  std::size_t stopped_at() const { return trace.size(); }
  std::size_t size() const { return static_cast<std::size_t>(coefficients.size()); }
};

struct SoftThresholdStep {
  double increment = 0.0;
  double delta = 0.0;
};

/// sgn(gamma)(|gamma| - tau)_+ and v (|gamma| - tau)_+^2.
SoftThresholdStep soft_threshold_step(double gamma, double tau, double v);

/// gamma_k = C_k alpha_hat_k - (G c)_k / v_k.
double residual_gamma(const Eigen::VectorXd& c, std::size_t k, const DesignMoments& moments,
                      const SampleStats& stats);

/// |<theta_c - C_k alpha_hat_k theta_k, theta_k>| / ||theta_k||, to be compared with sqrt(beta).
double slab_distance(const Eigen::VectorXd& c, std::size_t k, const DesignMoments& moments,
                     const SampleStats& stats);

struct Projection {
  Eigen::VectorXd coefficients;
  double delta = 0.0;
};

/// Orthogonal projection of theta_c onto the confidence slab of feature k.
Projection project_feature(const Eigen::VectorXd& c, std::size_t k, const DesignMoments& moments,
                           const SampleStats& stats, const ConfidenceRadius& radius);

/// Iterated slab projections from the warm start (default 0) until the best
/// available squared movement drops below kappa.
SelectionModel run_selection(const SampleStats& stats, const DesignMoments& moments,
                             const ConfidenceRadius& radius, const SelectionOptions& options);

Eigen::VectorXd predict(const FeatureDictionary& dict, const Eigen::VectorXd& coefficients, const Points& points);
Eigen::VectorXd predict(const SelectionModel& model, const Points& points);

/// Clamps every |c_k| to B. Requires an identity Gram.
SelectionModel clip_coefficients(const SelectionModel& model, const DesignMoments& moments, double B);
Eigen::VectorXd clip_coefficients(const Eigen::VectorXd& c, double B);

/// Everything produced by one fit.
struct Fit {
  std::shared_ptr<const DesignMoments> moments;
  SampleStats stats;
  ConfidenceRadius radius;
  SelectionModel model;
};

/// Inductive pipeline: evaluates the dictionary on the training points,
/// builds statistics (leave-one-out ones for ind_svm) and runs the selector.
Fit fit_inductive(std::shared_ptr<const FeatureDictionary> dict, const Points& train_x,
                  const Eigen::VectorXd& train_y, std::shared_ptr<const DesignMoments> moments,
                  const BoundSpec& spec,
                  const SelectionOptions& options);

/// Transductive pipeline with empirical test moments. The hidden test labels
/// of `data`, if present, feed only simulation-mode bounds.
Fit fit_transductive(std::shared_ptr<const FeatureDictionary> dict, const Dataset& data, const BoundSpec& spec,
                     const SelectionOptions& options);

}  // namespace pacfs
