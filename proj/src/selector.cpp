#include "pacfs/selector.hpp"

#include "pacfs/error.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <string>

namespace pacfs {

std::string_view to_string(Schedule schedule) {
  switch (schedule) {
    case Schedule::GreedyMax: return "greedy_max";
    case Schedule::RoundRobin: return "round_robin";
  }
  return "unknown";
}

Schedule schedule_from_string(std::string_view name) {
  if (name == "greedy_max") return Schedule::GreedyMax;
  if (name == "round_robin") return Schedule::RoundRobin;
  throw ConfigError("unknown schedule '" + std::string(name) + "' (expected greedy_max or round_robin)");
}

SoftThresholdStep soft_threshold_step(double gamma, double tau, double v) {
  const double excess = std::abs(gamma) - tau;
  if (!(excess > 0.0)) return {};
  return {std::copysign(excess, gamma), v * excess * excess};
}

double residual_gamma(const Eigen::VectorXd& c, std::size_t k, const DesignMoments& moments,
                      const SampleStats& stats) {
  const auto& f = stats.features.at(k);
  return f.center() - moments.gram.col(static_cast<Eigen::Index>(k)).dot(c) / f.v;
}

double slab_distance(const Eigen::VectorXd& c, std::size_t k, const DesignMoments& moments,
                     const SampleStats& stats) {
  const auto& f = stats.features.at(k);
  return std::abs(residual_gamma(c, k, moments, stats)) * std::sqrt(f.v);
}

Projection project_feature(const Eigen::VectorXd& c, std::size_t k, const DesignMoments& moments,
                           const SampleStats& stats, const ConfidenceRadius& radius) {
  Projection out{c, 0.0};
  if (stats.features.at(k).degenerate) return out;
  const auto step = soft_threshold_step(residual_gamma(c, k, moments, stats), radius.tau.at(k),
                                        stats.features[k].v);
  out.coefficients(static_cast<Eigen::Index>(k)) += step.increment;
  out.delta = step.delta;
  return out;
}

namespace {

class SelectionState {
 public:
  SelectionState(const SampleStats& stats, const DesignMoments& moments, const ConfidenceRadius& radius,
                 Eigen::VectorXd start)
      : stats_(stats), moments_(moments), radius_(radius), c_(std::move(start)), g_(moments.gram * c_) {}

  IterationRecord probe(std::size_t k) const {
    IterationRecord r;
    r.feature = k;
    const auto& f = stats_.features[k];
    if (f.degenerate) return r;
    r.gamma = f.center() - g_(static_cast<Eigen::Index>(k)) / f.v;
    r.tau = radius_.tau[k];
    const auto step = soft_threshold_step(r.gamma, r.tau, f.v);
    r.delta = step.delta;
    r.update = step.increment;
    return r;
  }

  void apply(const IterationRecord& r) {
    const auto k = static_cast<Eigen::Index>(r.feature);
    c_(k) += r.update;
    g_.noalias() += r.update * moments_.gram.col(k);
  }

  Eigen::VectorXd& coefficients() { return c_; }

 private:
  const SampleStats& stats_;
  const DesignMoments& moments_;
  const ConfidenceRadius& radius_;
  Eigen::VectorXd c_;
  Eigen::VectorXd g_;
};

}  // namespace

SelectionModel run_selection(const SampleStats& stats, const DesignMoments& moments,
                             const ConfidenceRadius& radius, const SelectionOptions& options) {
  const std::size_t m = stats.size();
  if (moments.size() != m || radius.size() != m) {
    throw ConfigError("statistics, moments and radii disagree on the number of features");
  }
  if (stats.train_size == 0) throw DataError("no training rows");
  const double N = static_cast<double>(stats.train_size);
  const double kappa = options.kappa.value_or(1.0 / (2.0 * N));
  if (!(kappa > 0.0 && kappa < 1.0 / N)) {
    throw ConfigError("kappa must lie in (0, 1/N) = (0, " + std::to_string(1.0 / N) + ")");
  }

  SelectionModel model;
  model.variant = radius.variant;
  model.kappa = kappa;
  model.schedule = options.schedule;

  Eigen::VectorXd start = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(m));
  if (options.warm_start) {
    if (static_cast<std::size_t>(options.warm_start->size()) != m) {
      throw ConfigError("warm start has the wrong number of coefficients");
    }
    start = *options.warm_start;
  }

  const bool all_degenerate = std::all_of(stats.features.begin(), stats.features.end(),
                                          [](const FeatureStats& f) { return f.degenerate; });
  if (all_degenerate) {
    model.coefficients = start;
    model.warnings.push_back("every feature is degenerate; returning the starting point");
    return model;
  }

  SelectionState state(stats, moments, radius, std::move(start));
  auto record = [&](IterationRecord r) {
    if (model.trace.size() >= options.max_iterations) {
      throw NumericalError("selection did not terminate within " + std::to_string(options.max_iterations) +
                           " iterations");
    }
    state.apply(r);
    r.step = model.trace.size() + 1;
    model.trace.push_back(r);
  };

  if (options.schedule == Schedule::GreedyMax) {
    for (;;) {
      IterationRecord best = state.probe(0);
      for (std::size_t k = 1; k < m; ++k) {
        IterationRecord r = state.probe(k);
        if (r.delta > best.delta) best = r;
      }
      if (!(best.delta >= kappa)) break;
      record(best);
    }
  } else {
    for (std::size_t pass = 0;; ++pass) {
      if (pass >= options.max_iterations) {
        throw NumericalError("selection did not terminate within " + std::to_string(options.max_iterations) +
                             " passes");
      }
      double largest = 0.0;
      for (std::size_t k = 0; k < m; ++k) {
        const IterationRecord r = state.probe(k);
        largest = std::max(largest, r.delta);
        if (r.delta > 0.0) record(r);
      }
      if (largest < kappa) break;
    }
  }
  model.coefficients = std::move(state.coefficients());
  return model;
}

Eigen::VectorXd predict(const FeatureDictionary& dict, const Eigen::VectorXd& coefficients, const Points& points) {
  if (static_cast<std::size_t>(coefficients.size()) != dict.size()) {
    throw ConfigError("coefficient count does not match the dictionary");
  }
  if (points.rows() == 0) return Eigen::VectorXd(0);
  return dict.evaluate(points) * coefficients;
}

Eigen::VectorXd predict(const SelectionModel& model, const Points& points) {
  if (!model.dictionary) throw ConfigError("model has no dictionary attached");
  return predict(*model.dictionary, model.coefficients, points);
}

Eigen::VectorXd clip_coefficients(const Eigen::VectorXd& c, double B) {
  if (!(B >= 0.0)) throw ConfigError("clipping level B must be nonnegative");
  return c.cwiseMax(-B).cwiseMin(B);
}

SelectionModel clip_coefficients(const SelectionModel& model, const DesignMoments& moments, double B) {
  const auto m = moments.gram.rows();
  if (m != model.coefficients.size() ||
      (moments.gram - Eigen::MatrixXd::Identity(m, m)).cwiseAbs().maxCoeff() > 1e-9) {
    throw ConfigError("clipping needs orthonormal features (identity Gram)");
  }
  SelectionModel out = model;
  out.coefficients = clip_coefficients(model.coefficients, B);
  return out;
}

Fit fit_inductive(std::shared_ptr<const FeatureDictionary> dict, const Points& train_x,
                  const Eigen::VectorXd& train_y, std::shared_ptr<const DesignMoments> moments,
                  const BoundSpec& spec, const SelectionOptions& options) {
  if (!dict || !moments) throw ConfigError("no dictionary or moments");
  if (is_transductive(spec.variant)) {
    throw ConfigError("bound variant " + std::string(to_string(spec.variant)) + " is transductive");
  }
  if (moments->size() != dict->size()) throw ConfigError("moments do not match the dictionary size");
  const FeatureMatrix features = dict->evaluate(train_x);
  Fit fit{std::move(moments), {}, {}, {}};
  if (spec.variant == BoundVariant::IndSvm) {
    const auto owners = anchor_owners(dict->anchors(), train_x);
    std::map<std::size_t, std::size_t> counts;
    std::size_t per_point = 0;
    for (auto o : owners) per_point = std::max(per_point, ++counts[o]);
    fit.stats = leave_one_out_stats(features, train_y, *fit.moments, owners, per_point);
  } else {
    fit.stats = inductive_stats(features, train_y, *fit.moments);
  }
  fit.radius = compute_radius(fit.stats, spec);
  fit.model = run_selection(fit.stats, *fit.moments, fit.radius, options);
  fit.model.dictionary = std::move(dict);
  fit.model.epsilon = spec.epsilon;
  return fit;
}

Fit fit_transductive(std::shared_ptr<const FeatureDictionary> dict, const Dataset& data, const BoundSpec& spec,
                     const SelectionOptions& options) {
  if (!dict) throw ConfigError("no dictionary");
  if (!is_transductive(spec.variant)) {
    throw ConfigError("bound variant " + std::string(to_string(spec.variant)) + " is inductive");
  }
  const std::size_t N = data.train_size();
  if (N == 0) throw DataError("no training rows");
  if (data.test_size() == 0 || data.test_size() % N != 0) {
    throw DataError("transductive fit needs k*N test rows (N = " + std::to_string(N) +
                    ", test rows = " + std::to_string(data.test_size()) + ")");
  }
  if (data.test_x.cols() != data.train_x.cols()) throw DataError("train and test dimensions differ");
  const std::size_t k = data.test_size() / N;
  const FeatureMatrix features = dict->evaluate(data.all_points());
  Fit fit{std::make_shared<const DesignMoments>(empirical_test_moments(features, N, k)), {}, {}, {}};
  fit.stats = transductive_stats(features, data.train_y, *fit.moments, N, data.hidden_test_y);
  fit.radius = compute_radius(fit.stats, spec);
  fit.model = run_selection(fit.stats, *fit.moments, fit.radius, options);
  fit.model.dictionary = std::move(dict);
  fit.model.epsilon = spec.epsilon;
  return fit;
}

}  // namespace pacfs
