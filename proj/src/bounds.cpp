#include "pacfs/bounds.hpp"

#include "pacfs/error.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <string>

namespace pacfs {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

ConfidenceRadius start(const SampleStats& stats, BoundVariant variant, BoundMode mode) {
  ConfidenceRadius r;
  r.variant = variant;
  r.mode = mode;
  r.beta.assign(stats.size(), kInf);
  r.tau.assign(stats.size(), kInf);
  r.observables.resize(stats.size());
  return r;
}

void set_beta(ConfidenceRadius& r, const FeatureStats& f, std::size_t k, double beta) {
  if (f.degenerate) return;
  r.beta[k] = beta;
  r.tau[k] = std::sqrt(beta / f.v);
}

void require_setting(const SampleStats& stats, Setting setting, BoundVariant variant) {
  if (stats.setting != setting) {
    throw ConfigError("bound variant " + std::string(to_string(variant)) + " is for the " +
                      (setting == Setting::Inductive ? "inductive" : "transductive") + " setting");
  }
}

void require_unit_split(const SampleStats& stats, BoundVariant variant) {
  if (stats.test_multiplier != 1) {
    throw ConfigError("bound variant " + std::string(to_string(variant)) +
                      " needs as many test points as training points (k = 1); use tr_general_k");
  }
}

BoundMode resolve_mode(const BoundSpec& spec, bool has_constants, bool has_labels, const char* constants) {
  const std::string name(to_string(spec.variant));
  switch (spec.mode) {
    case BoundMode::Simulation:
      if (!has_labels) throw ConfigError(name + " in simulation mode needs the hidden test labels");
      return BoundMode::Simulation;
    case BoundMode::Deployment:
      if (!has_constants) throw ConfigError(name + " in deployment mode needs " + constants);
      return BoundMode::Deployment;
    case BoundMode::Auto:
      if (has_constants) return BoundMode::Deployment;
      if (has_labels) return BoundMode::Simulation;
      throw ConfigError(name + " needs " + constants + " (or known test labels in simulation)");
  }
  return BoundMode::Deployment;
}

double log_term(double numerator, double epsilon) { return std::log(numerator / epsilon); }

}  // namespace

std::string_view to_string(BoundVariant variant) {
  switch (variant) {
    case BoundVariant::IndExact: return "ind_exact";
    case BoundVariant::IndVarFirstOrder: return "ind_var_first_order";
    case BoundVariant::IndSvm: return "ind_svm";
    case BoundVariant::TrBasicBounded: return "tr_basic_bounded";
    case BoundVariant::TrFirstOrder: return "tr_first_order";
    case BoundVariant::TrVariance: return "tr_variance";
    case BoundVariant::TrGeneralK: return "tr_general_k";
  }
  return "unknown";
}

BoundVariant bound_variant_from_string(std::string_view name) {
  for (auto v : {BoundVariant::IndExact, BoundVariant::IndVarFirstOrder, BoundVariant::IndSvm,
                 BoundVariant::TrBasicBounded, BoundVariant::TrFirstOrder, BoundVariant::TrVariance,
                 BoundVariant::TrGeneralK}) {
    if (to_string(v) == name) return v;
  }
  throw ConfigError("unknown bound variant '" + std::string(name) + "'");
}

bool is_transductive(BoundVariant variant) {
  return variant == BoundVariant::TrBasicBounded || variant == BoundVariant::TrFirstOrder ||
         variant == BoundVariant::TrVariance || variant == BoundVariant::TrGeneralK;
}

std::string_view to_string(BoundMode mode) {
  switch (mode) {
    case BoundMode::Auto: return "auto";
    case BoundMode::Simulation: return "simulation";
    case BoundMode::Deployment: return "deployment";
  }
  return "unknown";
}

BoundMode bound_mode_from_string(std::string_view name) {
  for (auto m : {BoundMode::Auto, BoundMode::Simulation, BoundMode::Deployment}) {
    if (to_string(m) == name) return m;
  }
  throw ConfigError("unknown bound mode '" + std::string(name) + "'");
}

void BoundSpec::validate() const {
  if (!(epsilon > 0.0 && epsilon < 1.0)) throw ConfigError("epsilon must lie in (0, 1)");
  if (B && !(*B >= 0.0)) throw ConfigError("B must be nonnegative");
  if (sigma2 && !(*sigma2 >= 0.0)) throw ConfigError("sigma2 must be nonnegative");
  for (const auto& s : subexp) {
    if (!(s.beta > 0.0) || !(s.bound >= 1.0)) throw ConfigError("subexp constants need beta_h > 0 and B_h >= 1");
  }
  if (subexp_y && (!(subexp_y->beta > 0.0) || !(subexp_y->bound >= 1.0))) {
    throw ConfigError("subexp_y constants need b_Y > 0 and B_Y >= 1");
  }
}

double variance_bound_prefactor(std::size_t N, std::size_t m, double epsilon) {
  return 1.0 / (1.0 - 2.0 * log_term(4.0 * static_cast<double>(m), epsilon) / static_cast<double>(N));
}

ConfidenceRadius ind_exact(const SampleStats& stats, const BoundSpec& spec) {
  spec.validate();
  require_setting(stats, Setting::Inductive, BoundVariant::IndExact);
  if (!spec.B) throw ConfigError("ind_exact needs B (bound on |f|)");
  if (!spec.sigma2) throw ConfigError("ind_exact needs sigma2 (noise second moment)");
  const double m = static_cast<double>(stats.size());
  auto r = start(stats, BoundVariant::IndExact, BoundMode::Deployment);
  for (std::size_t k = 0; k < stats.size(); ++k) {
    const auto& f = stats.features[k];
    const double N = static_cast<double>(f.n);
    const double ratio = f.sq_y2_mean / f.v;
    r.observables[k].second_moment_ratio = ratio;
    const double beta = (4.0 * (1.0 + log_term(2.0 * m, spec.epsilon)) / N) *
                        (ratio + (*spec.B) * (*spec.B) + *spec.sigma2);
    set_beta(r, f, k, beta);
  }
  return r;
}

ConfidenceRadius ind_var_first_order(const SampleStats& stats, const BoundSpec& spec) {
  spec.validate();
  require_setting(stats, Setting::Inductive, BoundVariant::IndVarFirstOrder);
  if (stats.train_size < 2) throw DataError("ind_var_first_order needs N >= 2");
  const double m = static_cast<double>(stats.size());
  auto r = start(stats, BoundVariant::IndVarFirstOrder, BoundMode::Deployment);
  for (std::size_t k = 0; k < stats.size(); ++k) {
    const auto& f = stats.features[k];
    const double N = static_cast<double>(f.n);
    r.observables[k].second_moment_ratio = f.sq_y2_mean / f.v;
    r.observables[k].variance = f.product_var;
    set_beta(r, f, k, (2.0 * log_term(4.0 * m, spec.epsilon) / N) * f.product_var / f.v);
  }
  return r;
}

ConfidenceRadius ind_svm(const SampleStats& stats, const BoundSpec& spec) {
  spec.validate();
  require_setting(stats, Setting::Inductive, BoundVariant::IndSvm);
  if (stats.per_point == 0) throw ConfigError("ind_svm needs leave-one-out statistics (point-anchored features)");
  if (stats.train_size < 2) throw DataError("ind_svm needs N >= 2 (no leave-one-out sample)");
  const double N = static_cast<double>(stats.train_size);
  const double mprime = static_cast<double>(stats.per_point);
  auto r = start(stats, BoundVariant::IndSvm, BoundMode::Deployment);
  for (std::size_t k = 0; k < stats.size(); ++k) {
    const auto& f = stats.features[k];
    r.observables[k].second_moment_ratio = f.sq_y2_mean / f.v;
    r.observables[k].variance = f.product_var;
    set_beta(r, f, k, (2.0 * log_term(2.0 * N * mprime, spec.epsilon) / (N - 1.0)) * f.product_var / f.v);
  }
  return r;
}

ConfidenceRadius tr_basic_bounded(const SampleStats& stats, const BoundSpec& spec) {
  spec.validate();
  require_setting(stats, Setting::Transductive, BoundVariant::TrBasicBounded);
  require_unit_split(stats, BoundVariant::TrBasicBounded);
  const BoundMode mode = resolve_mode(spec, spec.B.has_value(), stats.test_labels, "B (bound on |Y|)");
  const double m = static_cast<double>(stats.size());
  const double N = static_cast<double>(stats.train_size);
  const double log2m = log_term(2.0 * m, spec.epsilon);
  auto r = start(stats, BoundVariant::TrBasicBounded, mode);
  for (std::size_t k = 0; k < stats.size(); ++k) {
    const auto& f = stats.features[k];
    const double ratio = f.sq_y2_mean / f.v;
    r.observables[k].second_moment_ratio = ratio;
    double bracket = 0.0;
    if (mode == BoundMode::Deployment) {
      bracket = (*spec.B) * (*spec.B) + ratio;
    } else {
      bracket = ((f.sq_y2_mean * N + *f.test_sq_y2) / N) / f.v;
    }
    set_beta(r, f, k, 4.0 * bracket * log2m / N);
  }
  return r;
}

ConfidenceRadius tr_first_order(const SampleStats& stats, const BoundSpec& spec) {
  spec.validate();
  require_setting(stats, Setting::Transductive, BoundVariant::TrFirstOrder);
  require_unit_split(stats, BoundVariant::TrFirstOrder);
  const BoundMode mode =
      resolve_mode(spec, spec.subexp_y.has_value(), stats.test_labels, "subexp_y constants (b_Y, B_Y)");
  const double m = static_cast<double>(stats.size());
  const double N = static_cast<double>(stats.train_size);
  auto r = start(stats, BoundVariant::TrFirstOrder, mode);
  for (std::size_t k = 0; k < stats.size(); ++k) {
    const auto& f = stats.features[k];
    const double ratio = f.sq_y2_mean / f.v;
    r.observables[k].second_moment_ratio = ratio;
    double beta = 0.0;
    if (mode == BoundMode::Simulation) {
      const double fourth = (f.train_fourth + *f.test_fourth) / N;
      r.observables[k].fourth_moment = fourth;
      beta = (8.0 * log_term(4.0 * m, spec.epsilon) / N) *
             (ratio + std::sqrt(fourth * log_term(2.0 * m, spec.epsilon) / (2.0 * N)));
    } else {
      const double b = spec.subexp_y->beta;
      const double sup_log = log_term(4.0 * N * spec.subexp_y->bound, spec.epsilon);
      const double theta_fourth = (f.train_theta_fourth + f.test_theta_fourth) / N;
      r.observables[k].fourth_moment = theta_fourth * std::pow(sup_log / b, 4.0);
      beta = (8.0 * log_term(8.0 * m, spec.epsilon) / N) *
             (ratio + std::sqrt(theta_fourth * log_term(4.0 * m, spec.epsilon) * std::pow(sup_log, 4.0) /
                                (2.0 * N * std::pow(b, 4.0))));
    }
    set_beta(r, f, k, beta);
  }
  return r;
}

ConfidenceRadius tr_variance(const SampleStats& stats, const BoundSpec& spec) {
  spec.validate();
  require_setting(stats, Setting::Transductive, BoundVariant::TrVariance);
  require_unit_split(stats, BoundVariant::TrVariance);
  const double m = static_cast<double>(stats.size());
  const double N = static_cast<double>(stats.train_size);
  const double log4m = log_term(4.0 * m, spec.epsilon);
  if (!(N > 2.0 * log4m)) {
    throw ConfigError("variance bound inapplicable at this N/epsilon (needs N > 2 log(4m/epsilon))");
  }
  const BoundMode mode = resolve_mode(spec, spec.B.has_value(), stats.test_labels, "B (bound on |Y|)");
  const double prefactor = variance_bound_prefactor(stats.train_size, stats.size(), spec.epsilon);
  const double third_order = 2.0 * (2.0 + std::numbers::sqrt2) * std::pow(log_term(6.0 * m, spec.epsilon) / N, 1.5);
  auto r = start(stats, BoundVariant::TrVariance, mode);
  for (std::size_t k = 0; k < stats.size(); ++k) {
    const auto& f = stats.features[k];
    r.observables[k].second_moment_ratio = f.sq_y2_mean / f.v;
    r.observables[k].variance = f.product_var;
    double fourth = 0.0;
    if (mode == BoundMode::Simulation) {
      fourth = (f.train_fourth + *f.test_fourth) / N;
    } else {
      const double b4 = std::pow(*spec.B, 4.0);
      fourth = (f.train_fourth + b4 * f.test_theta_fourth) / N;
    }
    r.observables[k].fourth_moment = fourth;
    const double beta = prefactor * (4.0 * log4m / N) * f.product_var / f.v +
                        prefactor * third_order * std::sqrt(fourth) / f.v;
    set_beta(r, f, k, beta);
  }
  return r;
}

ConfidenceRadius tr_general_k(const SampleStats& stats, const BoundSpec& spec) {
  spec.validate();
  require_setting(stats, Setting::Transductive, BoundVariant::TrGeneralK);
  if (stats.test_multiplier < 1) throw ConfigError("tr_general_k needs k >= 1");
  if (!spec.subexp.empty() && spec.subexp.size() != 1 && spec.subexp.size() != stats.size()) {
    throw ConfigError("tr_general_k needs one (beta_h, B_h) pair or one per feature");
  }
  const BoundMode mode =
      resolve_mode(spec, !spec.subexp.empty(), stats.test_labels, "subexp constants (beta_h, B_h)");
  const double m = static_cast<double>(stats.size());
  const double N = static_cast<double>(stats.train_size);
  const double k = static_cast<double>(stats.test_multiplier);
  const double log4m = log_term(4.0 * m, spec.epsilon);
  const double outer = (1.0 + 1.0 / k) * (1.0 + 1.0 / k);
  auto r = start(stats, BoundVariant::TrGeneralK, mode);
  for (std::size_t h = 0; h < stats.size(); ++h) {
    const auto& f = stats.features[h];
    const double var = f.product_var;
    double range = 0.0;
    if (mode == BoundMode::Simulation) {
      range = *f.product_range;
    } else {
      const auto& c = spec.subexp.size() == 1 ? spec.subexp.front() : spec.subexp[h];
      range = (2.0 / c.beta) * log_term(4.0 * (k + 1.0) * m * N * c.bound, spec.epsilon);
    }
    r.observables[h].variance = var;
    r.observables[h].range = range;
    double bracket = 2.0 * var * log4m / N;
    if (range > 0.0) {
      if (var > 0.0) {
        bracket += 2.0 * std::pow(log4m, 1.5) * std::pow(range, 3.0) / (3.0 * std::pow(N, 1.5) * std::sqrt(var));
        bracket += log4m * log4m * std::pow(range, 6.0) / (9.0 * N * N * var * var);
      } else {
        bracket = kInf;
      }
    }
    set_beta(r, f, h, outer / f.v * bracket);
  }
  return r;
}

ConfidenceRadius compute_radius(const SampleStats& stats, const BoundSpec& spec) {
  switch (spec.variant) {
    case BoundVariant::IndExact: return ind_exact(stats, spec);
    case BoundVariant::IndVarFirstOrder: return ind_var_first_order(stats, spec);
    case BoundVariant::IndSvm: return ind_svm(stats, spec);
    case BoundVariant::TrBasicBounded: return tr_basic_bounded(stats, spec);
    case BoundVariant::TrFirstOrder: return tr_first_order(stats, spec);
    case BoundVariant::TrVariance: return tr_variance(stats, spec);
    case BoundVariant::TrGeneralK: return tr_general_k(stats, spec);
  }
  throw ConfigError("unknown bound variant");
}

}  // namespace pacfs
