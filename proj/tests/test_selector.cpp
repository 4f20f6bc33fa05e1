#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "pacfs/error.hpp"
#include "pacfs/selector.hpp"

#include <cmath>
#include <random>

using namespace pacfs;

namespace {

// One inductive feature with v and center chosen directly.
struct Single {
  SampleStats stats;
  DesignMoments moments;
  ConfidenceRadius radius;
};

Single single(double center, double tau, double v) {
  Single s;
  s.stats.setting = Setting::Inductive;
  s.stats.train_size = 10;
  FeatureStats f;
  f.v = v;
  f.n = 10;
  f.sq_mean = v;
  f.cross_mean = center * v;
  s.stats.features.push_back(f);
  s.moments = make_moments(Eigen::MatrixXd::Constant(1, 1, v), {}, false);
  s.radius.beta = {tau * tau * v};
  s.radius.tau = {tau};
  s.radius.observables.resize(1);
  return s;
}

struct TrigFit {
  std::shared_ptr<const FeatureDictionary> dict;
  Points x;
  Eigen::VectorXd y;
  SampleStats stats;
  DesignMoments moments;
  ConfidenceRadius radius;
};

TrigFit trig_fit(std::size_t m, std::size_t N, std::uint64_t seed, double epsilon = 0.1) {
  TrigFit t;
  t.dict = std::make_shared<const FeatureDictionary>(FeatureDictionary::trigonometric(m));
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::normal_distribution<double> z(0.0, 0.3);
  t.x.resize(static_cast<Eigen::Index>(N), 1);
  t.y.resize(static_cast<Eigen::Index>(N));
  for (Eigen::Index i = 0; i < t.x.rows(); ++i) {
    t.x(i, 0) = u(gen);
    t.y(i) = std::sin(2.0 * 3.14159265358979 * t.x(i, 0)) + 0.5 * std::cos(6.0 * 3.14159265358979 * t.x(i, 0)) + z(gen);
  }
  t.moments = exact_moments(*t.dict);
  t.stats = inductive_stats(t.dict->evaluate(t.x), t.y, t.moments);
  BoundSpec spec;
  spec.variant = BoundVariant::IndExact;
  spec.epsilon = epsilon;
  spec.B = 1.5;
  spec.sigma2 = 0.09;
  t.radius = compute_radius(t.stats, spec);
  return t;
}

double soft(double x, double tau) { return x > tau ? x - tau : (x < -tau ? x + tau : 0.0); }

}  // namespace

TEST_CASE("residual gamma examples") {
  auto t = trig_fit(4, 50, 1);
  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(4);
  for (std::size_t k = 0; k < 4; ++k) {
    const auto& f = t.stats.features[k];
    CHECK(residual_gamma(zero, k, t.moments, t.stats) == doctest::Approx(f.normalization_ratio() * f.alpha_hat()));
  }
  Eigen::VectorXd centered(4);
  for (std::size_t k = 0; k < 4; ++k) centered(static_cast<Eigen::Index>(k)) = t.stats.features[k].center();
  for (std::size_t k = 0; k < 4; ++k) CHECK(residual_gamma(centered, k, t.moments, t.stats) == 0.0);

  // Hand Gram [[1, .5], [.5, 1]], c = (1, 0), center of feature 2 is 0.8.
  SampleStats s;
  s.train_size = 4;
  FeatureStats a;
  a.v = 1.0;
  a.n = 4;
  FeatureStats b = a;
  b.cross_mean = 0.8;
  s.features = {a, b};
  Eigen::MatrixXd g(2, 2);
  g << 1.0, 0.5, 0.5, 1.0;
  const auto mom = make_moments(g, {}, true);
  CHECK(residual_gamma(Eigen::Vector2d(1.0, 0.0), 1, mom, s) == doctest::Approx(0.3).epsilon(1e-15));
}

TEST_CASE("soft-threshold steps") {
  CHECK(soft_threshold_step(0.1, 0.2, 1.0).delta == 0.0);
  CHECK(soft_threshold_step(0.1, 0.2, 1.0).increment == 0.0);
  CHECK(soft_threshold_step(-0.2, 0.2, 3.0).delta == 0.0);

  const auto up = single(0.5, 0.2, 1.0);
  const auto p = project_feature(Eigen::VectorXd::Zero(1), 0, up.moments, up.stats, up.radius);
  CHECK(p.coefficients(0) == doctest::Approx(0.3).epsilon(1e-15));
  CHECK(p.delta == doctest::Approx(0.09).epsilon(1e-15));

  const auto down = single(-0.5, 0.2, 4.0);
  const auto q = project_feature(Eigen::VectorXd::Zero(1), 0, down.moments, down.stats, down.radius);
  CHECK(q.coefficients(0) == doctest::Approx(-0.3).epsilon(1e-15));
  CHECK(q.delta == doctest::Approx(0.36).epsilon(1e-15));
}

TEST_CASE("projection geometry on random triples") {
  std::mt19937_64 gen(99);
  std::uniform_real_distribution<double> gamma(-3.0, 3.0), tau(0.0, 1.0), v(0.05, 5.0), c0(-2.0, 2.0);
  for (int t = 0; t < 1000; ++t) {
    const double start = c0(gen);
    const double vv = v(gen);
    const double tt = tau(gen);
    const double center = start + gamma(gen);
    const auto s = single(center, tt, vv);
    const Eigen::VectorXd c = Eigen::VectorXd::Constant(1, start);
    const auto p = project_feature(c, 0, s.moments, s.stats, s.radius);
    const double sqrt_beta = std::sqrt(s.radius.beta[0]);
    CHECK(slab_distance(p.coefficients, 0, s.moments, s.stats) <= sqrt_beta + 1e-10);
    const auto again = project_feature(p.coefficients, 0, s.moments, s.stats, s.radius);
    CHECK(std::abs(again.coefficients(0) - p.coefficients(0)) <= 1e-12);
    const double moved = vv * (p.coefficients(0) - start) * (p.coefficients(0) - start);
    CHECK(std::abs(p.delta - moved) <= 1e-12);
  }
}

TEST_CASE("round robin equals coordinatewise soft thresholding") {
  auto t = trig_fit(16, 200, 3);
  SelectionOptions opt;
  opt.schedule = Schedule::RoundRobin;
  const auto model = run_selection(t.stats, t.moments, t.radius, opt);
  for (std::size_t k = 0; k < 16; ++k) {
    const double expected = soft(t.stats.features[k].center(), t.radius.tau[k]);
    CHECK(std::abs(model.coefficients(static_cast<Eigen::Index>(k)) - expected) <= 1e-12);
  }
  // A second run from the result moves nothing.
  opt.warm_start = model.coefficients;
  const auto again = run_selection(t.stats, t.moments, t.radius, opt);
  CHECK((again.coefficients - model.coefficients).cwiseAbs().maxCoeff() <= 1e-12);
  // Greedy reaches the same point on orthonormal features.
  SelectionOptions greedy;
  greedy.kappa = 1e-12;
  const auto g = run_selection(t.stats, t.moments, t.radius, greedy);
  CHECK((g.coefficients - model.coefficients).cwiseAbs().maxCoeff() <= 1e-6);
}

TEST_CASE("greedy first pick matches brute force") {
  std::mt19937_64 gen(8);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int rep = 0; rep < 20; ++rep) {
    const Eigen::Index m = 6;
    Eigen::MatrixXd a(20, m);
    for (Eigen::Index i = 0; i < a.size(); ++i) a.data()[i] = u(gen);
    const Eigen::MatrixXd gram = a.transpose() * a / 20.0;
    SampleStats s;
    s.train_size = 30;
    ConfidenceRadius r;
    for (Eigen::Index k = 0; k < m; ++k) {
      FeatureStats f;
      f.v = gram(k, k);
      f.n = 30;
      f.cross_mean = u(gen);
      s.features.push_back(f);
      const double tau = 0.2 * std::abs(u(gen));
      r.tau.push_back(tau);
      r.beta.push_back(tau * tau * f.v);
    }
    r.observables.resize(static_cast<std::size_t>(m));
    const auto mom = make_moments(gram, {}, true);
    const auto model = run_selection(s, mom, r, {});
    if (model.trace.empty()) continue;
    std::size_t best = 0;
    double best_delta = -1.0;
    for (Eigen::Index k = 0; k < m; ++k) {
      const auto& f = s.features[static_cast<std::size_t>(k)];
      const double gamma = f.cross_mean / f.v;
      const double excess = std::max(0.0, std::abs(gamma) - r.tau[static_cast<std::size_t>(k)]);
      const double delta = f.v * excess * excess;
      if (delta > best_delta) {
        best_delta = delta;
        best = static_cast<std::size_t>(k);
      }
    }
    CHECK(model.trace.front().feature == best);
    CHECK(model.trace.front().delta == doctest::Approx(best_delta).epsilon(1e-13));
    for (std::size_t n = 0; n < model.trace.size(); ++n) {
      CHECK(model.trace[n].step == n + 1);
      CHECK(model.trace[n].delta >= model.kappa);
    }
  }
}

TEST_CASE("ties go to the smallest index") {
  SampleStats s;
  s.train_size = 10;
  ConfidenceRadius r;
  for (int k = 0; k < 3; ++k) {
    FeatureStats f;
    f.v = 1.0;
    f.n = 10;
    f.cross_mean = 0.7;
    s.features.push_back(f);
    r.tau.push_back(0.1);
    r.beta.push_back(0.01);
  }
  r.observables.resize(3);
  const auto mom = make_moments(Eigen::MatrixXd::Identity(3, 3), {}, false);
  const auto model = run_selection(s, mom, r, {});
  REQUIRE(model.trace.size() == 3);
  CHECK(model.trace[0].feature == 0);
  CHECK(model.trace[1].feature == 1);
  CHECK(model.trace[2].feature == 2);
}

TEST_CASE("zero data selects nothing") {
  auto dict = std::make_shared<const FeatureDictionary>(FeatureDictionary::trigonometric(5));
  Points x(10, 1);
  for (Eigen::Index i = 0; i < 10; ++i) x(i, 0) = 0.1 * static_cast<double>(i);
  BoundSpec spec;
  spec.variant = BoundVariant::IndExact;
  spec.epsilon = 0.1;
  spec.B = 0.0;
  spec.sigma2 = 0.0;
  const auto fit = fit_inductive(dict, x, Eigen::VectorXd::Zero(10),
                                 std::make_shared<const DesignMoments>(exact_moments(*dict)), spec, {});
  CHECK(fit.model.stopped_at() == 0);
  CHECK(fit.model.coefficients.isZero());
}

TEST_CASE("risk never increases along the trace") {
  auto t = trig_fit(12, 300, 5, 0.2);
  const auto model = run_selection(t.stats, t.moments, t.radius, {});
  // Empirical-centered proxy: distance to the centers decreases each step.
  Eigen::VectorXd centers(12);
  for (std::size_t k = 0; k < 12; ++k) centers(static_cast<Eigen::Index>(k)) = t.stats.features[k].center();
  Eigen::VectorXd c = Eigen::VectorXd::Zero(12);
  double previous = (c - centers).squaredNorm();
  for (const auto& r : model.trace) {
    c(static_cast<Eigen::Index>(r.feature)) += r.update;
    const double now = (c - centers).squaredNorm();
    CHECK(now <= previous - r.delta + 1e-12);
    previous = now;
  }
  CHECK((c - model.coefficients).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("termination bound and kappa validation") {
  auto t = trig_fit(8, 100, 6);
  const auto model = run_selection(t.stats, t.moments, t.radius, {});
  // Every step gains at least kappa, bounded by the initial distance to the slabs' intersection.
  Eigen::VectorXd centers(8);
  for (std::size_t k = 0; k < 8; ++k) centers(static_cast<Eigen::Index>(k)) = t.stats.features[k].center();
  CHECK(static_cast<double>(model.stopped_at()) <= centers.squaredNorm() / model.kappa + 1.0);
  CHECK(model.kappa == doctest::Approx(1.0 / 200.0));

  SelectionOptions bad;
  bad.kappa = 1.0 / 100.0;
  CHECK_THROWS_AS(run_selection(t.stats, t.moments, t.radius, bad), ConfigError);
  bad.kappa = 0.0;
  CHECK_THROWS_AS(run_selection(t.stats, t.moments, t.radius, bad), ConfigError);

  SelectionOptions capped;
  capped.kappa = 1e-9;
  capped.max_iterations = 1;
  if (model.stopped_at() > 1) CHECK_THROWS_AS(run_selection(t.stats, t.moments, t.radius, capped), NumericalError);
}

TEST_CASE("all degenerate features return the start with a warning") {
  SampleStats s;
  s.train_size = 4;
  FeatureStats f;
  f.degenerate = true;
  s.features = {f, f};
  ConfidenceRadius r;
  r.beta = {INFINITY, INFINITY};
  r.tau = r.beta;
  r.observables.resize(2);
  const auto mom = make_moments(Eigen::MatrixXd::Zero(2, 2), {}, false);
  const auto model = run_selection(s, mom, r, {});
  CHECK(model.coefficients.isZero());
  CHECK(model.trace.empty());
  CHECK(model.warnings.size() == 1);
}

TEST_CASE("predict") {
  const auto trig = FeatureDictionary::trigonometric(3);
  Points x(4, 1);
  x << 0.0, 0.2, 0.5, 0.9;
  CHECK(predict(trig, Eigen::VectorXd::Zero(3), x).isZero());
  CHECK(predict(FeatureDictionary::trigonometric(1), Eigen::VectorXd::Constant(1, 2.0), x) ==
        Eigen::VectorXd::Constant(4, 2.0));

  std::mt19937_64 gen(4);
  std::normal_distribution<double> z;
  Eigen::VectorXd c(4);
  for (Eigen::Index i = 0; i < 4; ++i) c(i) = z(gen);
  Points p(1, 1);
  p << 0.1;
  // Haar J=1 at 0.1: phi = 1, psi_{0,1} = 1, psi_{1,1} = sqrt2, psi_{1,2} = 0.
  const double expected = c(0) + c(1) + std::sqrt(2.0) * c(2);
  CHECK(std::abs(predict(FeatureDictionary::haar(1), c, p)(0) - expected) < 1e-12);
  CHECK_THROWS_AS(predict(trig, Eigen::VectorXd::Zero(2), x), ConfigError);
  CHECK(predict(trig, Eigen::VectorXd::Zero(3), Points(0, 1)).size() == 0);
}

TEST_CASE("clipping") {
  CHECK(clip_coefficients(Eigen::Vector2d(3.0, -5.0), 2.0) == Eigen::Vector2d(2.0, -2.0));
  CHECK(clip_coefficients(Eigen::Vector2d(0.5, -1.0), 2.0) == Eigen::Vector2d(0.5, -1.0));

  std::mt19937_64 gen(12);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int t = 0; t < 1000; ++t) {
    const double B = 2.0 * std::abs(u(gen));
    Eigen::VectorXd c(8), f(8);
    for (Eigen::Index i = 0; i < 8; ++i) {
      c(i) = 5.0 * u(gen);
      f(i) = B * u(gen);
    }
    CHECK((clip_coefficients(c, B) - f).norm() <= (c - f).norm());
  }

  SelectionModel model;
  model.coefficients = Eigen::Vector2d(3.0, -5.0);
  Eigen::MatrixXd g(2, 2);
  g << 1.0, 0.2, 0.2, 1.0;
  CHECK_THROWS_AS(clip_coefficients(model, make_moments(g, {}, true), 1.0), ConfigError);
  const auto ok = clip_coefficients(model, make_moments(Eigen::MatrixXd::Identity(2, 2), {}, false), 1.0);
  CHECK(ok.coefficients == Eigen::Vector2d(1.0, -1.0));
}

TEST_CASE("schedule names") {
  CHECK(schedule_from_string("greedy_max") == Schedule::GreedyMax);
  CHECK(schedule_from_string(to_string(Schedule::RoundRobin)) == Schedule::RoundRobin);
  CHECK_THROWS_AS(schedule_from_string("random"), ConfigError);
}
