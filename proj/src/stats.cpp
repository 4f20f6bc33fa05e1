#include "pacfs/bounds.hpp"
#include "pacfs/error.hpp"

#include <algorithm>
#include <string>

namespace pacfs {

namespace {

// Training-row moments of one column, skipping row `skip` if it is valid.
void fill_train_moments(const FeatureMatrix& train, const Eigen::VectorXd& y, Eigen::Index k,
                        Eigen::Index rows, Eigen::Index skip, FeatureStats& out) {
  double sq = 0.0, cross = 0.0, sq_y2 = 0.0, fourth = 0.0, theta_fourth = 0.0;
  std::size_t n = 0;
  for (Eigen::Index i = 0; i < rows; ++i) {
    if (i == skip) continue;
    const double t = train(i, k);
    const double t2 = t * t;
    const double p = t * y(i);
    sq += t2;
    cross += p;
    sq_y2 += p * p;
    fourth += (p * p) * (p * p);
    theta_fourth += t2 * t2;
    ++n;
  }
  const double inv = 1.0 / static_cast<double>(n);
  out.n = n;
  out.sq_mean = sq * inv;
  out.cross_mean = cross * inv;
  out.sq_y2_mean = sq_y2 * inv;
  out.train_fourth = fourth;
  out.train_theta_fourth = theta_fourth;
  double var = 0.0;
  for (Eigen::Index i = 0; i < rows; ++i) {
    if (i == skip) continue;
    const double d = train(i, k) * y(i) - out.cross_mean;
    var += d * d;
  }
  out.product_var = var * inv;
}

void check_shapes(const FeatureMatrix& features, const Eigen::VectorXd& y, const DesignMoments& moments,
                  Eigen::Index train_rows) {
  if (y.size() != train_rows) throw DataError("label count does not match the number of training rows");
  if (static_cast<std::size_t>(features.cols()) != moments.size()) {
    throw ConfigError("feature count does not match the design moments");
  }
  if (train_rows == 0) throw DataError("no training rows");
  if (!y.allFinite()) throw DataError("labels must be finite");
}

}  // namespace

std::optional<double> FeatureStats::test_alpha() const {
  if (!test_cross) return std::nullopt;
  return *test_cross / test_theta_sq;
}

SampleStats inductive_stats(const FeatureMatrix& train, const Eigen::VectorXd& y, const DesignMoments& moments) {
  check_shapes(train, y, moments, train.rows());
  SampleStats stats;
  stats.setting = Setting::Inductive;
  stats.train_size = static_cast<std::size_t>(train.rows());
  stats.features.resize(moments.size());
  for (Eigen::Index k = 0; k < train.cols(); ++k) {
    auto& f = stats.features[static_cast<std::size_t>(k)];
    fill_train_moments(train, y, k, train.rows(), -1, f);
    f.v = moments.diag(k);
    f.degenerate = moments.degenerate[static_cast<std::size_t>(k)];
  }
  return stats;
}

SampleStats leave_one_out_stats(const FeatureMatrix& train, const Eigen::VectorXd& y, const DesignMoments& moments,
                                std::span<const std::size_t> owners, std::size_t per_point) {
  check_shapes(train, y, moments, train.rows());
  if (train.rows() < 2) throw DataError("leave-one-out statistics need at least two training points");
  if (owners.size() != static_cast<std::size_t>(train.cols())) {
    throw ConfigError("leave-one-out statistics need one owner row per feature");
  }
  if (per_point == 0) throw ConfigError("leave-one-out statistics need m' >= 1");
  SampleStats stats;
  stats.setting = Setting::Inductive;
  stats.train_size = static_cast<std::size_t>(train.rows());
  stats.per_point = per_point;
  stats.features.resize(moments.size());
  for (Eigen::Index k = 0; k < train.cols(); ++k) {
    const std::size_t owner = owners[static_cast<std::size_t>(k)];
    if (owner >= stats.train_size) throw ConfigError("leave-one-out owner row out of range");
    auto& f = stats.features[static_cast<std::size_t>(k)];
    fill_train_moments(train, y, k, train.rows(), static_cast<Eigen::Index>(owner), f);
    f.v = moments.diag(k);
    f.degenerate = moments.degenerate[static_cast<std::size_t>(k)];
  }
  return stats;
}

std::vector<std::size_t> anchor_owners(const Points& anchors, const Points& train) {
  if (anchors.rows() == 0) throw ConfigError("dictionary features are not anchored at points");
  std::vector<std::size_t> owners(static_cast<std::size_t>(anchors.rows()));
  for (Eigen::Index k = 0; k < anchors.rows(); ++k) {
    Eigen::Index found = -1;
    for (Eigen::Index i = 0; i < train.rows() && found < 0; ++i) {
      if (train.cols() == anchors.cols() && (train.row(i).array() == anchors.row(k).array()).all()) found = i;
    }
    if (found < 0) {
      throw ConfigError("feature " + std::to_string(k) + " is not anchored at a training point");
    }
    owners[static_cast<std::size_t>(k)] = static_cast<std::size_t>(found);
  }
  return owners;
}

SampleStats transductive_stats(const FeatureMatrix& features, const Eigen::VectorXd& train_y,
                               const DesignMoments& moments, std::size_t train_size,
                               const std::optional<Eigen::VectorXd>& test_y) {
  const auto N = static_cast<Eigen::Index>(train_size);
  check_shapes(features, train_y, moments, N);
  const Eigen::Index test_rows = features.rows() - N;
  if (test_rows <= 0 || test_rows % N != 0) {
    throw DataError("transductive sample needs k*N test rows for an integer k >= 1 (N = " +
                    std::to_string(N) + ", test rows = " + std::to_string(test_rows) + ")");
  }
  if (test_y && test_y->size() != test_rows) throw DataError("hidden test label count mismatch");

  SampleStats stats;
  stats.setting = Setting::Transductive;
  stats.train_size = train_size;
  stats.test_multiplier = static_cast<std::size_t>(test_rows / N);
  stats.test_labels = test_y.has_value();
  stats.features.resize(moments.size());
  for (Eigen::Index k = 0; k < features.cols(); ++k) {
    auto& f = stats.features[static_cast<std::size_t>(k)];
    fill_train_moments(features, train_y, k, N, -1, f);
    f.v = moments.diag(k);
    f.degenerate = moments.degenerate[static_cast<std::size_t>(k)];
    double sq = 0.0, fourth = 0.0;
    for (Eigen::Index i = N; i < features.rows(); ++i) {
      const double t2 = features(i, k) * features(i, k);
      sq += t2;
      fourth += t2 * t2;
    }
    f.test_theta_sq = sq;
    f.test_theta_fourth = fourth;
    if (test_y) {
      double cross = 0.0, sq_y2 = 0.0, fourth_y = 0.0;
      double lo = features(0, k) * train_y(0);
      double hi = lo;
      for (Eigen::Index i = 0; i < N; ++i) {
        const double p = features(i, k) * train_y(i);
        lo = std::min(lo, p);
        hi = std::max(hi, p);
      }
      for (Eigen::Index i = N; i < features.rows(); ++i) {
        const double p = features(i, k) * (*test_y)(i - N);
        cross += p;
        sq_y2 += p * p;
        fourth_y += (p * p) * (p * p);
        lo = std::min(lo, p);
        hi = std::max(hi, p);
      }
      f.test_cross = cross;
      f.test_sq_y2 = sq_y2;
      f.test_fourth = fourth_y;
      f.product_range = hi - lo;
    }
  }
  return stats;
}

}  // namespace pacfs
