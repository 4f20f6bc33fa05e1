#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <optional>

namespace pacfs {

/// Design points stored row-wise: row i is the point X_i.
using Points = Eigen::MatrixXd;

/// Entry (i, k) holds theta_k(X_i).
using FeatureMatrix = Eigen::MatrixXd;

/// A labeled training sample plus optional unlabeled design points.
///
/// In the transductive setting the test block holds k*N points. Labels of
/// the test block exist only in simulations; they are never read by the
/// estimators, only by evaluation code.
struct Dataset {
  Points train_x;
  Eigen::VectorXd train_y;
  Points test_x;
  std::optional<Eigen::VectorXd> hidden_test_y;

  std::size_t train_size() const { return static_cast<std::size_t>(train_x.rows()); }
  std::size_t test_size() const { return static_cast<std::size_t>(test_x.rows()); }
  std::size_t dimension() const { return static_cast<std::size_t>(train_x.cols()); }

  /// Train rows followed by test rows.
  Points all_points() const;
};

}  // namespace pacfs
