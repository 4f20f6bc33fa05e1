#pragma once

#include "pacfs/types.hpp"

#include <Eigen/Dense>

#include <cstddef>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace pacfs {

enum class DictionaryKind {
  Trigonometric,
  Haar,
  GaussianKernel,
  MultiscaleGaussian,
  KernelPCA,
  ExplicitMatrix,
};

std::string_view to_string(DictionaryKind kind);
DictionaryKind dictionary_kind_from_string(std::string_view name);

/// Closed interval carrying the uniform design of the orthonormal bases.
struct Interval {
  double lower = 0.0;
  double upper = 1.0;

  bool operator==(const Interval&) const = default;
};

struct KernelSpec {
  enum class Type { Gaussian, Linear, Precomputed };
  Type type = Type::Gaussian;
  /// Bandwidth of exp(-gamma * d^2 / 2); ignored by the other types.
  double gamma = 1.0;

  double operator()(const Eigen::Ref<const Eigen::RowVectorXd>& a,
                    const Eigen::Ref<const Eigen::RowVectorXd>& b) const;
};

/// A finite feature family {theta_1, ..., theta_m}.
///
/// Dictionaries are immutable values; evaluation is a pure function of the
/// construction parameters and the query points, so one instance can be
/// evaluated from many threads. Feature indices are 0-based in code.
///
/// Ordering per kind:
///  - Trigonometric: 1, sqrt2 cos(2 pi x), sqrt2 sin(2 pi x), sqrt2 cos(4 pi x), ...
///  - Haar: phi, psi_{0,1}, psi_{1,1}, psi_{1,2}, psi_{2,1}, ... (level-major)
///  - Gaussian kinds: scale-major, then centers in lexicographic order
///  - KernelPCA: descending eigenvalue, ties in solver order
class FeatureDictionary {
 public:
  struct TrigonometricParams {
    std::size_t size = 1;
  };
  struct HaarParams {
    int levels = 0;
    Interval domain;
  };
  struct GaussianParams {
    Points centers;  // sorted lexicographically
    std::vector<double> scales;
  };
  struct KernelPcaParams {
    Points design;
    KernelSpec kernel;
    Eigen::MatrixXd gram;          // only kept for Precomputed kernels
    Eigen::VectorXd eigenvalues;   // the retained (top) eigenvalues
    Eigen::MatrixXd eigenvectors;  // n x top, unit columns
  };
  struct ExplicitParams {
    Points points;
    Eigen::MatrixXd values;
  };
  using Params =
      std::variant<TrigonometricParams, HaarParams, GaussianParams, KernelPcaParams, ExplicitParams>;

  static FeatureDictionary trigonometric(std::size_t m);
  static FeatureDictionary haar(int levels, Interval domain = {});
  static FeatureDictionary gaussian_kernel(const Points& centers, double gamma);
  static FeatureDictionary multiscale_gaussian(const Points& centers, const std::vector<double>& scales);
  /// Diagonalizes (K(X_i, X_j)) and keeps the `top` leading eigen-features.
  static FeatureDictionary kernel_pca(const Points& design, KernelSpec kernel, std::size_t top);
  /// Kernel PCA on a user-supplied PSD matrix. The resulting features can be
  /// evaluated only at the design points themselves.
  static FeatureDictionary kernel_pca_from_gram(const Points& design, const Eigen::MatrixXd& gram,
                                                std::size_t top);
  /// Rebuilds a kernel PCA dictionary from persisted eigenpairs.
  static FeatureDictionary kernel_pca_restore(const Points& design, KernelSpec kernel,
                                              const Eigen::MatrixXd& gram,
                                              const Eigen::VectorXd& eigenvalues,
                                              const Eigen::MatrixXd& eigenvectors);
  static FeatureDictionary explicit_matrix(const Points& points, const Eigen::MatrixXd& values);

  DictionaryKind kind() const { return kind_; }
  std::size_t size() const { return size_; }
  /// Dimension of accepted points.
  std::size_t dimension() const { return dimension_; }
  const Params& params() const { return params_; }

  /// True for the kinds that are orthonormal under the uniform design.
  bool is_orthonormal() const;
  /// Interval of the uniform design for orthonormal kinds.
  Interval domain() const;

  /// Entry (i, k) = theta_k(points.row(i)). Throws DataError naming the
  /// first offending row for dimension or domain violations.
  FeatureMatrix evaluate(const Points& points) const;

  /// Values of every feature at one point.
  void evaluate_point(const Eigen::Ref<const Eigen::RowVectorXd>& x,
                      Eigen::Ref<Eigen::RowVectorXd> out) const;

  /// Per-feature anchor point for the kernel kinds (the kernel center or,
  /// for kernel PCA, nothing). Empty when features are not point-anchored.
  Points anchors() const;

 private:
  FeatureDictionary(DictionaryKind kind, std::size_t size, std::size_t dimension, Params params)
      : kind_(kind), size_(size), dimension_(dimension), params_(std::move(params)) {}

  void check_point(const Eigen::Ref<const Eigen::RowVectorXd>& x, Eigen::Index row) const;

  DictionaryKind kind_;
  std::size_t size_;
  std::size_t dimension_;
  Params params_;
};

/// Columns that are identically zero over the given rows.
std::vector<bool> zero_columns(const FeatureMatrix& features, Eigen::Index first_row,
                               Eigen::Index row_count);

}  // namespace pacfs
