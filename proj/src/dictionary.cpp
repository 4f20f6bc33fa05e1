#include "pacfs/dictionary.hpp"

#include "pacfs/error.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <string>

namespace pacfs {

namespace {

constexpr double kSqrt2 = std::numbers::sqrt2;

std::string row_message(Eigen::Index row, const std::string& what) {
  return "point " + std::to_string(row) + ": " + what;
}

// Index of the row of `table` bitwise equal to `x`, or -1.
Eigen::Index find_row(const Points& table, const Eigen::Ref<const Eigen::RowVectorXd>& x) {
  for (Eigen::Index i = 0; i < table.rows(); ++i) {
    if ((table.row(i).array() == x.array()).all()) return i;
  }
  return -1;
}

void sort_rows_lexicographically(Points& points) {
  std::vector<Eigen::Index> order(static_cast<std::size_t>(points.rows()));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
    for (Eigen::Index c = 0; c < points.cols(); ++c) {
      if (points(a, c) < points(b, c)) return true;
      if (points(b, c) < points(a, c)) return false;
    }
    return false;
  });
  Points sorted(points.rows(), points.cols());
  for (std::size_t i = 0; i < order.size(); ++i) sorted.row(static_cast<Eigen::Index>(i)) = points.row(order[i]);
  points = std::move(sorted);
}

// Sign fixed by the entry sum, which does not depend on the order of the
// design points; falls back to the largest-magnitude entry.
void canonicalize_sign(Eigen::Ref<Eigen::VectorXd> vec) {
  const double sum = vec.sum();
  const double scale = std::sqrt(static_cast<double>(vec.size()));
  if (std::abs(sum) > 1e-12 * scale) {
    if (sum < 0.0) vec = -vec;
    return;
  }
  Eigen::Index pivot = 0;
  vec.cwiseAbs().maxCoeff(&pivot);
  if (vec(pivot) < 0.0) vec = -vec;
}

Eigen::MatrixXd kernel_matrix(const Points& design, const KernelSpec& kernel) {
  const Eigen::Index n = design.rows();
  Eigen::MatrixXd gram(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j <= i; ++j) {
      gram(i, j) = kernel(design.row(i), design.row(j));
      gram(j, i) = gram(i, j);
    }
  }
  return gram;
}

}  // namespace

std::string_view to_string(DictionaryKind kind) {
  switch (kind) {
    case DictionaryKind::Trigonometric: return "trigonometric";
    case DictionaryKind::Haar: return "haar";
    case DictionaryKind::GaussianKernel: return "gaussian_kernel";
    case DictionaryKind::MultiscaleGaussian: return "multiscale_gaussian";
    case DictionaryKind::KernelPCA: return "kernel_pca";
    case DictionaryKind::ExplicitMatrix: return "explicit_matrix";
  }
  return "unknown";
}

DictionaryKind dictionary_kind_from_string(std::string_view name) {
  for (auto kind : {DictionaryKind::Trigonometric, DictionaryKind::Haar, DictionaryKind::GaussianKernel,
                    DictionaryKind::MultiscaleGaussian, DictionaryKind::KernelPCA,
                    DictionaryKind::ExplicitMatrix}) {
    if (to_string(kind) == name) return kind;
  }
  throw ConfigError("unknown dictionary kind '" + std::string(name) + "'");
}

double KernelSpec::operator()(const Eigen::Ref<const Eigen::RowVectorXd>& a,
                              const Eigen::Ref<const Eigen::RowVectorXd>& b) const {
  switch (type) {
    case Type::Gaussian: return std::exp(-gamma * (a - b).squaredNorm() / 2.0);
    case Type::Linear: return a.dot(b);
    case Type::Precomputed: break;
  }
  throw ConfigError("a precomputed kernel has no closed form");
}

FeatureDictionary FeatureDictionary::trigonometric(std::size_t m) {
  if (m == 0) throw ConfigError("trigonometric dictionary needs m >= 1");
  return {DictionaryKind::Trigonometric, m, 1, TrigonometricParams{m}};
}

FeatureDictionary FeatureDictionary::haar(int levels, Interval domain) {
  if (levels < 0) throw ConfigError("haar dictionary needs levels >= 0");
  if (levels > 30) throw ConfigError("haar dictionary supports at most 30 levels");
  if (!(domain.lower < domain.upper)) throw ConfigError("haar domain must satisfy lower < upper");
  const std::size_t m = std::size_t{1} << (levels + 1);
  return {DictionaryKind::Haar, m, 1, HaarParams{levels, domain}};
}

FeatureDictionary FeatureDictionary::gaussian_kernel(const Points& centers, double gamma) {
  auto dict = multiscale_gaussian(centers, {gamma});
  dict.kind_ = DictionaryKind::GaussianKernel;
  return dict;
}

FeatureDictionary FeatureDictionary::multiscale_gaussian(const Points& centers,
                                                         const std::vector<double>& scales) {
  if (centers.rows() == 0 || centers.cols() == 0) throw ConfigError("gaussian dictionary needs at least one center");
  if (scales.empty()) throw ConfigError("gaussian dictionary needs at least one scale");
  for (double s : scales) {
    if (!(s > 0.0) || !std::isfinite(s)) throw ConfigError("gaussian scales must be positive and finite");
  }
  if (!centers.allFinite()) throw DataError("gaussian centers must be finite");
  GaussianParams params{centers, scales};
  sort_rows_lexicographically(params.centers);
  const auto m = static_cast<std::size_t>(centers.rows()) * scales.size();
  const auto d = static_cast<std::size_t>(centers.cols());
  return {DictionaryKind::MultiscaleGaussian, m, d, std::move(params)};
}

FeatureDictionary FeatureDictionary::kernel_pca(const Points& design, KernelSpec kernel, std::size_t top) {
  if (kernel.type == KernelSpec::Type::Precomputed) {
    throw ConfigError("use kernel_pca_from_gram for precomputed kernels");
  }
  if (kernel.type == KernelSpec::Type::Gaussian && !(kernel.gamma > 0.0)) {
    throw ConfigError("gaussian kernel needs gamma > 0");
  }
  if (!design.allFinite()) throw DataError("kernel PCA design points must be finite");
  const Eigen::MatrixXd gram = kernel_matrix(design, kernel);
  auto dict = kernel_pca_from_gram(design, gram, top);
  auto& params = std::get<KernelPcaParams>(dict.params_);
  params.kernel = kernel;
  params.gram.resize(0, 0);
  return dict;
}

FeatureDictionary FeatureDictionary::kernel_pca_from_gram(const Points& design, const Eigen::MatrixXd& gram,
                                                          std::size_t top) {
  const Eigen::Index n = design.rows();
  if (n == 0) throw ConfigError("kernel PCA needs at least one design point");
  if (top == 0 || top > static_cast<std::size_t>(n)) {
    throw ConfigError("kernel PCA 'top' must lie in [1, number of design points]");
  }
  if (gram.rows() != n || gram.cols() != n) throw DataError("kernel matrix must be n x n for n design points");
  if (!gram.allFinite()) throw DataError("kernel matrix has non-finite entries");
  const double scale = std::max(1.0, gram.cwiseAbs().maxCoeff());
  if ((gram - gram.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
    throw DataError("kernel matrix is not symmetric");
  }

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(gram);
  if (solver.info() != Eigen::Success) throw NumericalError("kernel PCA eigen-decomposition failed");
  const Eigen::VectorXd& values = solver.eigenvalues();
  const double tolerance = 1e-8 * std::max(1.0, values.cwiseAbs().maxCoeff());
  if (values.minCoeff() < -tolerance) {
    throw NumericalError("kernel matrix is not positive semidefinite: eigenvalue " +
                         std::to_string(values.minCoeff()));
  }

  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](Eigen::Index a, Eigen::Index b) { return values(a) > values(b); });

  KernelPcaParams params;
  params.design = design;
  params.kernel.type = KernelSpec::Type::Precomputed;
  params.gram = gram;
  params.eigenvalues.resize(static_cast<Eigen::Index>(top));
  params.eigenvectors.resize(n, static_cast<Eigen::Index>(top));
  for (std::size_t l = 0; l < top; ++l) {
    const auto col = static_cast<Eigen::Index>(l);
    params.eigenvalues(col) = values(order[l]);
    params.eigenvectors.col(col) = solver.eigenvectors().col(order[l]);
    canonicalize_sign(params.eigenvectors.col(col));
  }
  const auto d = static_cast<std::size_t>(design.cols());
  return {DictionaryKind::KernelPCA, top, d, std::move(params)};
}

FeatureDictionary FeatureDictionary::kernel_pca_restore(const Points& design, KernelSpec kernel,
                                                        const Eigen::MatrixXd& gram,
                                                        const Eigen::VectorXd& eigenvalues,
                                                        const Eigen::MatrixXd& eigenvectors) {
  if (eigenvectors.rows() != design.rows() || eigenvectors.cols() != eigenvalues.size() ||
      eigenvalues.size() == 0) {
    throw ConfigError("persisted kernel PCA eigenpairs do not match the design");
  }
  if (kernel.type == KernelSpec::Type::Precomputed &&
      (gram.rows() != design.rows() || gram.cols() != design.rows())) {
    throw ConfigError("persisted precomputed kernel PCA needs its n x n kernel matrix");
  }
  KernelPcaParams params{design, kernel, gram, eigenvalues, eigenvectors};
  const auto top = static_cast<std::size_t>(eigenvalues.size());
  const auto d = static_cast<std::size_t>(design.cols());
  return {DictionaryKind::KernelPCA, top, d, std::move(params)};
}

FeatureDictionary FeatureDictionary::explicit_matrix(const Points& points, const Eigen::MatrixXd& values) {
  if (points.rows() == 0 || values.cols() == 0) throw ConfigError("explicit dictionary needs rows and features");
  if (points.rows() != values.rows()) throw DataError("explicit dictionary: points and values row counts differ");
  if (!values.allFinite() || !points.allFinite()) throw DataError("explicit dictionary has non-finite entries");
  const auto m = static_cast<std::size_t>(values.cols());
  const auto d = static_cast<std::size_t>(points.cols());
  return {DictionaryKind::ExplicitMatrix, m, d, ExplicitParams{points, values}};
}

bool FeatureDictionary::is_orthonormal() const {
  return kind_ == DictionaryKind::Trigonometric || kind_ == DictionaryKind::Haar;
}

Interval FeatureDictionary::domain() const {
  if (const auto* haar = std::get_if<HaarParams>(&params_)) return haar->domain;
  return {};
}

void FeatureDictionary::check_point(const Eigen::Ref<const Eigen::RowVectorXd>& x, Eigen::Index row) const {
  if (static_cast<std::size_t>(x.size()) != dimension_) {
    throw DataError(row_message(row, "dimension " + std::to_string(x.size()) + " but dictionary expects " +
                                         std::to_string(dimension_)));
  }
  if (!x.allFinite()) throw DataError(row_message(row, "non-finite coordinate"));
  if (is_orthonormal()) {
    const Interval dom = domain();
    if (x(0) < dom.lower || x(0) > dom.upper) {
      throw DataError(row_message(row, "coordinate " + std::to_string(x(0)) + " outside [" +
                                           std::to_string(dom.lower) + ", " + std::to_string(dom.upper) + "]"));
    }
  }
}

void FeatureDictionary::evaluate_point(const Eigen::Ref<const Eigen::RowVectorXd>& x,
                                       Eigen::Ref<Eigen::RowVectorXd> out) const {
  struct Visitor {
    const Eigen::Ref<const Eigen::RowVectorXd>& x;
    Eigen::Ref<Eigen::RowVectorXd>& out;

    void operator()(const TrigonometricParams& p) const {
      out(0) = 1.0;
      for (std::size_t k = 1; k < p.size; ++k) {
        const auto freq = static_cast<double>((k + 1) / 2);
        const double angle = 2.0 * std::numbers::pi * freq * x(0);
        out(static_cast<Eigen::Index>(k)) = kSqrt2 * ((k % 2 == 1) ? std::cos(angle) : std::sin(angle));
      }
    }

    void operator()(const HaarParams& p) const {
      out.setZero();
      out(0) = 1.0;
      const double u = (x(0) - p.domain.lower) / (p.domain.upper - p.domain.lower);
      for (int j = 0; j <= p.levels; ++j) {
        const auto cells = static_cast<double>(std::size_t{1} << j);
        const double t = u * cells;
        const double cell = std::min(std::floor(t), cells - 1.0);
        const double height = std::sqrt(cells);
        const auto index = static_cast<Eigen::Index>(cells + cell);
        out(index) = (t - cell < 0.5) ? height : -height;
      }
    }

    void operator()(const GaussianParams& p) const {
      const Eigen::Index nc = p.centers.rows();
      for (std::size_t s = 0; s < p.scales.size(); ++s) {
        for (Eigen::Index i = 0; i < nc; ++i) {
          const double d2 = (p.centers.row(i) - x).squaredNorm();
          out(static_cast<Eigen::Index>(s) * nc + i) = std::exp(-p.scales[s] * d2 / 2.0);
        }
      }
    }

    void operator()(const KernelPcaParams& p) const {
      const Eigen::Index n = p.design.rows();
      Eigen::RowVectorXd kv(n);
      if (p.kernel.type == KernelSpec::Type::Precomputed) {
        const Eigen::Index j = find_row(p.design, x);
        if (j < 0) throw DataError("precomputed kernel PCA features exist only at the design points");
        kv = p.gram.row(j);
      } else {
        for (Eigen::Index i = 0; i < n; ++i) kv(i) = p.kernel(p.design.row(i), x);
      }
      out = kv * p.eigenvectors;
    }

    void operator()(const ExplicitParams& p) const {
      const Eigen::Index j = find_row(p.points, x);
      if (j < 0) throw DataError("explicit dictionary has no values for this point");
      out = p.values.row(j);
    }
  };
  std::visit(Visitor{x, out}, params_);
}

FeatureMatrix FeatureDictionary::evaluate(const Points& points) const {
  if (points.rows() > 0 && static_cast<std::size_t>(points.cols()) != dimension_) {
    throw DataError("points have dimension " + std::to_string(points.cols()) + " but dictionary expects " +
                    std::to_string(dimension_));
  }
  FeatureMatrix values(points.rows(), static_cast<Eigen::Index>(size_));
  Eigen::RowVectorXd row(static_cast<Eigen::Index>(size_));
  for (Eigen::Index i = 0; i < points.rows(); ++i) {
    check_point(points.row(i), i);
    try {
      evaluate_point(points.row(i), row);
    } catch (const DataError& e) {
      throw DataError(row_message(i, e.what()));
    }
    values.row(i) = row;
  }
  return values;
}

Points FeatureDictionary::anchors() const {
  const auto* gauss = std::get_if<GaussianParams>(&params_);
  if (gauss == nullptr) return {};
  const Eigen::Index nc = gauss->centers.rows();
  Points out(static_cast<Eigen::Index>(size_), gauss->centers.cols());
  for (std::size_t s = 0; s < gauss->scales.size(); ++s) {
    out.middleRows(static_cast<Eigen::Index>(s) * nc, nc) = gauss->centers;
  }
  return out;
}

std::vector<bool> zero_columns(const FeatureMatrix& features, Eigen::Index first_row, Eigen::Index row_count) {
  std::vector<bool> zero(static_cast<std::size_t>(features.cols()), true);
  for (Eigen::Index k = 0; k < features.cols(); ++k) {
    for (Eigen::Index i = first_row; i < first_row + row_count; ++i) {
      if (features(i, k) != 0.0) {
        zero[static_cast<std::size_t>(k)] = false;
        break;
      }
    }
  }
  return zero;
}

}  // namespace pacfs
