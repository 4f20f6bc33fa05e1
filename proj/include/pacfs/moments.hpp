#pragma once

#include "pacfs/dictionary.hpp"
#include "pacfs/rng.hpp"
#include "pacfs/types.hpp"

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace pacfs {

enum class MomentSource { Exact, MonteCarlo, EmpiricalTest, EmpiricalAll, UserSupplied };

std::string_view to_string(MomentSource source);

struct MomentProvenance {
  MomentSource source = MomentSource::Exact;
  std::size_t samples = 0;  // Monte-Carlo draws or averaged rows
  std::uint64_t seed = 0;   // Monte-Carlo only
  std::string file;         // UserSupplied only
};

/// Gram matrix of the features under the design measure.
///
/// gram(j, k) = <theta_j, theta_k> under the design distribution (inductive)
/// or under the empirical measure of the test points (transductive). A feature
/// with diag(k) <= 0 is flagged degenerate and is never selected.
struct DesignMoments {
  Eigen::MatrixXd gram;
  Eigen::VectorXd diag;
  std::vector<bool> degenerate;
  MomentProvenance provenance;

  std::size_t size() const { return static_cast<std::size_t>(diag.size()); }
  std::size_t degenerate_count() const;
};

/// Builds moments from a Gram matrix: checks symmetry, clips eigenvalues in
/// (-1e-8, 0) to zero and rejects anything more negative (NumericalError).
/// `check_psd` skips the eigen-decomposition for matrices that are PSD by
/// construction.
DesignMoments make_moments(Eigen::MatrixXd gram, MomentProvenance provenance, bool check_psd);

/// Identity Gram for the orthonormal kinds under their uniform design.
DesignMoments exact_moments(const FeatureDictionary& dict);

/// Uniform design on a box [lower, upper]^dimension.
struct UniformSampler {
  double lower = 0.0;
  double upper = 1.0;
  std::size_t dimension = 1;

  Points draw(Rng& rng, std::size_t count) const;
};

/// G = (1/M) sum_s phi(x_s) phi(x_s)^T over M sampler draws.
///
/// Draws are split into fixed batches with per-batch sub-seeds and summed in
/// batch order, so the result does not depend on `threads`.
DesignMoments monte_carlo_moments(const FeatureDictionary& dict, const UniformSampler& sampler,
                                  std::size_t samples, std::uint64_t seed, unsigned threads = 1);

/// G(j, h) = (1/(kN)) sum over the test rows N..(k+1)N-1 of theta_j theta_h.
DesignMoments empirical_test_moments(const FeatureMatrix& features, std::size_t train_size,
                                     std::size_t k);

/// Average over every row of the feature matrix.
DesignMoments empirical_all_moments(const FeatureMatrix& features);

/// Reads an m x m Gram matrix from CSV (no header) and validates it.
DesignMoments load_gram_csv(const std::string& path);

}  // namespace pacfs
