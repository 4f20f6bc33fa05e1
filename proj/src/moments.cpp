#include "pacfs/moments.hpp"

#include "pacfs/error.hpp"
#include "pacfs/io.hpp"
#include "pacfs/rng.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <thread>

namespace pacfs {

namespace {

constexpr std::size_t kBatchSize = 4096;
constexpr double kPsdTolerance = 1e-8;

}  // namespace

std::string_view to_string(MomentSource source) {
  switch (source) {
    case MomentSource::Exact: return "exact";
    case MomentSource::MonteCarlo: return "monte_carlo";
    case MomentSource::EmpiricalTest: return "empirical_test";
    case MomentSource::EmpiricalAll: return "empirical_all";
    case MomentSource::UserSupplied: return "user_supplied";
  }
  return "unknown";
}

std::size_t DesignMoments::degenerate_count() const {
  return static_cast<std::size_t>(std::count(degenerate.begin(), degenerate.end(), true));
}

DesignMoments make_moments(Eigen::MatrixXd gram, MomentProvenance provenance, bool check_psd) {
  if (gram.rows() != gram.cols() || gram.rows() == 0) throw DataError("Gram matrix must be square and nonempty");
  if (!gram.allFinite()) throw NumericalError("Gram matrix has non-finite entries");
  const double scale = std::max(1.0, gram.cwiseAbs().maxCoeff());
  if ((gram - gram.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
    throw DataError("Gram matrix is not symmetric");
  }
  if (check_psd) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(gram);
    if (solver.info() != Eigen::Success) throw NumericalError("Gram eigen-decomposition failed");
    const double smallest = solver.eigenvalues().minCoeff();
    if (smallest < -kPsdTolerance) {
      throw NumericalError("Gram matrix is not positive semidefinite: eigenvalue " + std::to_string(smallest));
    }
    if (smallest < 0.0) {
      const Eigen::VectorXd clipped = solver.eigenvalues().cwiseMax(0.0);
      const Eigen::MatrixXd& vectors = solver.eigenvectors();
      gram = vectors * clipped.asDiagonal() * vectors.transpose();
      gram = 0.5 * (gram + gram.transpose()).eval();
    }
  }
  DesignMoments out;
  out.diag = gram.diagonal();
  out.degenerate.resize(out.size());
  for (std::size_t k = 0; k < out.size(); ++k) out.degenerate[k] = !(out.diag(static_cast<Eigen::Index>(k)) > 0.0);
  out.gram = std::move(gram);
  out.provenance = std::move(provenance);
  return out;
}

DesignMoments exact_moments(const FeatureDictionary& dict) {
  if (!dict.is_orthonormal()) {
    throw ConfigError("exact moments are available only for orthonormal dictionaries (trigonometric, haar); "
                      "use monte_carlo_moments for '" + std::string(to_string(dict.kind())) + "'");
  }
  const auto m = static_cast<Eigen::Index>(dict.size());
  DesignMoments out;
  out.gram = Eigen::MatrixXd::Identity(m, m);
  out.diag = Eigen::VectorXd::Ones(m);
  out.degenerate.assign(dict.size(), false);
  out.provenance = {MomentSource::Exact, 0, 0, {}};
  return out;
}

Points UniformSampler::draw(Rng& rng, std::size_t count) const {
  Points points(static_cast<Eigen::Index>(count), static_cast<Eigen::Index>(dimension));
  for (Eigen::Index i = 0; i < points.rows(); ++i) {
    for (Eigen::Index c = 0; c < points.cols(); ++c) points(i, c) = rng.uniform(lower, upper);
  }
  return points;
}

DesignMoments monte_carlo_moments(const FeatureDictionary& dict, const UniformSampler& sampler,
                                  std::size_t samples, std::uint64_t seed, unsigned threads) {
  if (samples == 0) throw ConfigError("Monte-Carlo moments need at least one sample");
  if (sampler.dimension != dict.dimension()) throw ConfigError("sampler dimension does not match the dictionary");
  if (!(sampler.lower < sampler.upper)) throw ConfigError("sampler needs lower < upper");

  const std::size_t batches = (samples + kBatchSize - 1) / kBatchSize;
  const auto m = static_cast<Eigen::Index>(dict.size());
  std::vector<Eigen::MatrixXd> partial(batches);

  auto run_batch = [&](std::size_t b) {
    const std::size_t count = std::min(kBatchSize, samples - b * kBatchSize);
    Rng rng(derive_seed(seed, b));
    const Points points = sampler.draw(rng, count);
    const FeatureMatrix phi = dict.evaluate(points);
    Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(m, m);
    sum.selfadjointView<Eigen::Lower>().rankUpdate(phi.transpose());
    partial[b] = sum.selfadjointView<Eigen::Lower>();
  };

  threads = std::max(1u, threads);
  if (threads == 1 || batches == 1) {
    for (std::size_t b = 0; b < batches; ++b) run_batch(b);
  } else {
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(threads);
    for (unsigned t = 0; t < threads; ++t) {
      pool.emplace_back([&, t] {
        try {
          for (std::size_t b = t; b < batches; b += threads) run_batch(b);
        } catch (...) {
          errors[t] = std::current_exception();
        }
      });
    }
    for (auto& th : pool) th.join();
    for (auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
  }

  Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(m, m);
  for (const auto& p : partial) gram += p;
  gram /= static_cast<double>(samples);
  return make_moments(std::move(gram), {MomentSource::MonteCarlo, samples, seed, {}}, true);
}

DesignMoments empirical_test_moments(const FeatureMatrix& features, std::size_t train_size, std::size_t k) {
  const std::size_t test_rows = k * train_size;
  if (test_rows == 0) throw ConfigError("empirical test moments need k * N > 0");
  if (static_cast<std::size_t>(features.rows()) != train_size + test_rows) {
    throw DataError("feature matrix has " + std::to_string(features.rows()) + " rows; expected (k+1)N = " +
                    std::to_string(train_size + test_rows));
  }
  const auto block = features.bottomRows(static_cast<Eigen::Index>(test_rows));
  Eigen::MatrixXd gram = block.transpose() * block;
  gram /= static_cast<double>(test_rows);
  gram = 0.5 * (gram + gram.transpose()).eval();
  return make_moments(std::move(gram), {MomentSource::EmpiricalTest, test_rows, 0, {}}, false);
}

DesignMoments empirical_all_moments(const FeatureMatrix& features) {
  if (features.rows() == 0) throw ConfigError("empirical moments need at least one row");
  Eigen::MatrixXd gram = features.transpose() * features;
  gram /= static_cast<double>(features.rows());
  gram = 0.5 * (gram + gram.transpose()).eval();
  return make_moments(std::move(gram),
                      {MomentSource::EmpiricalAll, static_cast<std::size_t>(features.rows()), 0, {}}, false);
}

DesignMoments load_gram_csv(const std::string& path) {
  Eigen::MatrixXd gram = read_numeric_csv(path, false);
  return make_moments(std::move(gram), {MomentSource::UserSupplied, 0, 0, path}, true);
}

}  // namespace pacfs
