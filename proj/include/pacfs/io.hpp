#pragma once

#include "pacfs/bounds.hpp"
#include "pacfs/dictionary.hpp"
#include "pacfs/experiments.hpp"
#include "pacfs/selector.hpp"
#include "pacfs/types.hpp"

#include <Eigen/Dense>
#include <json.hpp>

#include <cstdint>
#include <string>
#include <string_view>

namespace pacfs {

using Json = nlohmann::ordered_json;

inline constexpr std::string_view kToolVersion = "0.3.0";

/// Shortest decimal that parses back to the same double.
std::string format_double(double value);

/// Parses a double, accepting surrounding blanks, "nan" and "inf". Throws DataError.
double parse_double(std::string_view text, std::string_view where);

/// Comma-separated numbers, one row per line. With `header`, the first line
/// is skipped. Every row must have the same number of fields.
Eigen::MatrixXd read_numeric_csv(const std::string& path, bool header);

struct LabeledData {
  Points x;
  Eigen::VectorXd y;
};

/// Header x1,...,xd,y then numeric rows.
LabeledData read_labeled_csv(const std::string& path);
/// Header x1,...,xd then numeric rows. An empty body yields 0 x d points.
Points read_unlabeled_csv(const std::string& path);

std::string labeled_csv(const Points& x, const Eigen::VectorXd& y);
std::string unlabeled_csv(const Points& x);
std::string predictions_csv(const Eigen::VectorXd& predictions);

void write_text(const std::string& path, std::string_view text);
std::string read_text(const std::string& path);

Json matrix_to_json(const Eigen::MatrixXd& m);
Eigen::MatrixXd matrix_from_json(const Json& j, std::string_view what);
Json vector_to_json(const Eigen::VectorXd& v);
Eigen::VectorXd vector_from_json(const Json& j, std::string_view what);
/// Finite values as numbers, anything else as null.
Json number_or_null(double value);

/// {kind, m, parameters}; kernel PCA keeps its eigenpairs.
Json dictionary_to_json(const FeatureDictionary& dict);
FeatureDictionary dictionary_from_json(const Json& j);

Json bound_spec_to_json(const BoundSpec& spec);
BoundSpec bound_spec_from_json(const Json& j);

/// Artifact header shared by every output file.
Json artifact_header(const Json& config, std::uint64_t seed);

Json model_to_json(const SelectionModel& model, const Json& config, std::uint64_t seed);
SelectionModel model_from_json(const Json& j);

Json report_to_json(const ExperimentReport& report, const Json& config, std::uint64_t seed);
/// Columns N, replicate, mse, coverage_event, seed.
std::string report_csv(const ExperimentReport& report);

/// Serialized JSON text, two-space indent and a trailing newline.
std::string dump(const Json& j);

}  // namespace pacfs
