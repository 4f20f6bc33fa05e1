#include "pacfs/io.hpp"

#include "pacfs/error.hpp"

#include <bit>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <vector>

namespace pacfs {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t pos = 0;
  for (;;) {
    const auto comma = line.find(',', pos);
    fields.push_back(trim(line.substr(pos, comma == std::string_view::npos ? std::string_view::npos : comma - pos)));
    if (comma == std::string_view::npos) break;
    pos = comma + 1;
  }
  return fields;
}

struct CsvTable {
  std::vector<std::string_view> header;
  std::vector<std::vector<double>> rows;
};

// Line numbers in messages are 1-based file lines.
CsvTable parse_csv(const std::string& text, bool header, const std::string& path) {
  CsvTable table;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  bool header_seen = !header;
  std::size_t width = 0;
  while (pos <= text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string::npos) end = text.size();
    const std::string_view line = trim(std::string_view(text).substr(pos, end - pos));
    ++line_no;
    pos = end + 1;
    if (line.empty()) {
      if (end == text.size()) break;
      continue;
    }
    if (!header_seen) {
      table.header = split(line);
      header_seen = true;
      width = table.header.size();
      continue;
    }
    const auto fields = split(line);
    if (width == 0) width = fields.size();
    if (fields.size() != width) {
      throw DataError(path + ": row " + std::to_string(line_no) + ": expected " + std::to_string(width) +
                      " fields, found " + std::to_string(fields.size()));
    }
    std::vector<double> row;
    row.reserve(fields.size());
    for (std::size_t c = 0; c < fields.size(); ++c) {
      const std::string where = path + ": row " + std::to_string(line_no) + ", column " + std::to_string(c + 1);
      row.push_back(parse_double(fields[c], where));
    }
    table.rows.push_back(std::move(row));
    if (end == text.size()) break;
  }
  if (!header_seen) throw DataError(path + ": missing header line");
  return table;
}

Eigen::MatrixXd to_matrix(const std::vector<std::vector<double>>& rows, std::size_t width) {
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(width));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t c = 0; c < width; ++c) m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = rows[i][c];
  }
  return m;
}

void check_header(const CsvTable& table, const std::string& path, bool labeled) {
  const auto& h = table.header;
  if (h.empty() || (labeled && h.size() < 2)) {
    throw DataError(path + ": header must be x1,...,xd" + std::string(labeled ? ",y" : ""));
  }
  const std::size_t d = labeled ? h.size() - 1 : h.size();
  for (std::size_t c = 0; c < d; ++c) {
    if (h[c] != "x" + std::to_string(c + 1)) {
      throw DataError(path + ": header column " + std::to_string(c + 1) + " is '" + std::string(h[c]) +
                      "', expected 'x" + std::to_string(c + 1) + "'");
    }
  }
  if (labeled && h.back() != "y") throw DataError(path + ": last header column must be 'y'");
}

void check_finite(const Eigen::MatrixXd& m, const std::string& path, std::size_t first_line) {
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    if (!m.row(i).allFinite()) {
      throw DataError(path + ": row " + std::to_string(first_line + static_cast<std::size_t>(i)) +
                      ": non-finite value");
    }
  }
}

const Json& field(const Json& j, const char* key, std::string_view what) {
  if (!j.is_object() || !j.contains(key)) {
    throw ConfigError(std::string(what) + " is missing the field '" + key + "'");
  }
  return j.at(key);
}

double json_double(const Json& j, std::string_view what) {
  if (j.is_null()) return std::numeric_limits<double>::infinity();
  if (!j.is_number()) throw ConfigError(std::string(what) + " must be a number");
  return j.get<double>();
}

}  // namespace

std::string format_double(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buffer[64];
  const auto result = std::to_chars(buffer, buffer + sizeof buffer, value);
  return std::string(buffer, result.ptr);
}

double parse_double(std::string_view text, std::string_view where) {
  text = trim(text);
  if (text == "nan") return std::numeric_limits<double>::quiet_NaN();
  if (text == "inf") return std::numeric_limits<double>::infinity();
  if (text == "-inf") return -std::numeric_limits<double>::infinity();
  if (!text.empty() && text.front() == '+') text.remove_prefix(1);
  double value = 0.0;
  const auto result = std::from_chars(text.data(), text.data() + text.size(), value);
  if (text.empty() || result.ec != std::errc() || result.ptr != text.data() + text.size()) {
    throw DataError(std::string(where) + ": malformed number '" + std::string(text) + "'");
  }
  return value;
}

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const std::string& path, std::string_view text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ConfigError("cannot write '" + path + "'");
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw ConfigError("failed writing '" + path + "'");
}

Eigen::MatrixXd read_numeric_csv(const std::string& path, bool header) {
  const std::string text = read_text(path);
  const CsvTable table = parse_csv(text, header, path);
  if (table.rows.empty()) throw DataError(path + ": no data rows");
  return to_matrix(table.rows, table.rows.front().size());
}

LabeledData read_labeled_csv(const std::string& path) {
  const std::string text = read_text(path);
  const CsvTable table = parse_csv(text, true, path);
  check_header(table, path, true);
  const std::size_t width = table.header.size();
  if (!table.rows.empty() && table.rows.front().size() != width) {
    throw DataError(path + ": data rows have " + std::to_string(table.rows.front().size()) +
                    " fields but the header has " + std::to_string(width));
  }
  const Eigen::MatrixXd m = to_matrix(table.rows, width);
  check_finite(m, path, 2);
  LabeledData out;
  out.x = m.leftCols(m.cols() - 1);
  out.y = m.col(m.cols() - 1);
  return out;
}

Points read_unlabeled_csv(const std::string& path) {
  const std::string text = read_text(path);
  const CsvTable table = parse_csv(text, true, path);
  check_header(table, path, false);
  const std::size_t width = table.header.size();
  if (!table.rows.empty() && table.rows.front().size() != width) {
    throw DataError(path + ": data rows have " + std::to_string(table.rows.front().size()) +
                    " fields but the header has " + std::to_string(width));
  }
  Points m = to_matrix(table.rows, width);
  check_finite(m, path, 2);
  return m;
}

std::string labeled_csv(const Points& x, const Eigen::VectorXd& y) {
  std::string out;
  for (Eigen::Index c = 0; c < x.cols(); ++c) out += "x" + std::to_string(c + 1) + ",";
  out += "y\n";
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    for (Eigen::Index c = 0; c < x.cols(); ++c) out += format_double(x(i, c)) + ",";
    out += format_double(y(i)) + "\n";
  }
  return out;
}

std::string unlabeled_csv(const Points& x) {
  std::string out;
  for (Eigen::Index c = 0; c < x.cols(); ++c) out += (c ? ",x" : "x") + std::to_string(c + 1);
  out += "\n";
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    for (Eigen::Index c = 0; c < x.cols(); ++c) out += (c ? "," : "") + format_double(x(i, c));
    out += "\n";
  }
  return out;
}

std::string predictions_csv(const Eigen::VectorXd& predictions) {
  std::string out = "index,prediction\n";
  for (Eigen::Index i = 0; i < predictions.size(); ++i) {
    out += std::to_string(i) + "," + format_double(predictions(i)) + "\n";
  }
  return out;
}

Json number_or_null(double value) { return std::isfinite(value) ? Json(value) : Json(nullptr); }

Json matrix_to_json(const Eigen::MatrixXd& m) {
  Json rows = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    Json row = Json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(i, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

Eigen::MatrixXd matrix_from_json(const Json& j, std::string_view what) {
  if (!j.is_array()) throw ConfigError(std::string(what) + " must be an array of rows");
  const auto rows = static_cast<Eigen::Index>(j.size());
  const auto cols = rows > 0 && j[0].is_array() ? static_cast<Eigen::Index>(j[0].size()) : 0;
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    const auto& row = j[static_cast<std::size_t>(i)];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols) {
      throw ConfigError(std::string(what) + ": row " + std::to_string(i) + " has the wrong length");
    }
    for (Eigen::Index c = 0; c < cols; ++c) m(i, c) = json_double(row[static_cast<std::size_t>(c)], what);
  }
  return m;
}

Json vector_to_json(const Eigen::VectorXd& v) {
  Json out = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(number_or_null(v(i)));
  return out;
}

Eigen::VectorXd vector_from_json(const Json& j, std::string_view what) {
  if (!j.is_array()) throw ConfigError(std::string(what) + " must be an array");
  Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Eigen::Index>(i)) = json_double(j[i], what);
  return v;
}

namespace {

Json kernel_to_json(const KernelSpec& k) {
  switch (k.type) {
    case KernelSpec::Type::Gaussian: return {{"type", "gaussian"}, {"gamma", k.gamma}};
    case KernelSpec::Type::Linear: return {{"type", "linear"}};
    case KernelSpec::Type::Precomputed: return {{"type", "precomputed"}};
  }
  return {};
}

KernelSpec kernel_from_json(const Json& j) {
  KernelSpec k;
  const auto type = field(j, "type", "kernel").get<std::string>();
  if (type == "gaussian") {
    k.type = KernelSpec::Type::Gaussian;
    k.gamma = json_double(field(j, "gamma", "gaussian kernel"), "kernel gamma");
  } else if (type == "linear") {
    k.type = KernelSpec::Type::Linear;
  } else if (type == "precomputed") {
    k.type = KernelSpec::Type::Precomputed;
  } else {
    throw ConfigError("unknown kernel type '" + type + "'");
  }
  return k;
}

}  // namespace

Json dictionary_to_json(const FeatureDictionary& dict) {
  Json params = Json::object();
  std::visit(
      [&](const auto& p) {
        using P = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<P, FeatureDictionary::HaarParams>) {
          params["levels"] = p.levels;
          params["domain"] = {p.domain.lower, p.domain.upper};
        } else if constexpr (std::is_same_v<P, FeatureDictionary::GaussianParams>) {
          params["centers"] = matrix_to_json(p.centers);
          if (dict.kind() == DictionaryKind::GaussianKernel) {
            params["gamma"] = p.scales.front();
          } else {
            params["scales"] = p.scales;
          }
        } else if constexpr (std::is_same_v<P, FeatureDictionary::KernelPcaParams>) {
          params["design"] = matrix_to_json(p.design);
          params["kernel"] = kernel_to_json(p.kernel);
          if (p.kernel.type == KernelSpec::Type::Precomputed) params["gram"] = matrix_to_json(p.gram);
          params["eigenvalues"] = vector_to_json(p.eigenvalues);
          params["eigenvectors"] = matrix_to_json(p.eigenvectors);
        } else if constexpr (std::is_same_v<P, FeatureDictionary::ExplicitParams>) {
          params["points"] = matrix_to_json(p.points);
          params["values"] = matrix_to_json(p.values);
        }
      },
      dict.params());
  return {{"kind", to_string(dict.kind())}, {"m", dict.size()}, {"parameters", params}};
}

FeatureDictionary dictionary_from_json(const Json& j) {
  const auto kind = dictionary_kind_from_string(field(j, "kind", "dictionary").get<std::string>());
  const Json empty = Json::object();
  const Json& p = j.contains("parameters") ? j.at("parameters") : empty;
  const std::size_t m = j.contains("m") ? j.at("m").get<std::size_t>() : 0;
  auto checked = [&](FeatureDictionary dict) {
    if (m != 0 && dict.size() != m) {
      throw ConfigError("dictionary declares m = " + std::to_string(m) + " but its parameters give " +
                        std::to_string(dict.size()));
    }
    return dict;
  };
  switch (kind) {
    case DictionaryKind::Trigonometric:
      if (m == 0) throw ConfigError("trigonometric dictionary needs m >= 1");
      return FeatureDictionary::trigonometric(m);
    case DictionaryKind::Haar: {
      Interval domain;
      if (p.contains("domain")) {
        const auto d = p.at("domain");
        if (!d.is_array() || d.size() != 2) throw ConfigError("haar domain must be [lower, upper]");
        domain = {d[0].get<double>(), d[1].get<double>()};
      }
      int levels = 0;
      if (p.contains("levels")) {
        levels = p.at("levels").get<int>();
      } else {
        if (m < 2 || (m & (m - 1)) != 0) throw ConfigError("haar dictionary needs levels or a power-of-two m >= 2");
        levels = std::countr_zero(m) - 1;
      }
      return checked(FeatureDictionary::haar(levels, domain));
    }
    case DictionaryKind::GaussianKernel:
      return checked(FeatureDictionary::gaussian_kernel(matrix_from_json(field(p, "centers", "gaussian_kernel"),
                                                                         "centers"),
                                                        json_double(field(p, "gamma", "gaussian_kernel"), "gamma")));
    case DictionaryKind::MultiscaleGaussian:
      return checked(FeatureDictionary::multiscale_gaussian(
          matrix_from_json(field(p, "centers", "multiscale_gaussian"), "centers"),
          field(p, "scales", "multiscale_gaussian").get<std::vector<double>>()));
    case DictionaryKind::KernelPCA: {
      const Points design = matrix_from_json(field(p, "design", "kernel_pca"), "design");
      const KernelSpec kernel = kernel_from_json(field(p, "kernel", "kernel_pca"));
      const Eigen::MatrixXd gram =
          p.contains("gram") ? matrix_from_json(p.at("gram"), "gram") : Eigen::MatrixXd();
      if (p.contains("eigenvectors")) {
        return checked(FeatureDictionary::kernel_pca_restore(
            design, kernel, gram, vector_from_json(field(p, "eigenvalues", "kernel_pca"), "eigenvalues"),
            matrix_from_json(p.at("eigenvectors"), "eigenvectors")));
      }
      const std::size_t top = p.contains("top") ? p.at("top").get<std::size_t>() : m;
      if (kernel.type == KernelSpec::Type::Precomputed) {
        return checked(FeatureDictionary::kernel_pca_from_gram(design, gram, top));
      }
      return checked(FeatureDictionary::kernel_pca(design, kernel, top));
    }
    case DictionaryKind::ExplicitMatrix:
      return checked(FeatureDictionary::explicit_matrix(matrix_from_json(field(p, "points", "explicit_matrix"), "points"),
                                                        matrix_from_json(field(p, "values", "explicit_matrix"), "values")));
  }
  throw ConfigError("unsupported dictionary kind");
}

Json bound_spec_to_json(const BoundSpec& spec) {
  Json j = {{"variant", to_string(spec.variant)}, {"epsilon", spec.epsilon}, {"mode", to_string(spec.mode)}};
  if (spec.B) j["B"] = *spec.B;
  if (spec.sigma2) j["sigma2"] = *spec.sigma2;
  if (!spec.subexp.empty()) {
    Json list = Json::array();
    for (const auto& s : spec.subexp) list.push_back({{"beta_h", s.beta}, {"B_h", s.bound}});
    j["subexp"] = list;
  }
  if (spec.subexp_y) j["subexp_y"] = {{"b_Y", spec.subexp_y->beta}, {"B_Y", spec.subexp_y->bound}};
  return j;
}

BoundSpec bound_spec_from_json(const Json& j) {
  if (!j.is_object()) throw ConfigError("bound spec must be an object");
  BoundSpec spec;
  spec.variant = bound_variant_from_string(field(j, "variant", "bound spec").get<std::string>());
  spec.epsilon = json_double(field(j, "epsilon", "bound spec"), "epsilon");
  if (j.contains("mode")) spec.mode = bound_mode_from_string(j.at("mode").get<std::string>());
  if (j.contains("B")) spec.B = json_double(j.at("B"), "B");
  if (j.contains("sigma2")) spec.sigma2 = json_double(j.at("sigma2"), "sigma2");
  if (j.contains("subexp")) {
    for (const auto& s : j.at("subexp")) {
      spec.subexp.push_back({json_double(field(s, "beta_h", "subexp"), "beta_h"),
                             json_double(field(s, "B_h", "subexp"), "B_h")});
    }
  }
  if (j.contains("subexp_y")) {
    const auto& s = j.at("subexp_y");
    spec.subexp_y = SubExponential{json_double(field(s, "b_Y", "subexp_y"), "b_Y"),
                                   json_double(field(s, "B_Y", "subexp_y"), "B_Y")};
  }
  spec.validate();
  return spec;
}

Json artifact_header(const Json& config, std::uint64_t seed) {
  return {{"tool_version", kToolVersion}, {"config", config}, {"seed", seed}};
}

Json model_to_json(const SelectionModel& model, const Json& config, std::uint64_t seed) {
  Json j = artifact_header(config, seed);
  if (model.dictionary) j["dictionary"] = dictionary_to_json(*model.dictionary);
  j["variant"] = to_string(model.variant);
  j["epsilon"] = model.epsilon;
  j["kappa"] = model.kappa;
  j["schedule"] = to_string(model.schedule);
  j["stopped_at"] = model.stopped_at();
  j["coefficients"] = vector_to_json(model.coefficients);
  Json trace = Json::array();
  for (const auto& r : model.trace) {
    trace.push_back({{"step", r.step},
                     {"feature", r.feature},
                     {"gamma", r.gamma},
                     {"tau", number_or_null(r.tau)},
                     {"delta", r.delta},
                     {"update", r.update}});
  }
  j["trace"] = trace;
  return j;
}

SelectionModel model_from_json(const Json& j) {
  SelectionModel model;
  model.dictionary = std::make_shared<const FeatureDictionary>(dictionary_from_json(field(j, "dictionary", "model")));
  model.variant = bound_variant_from_string(field(j, "variant", "model").get<std::string>());
  model.epsilon = json_double(field(j, "epsilon", "model"), "epsilon");
  model.kappa = json_double(field(j, "kappa", "model"), "kappa");
  model.schedule = schedule_from_string(field(j, "schedule", "model").get<std::string>());
  model.coefficients = vector_from_json(field(j, "coefficients", "model"), "coefficients");
  if (static_cast<std::size_t>(model.coefficients.size()) != model.dictionary->size()) {
    throw ConfigError("model coefficients do not match the dictionary size");
  }
  for (const auto& r : field(j, "trace", "model")) {
    IterationRecord rec;
    rec.step = r.at("step").get<std::size_t>();
    rec.feature = r.at("feature").get<std::size_t>();
    rec.gamma = json_double(r.at("gamma"), "gamma");
    rec.tau = json_double(r.at("tau"), "tau");
    rec.delta = json_double(r.at("delta"), "delta");
    rec.update = json_double(r.at("update"), "update");
    model.trace.push_back(rec);
  }
  return model;
}

Json report_to_json(const ExperimentReport& report, const Json& config, std::uint64_t seed) {
  Json j = artifact_header(config, seed);
  j["kind"] = report.kind;
  j["partial"] = report.partial;
  auto optional = [](const std::optional<double>& v) { return v ? number_or_null(*v) : Json(nullptr); };
  if (!report.per_n.empty()) {
    Json per_n = Json::array();
    for (const auto& s : report.per_n) {
      per_n.push_back({{"N", s.N},
                       {"m", s.m},
                       {"epsilon", s.epsilon},
                       {"median_mse", s.median_mse},
                       {"replicates", s.replicates}});
    }
    j["per_n"] = per_n;
    j["slope"] = optional(report.slope);
    j["slope_stderr"] = optional(report.slope_stderr);
    j["slope_abscissa"] = "log(N / log N)";
    j["slope_ordinate"] = "log(median mse)";
  }
  if (report.coverage) j["coverage"] = *report.coverage;
  if (report.chain_frequency) j["chain_frequency"] = *report.chain_frequency;
  if (report.mean_test_mse) j["mean_test_mse"] = *report.mean_test_mse;
  if (report.mean_zero_mse) j["mean_zero_mse"] = *report.mean_zero_mse;
  Json rows = Json::array();
  for (const auto& r : report.rows) {
    Json row = {{"N", r.N}, {"replicate", r.replicate}, {"mse", number_or_null(r.mse)}};
    if (r.coverage_event) row["coverage_event"] = *r.coverage_event;
    row["seed"] = r.seed;
    row["selected"] = r.selected;
    if (r.zero_mse) row["zero_mse"] = *r.zero_mse;
    if (r.chain_holds) row["chain_holds"] = *r.chain_holds;
    rows.push_back(std::move(row));
  }
  j["rows"] = rows;
  j["warnings"] = report.warnings;
  return j;
}

std::string report_csv(const ExperimentReport& report) {
  std::string out = "N,replicate,mse,coverage_event,seed\n";
  for (const auto& r : report.rows) {
    out += std::to_string(r.N) + "," + std::to_string(r.replicate) + "," + format_double(r.mse) + ",";
    if (r.coverage_event) out += *r.coverage_event ? "1" : "0";
    out += "," + std::to_string(r.seed) + "\n";
  }
  return out;
}

std::string dump(const Json& j) { return j.dump(2) + "\n"; }

}  // namespace pacfs
