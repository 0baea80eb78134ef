#include "kann/report.hpp"

#include "kann/errors.hpp"
#include "kann/format.hpp"
#include "kann/schema_text.hpp"

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>

namespace kann {

using nlohmann::json;
using nlohmann::ordered_json;

std::string toolkit_version() { return KANN_VERSION; }

SpectrumSection make_spectrum(const EigenSystem &eig, double epsilon) {
  SpectrumSection out;
  out.epsilon = epsilon;
  out.condition = eig.condition;
  out.defective = eig.defective;
  for (std::size_t j = 0; j < eig.size(); ++j) {
    const Complex lambda = eig.lambdas(static_cast<Eigen::Index>(j));
    out.modes.push_back({j, lambda.real(), lambda.imag(), std::abs(lambda),
                         memory_horizon(lambda, epsilon)});
  }
  return out;
}

// ---------------------------------------------------------------------------
// Serialization

namespace {

ordered_json horizon_json(const MemoryHorizon &h) {
  if (h.finite())
    return h.steps;
  return h.to_string();
}

MemoryHorizon horizon_from(const json &j) {
  if (j.is_number())
    return {MemoryHorizon::Kind::Finite, j.get<double>()};
  const auto text = j.get<std::string>();
  return {text == "inf" ? MemoryHorizon::Kind::Infinite : MemoryHorizon::Kind::Unstable, 0.0};
}

std::string variant_name(ProjectorVariant v) {
  return v == ProjectorVariant::Modulus ? "modulus" : "real-part";
}

std::optional<std::string> opt_string(const json &j, const char *key) {
  if (!j.contains(key))
    return std::nullopt;
  return j.at(key).get<std::string>();
}

} // namespace

ordered_json to_json(const AnalysisReport &r) {
  ordered_json j;
  j["toolkit_version"] = r.toolkit_version;
  if (r.manifest) {
    const auto &m = *r.manifest;
    ordered_json mj;
    mj["name"] = m.name;
    mj["tensor_path"] = m.tensor_path;
    if (m.labels_path)
      mj["labels_path"] = *m.labels_path;
    if (m.mask_path)
      mj["mask_path"] = *m.mask_path;
    if (m.readout_path)
      mj["readout_path"] = *m.readout_path;
    if (m.readout_bias_path)
      mj["readout_bias_path"] = *m.readout_bias_path;
    if (m.readout_kind)
      mj["readout_kind"] = to_string(*m.readout_kind);
    j["manifest"] = std::move(mj);
  }
  if (r.basis) {
    j["basis"] = {{"method", to_string(r.basis->method)},
                  {"r", r.basis->rank},
                  {"singular_values", r.basis->singular_values},
                  {"include_padding", r.basis->include_padding}};
  }
  if (r.op) {
    ordered_json oj;
    oj["fit_residual"] = r.op->fit_residual;
    oj["matrix_file"] = r.op->matrix_file;
    oj["basis_file"] = r.op->basis_file;
    if (r.op->mean_file)
      oj["mean_file"] = *r.op->mean_file;
    j["operator"] = std::move(oj);
  }
  if (r.spectrum) {
    ordered_json modes = ordered_json::array();
    for (const auto &e : r.spectrum->modes)
      modes.push_back({{"index", e.index},
                       {"lambda_re", e.lambda_re},
                       {"lambda_im", e.lambda_im},
                       {"modulus", e.modulus},
                       {"memory_horizon", horizon_json(e.horizon)}});
    ordered_json sj;
    sj["epsilon"] = r.spectrum->epsilon;
    // A singular eigenvector matrix has no finite condition; the key is omitted.
    if (std::isfinite(r.spectrum->condition))
      sj["condition"] = r.spectrum->condition;
    sj["defective"] = r.spectrum->defective;
    sj["modes"] = std::move(modes);
    j["spectrum"] = std::move(sj);
  }
  if (r.dominant_modes)
    j["dominant_modes"] = *r.dominant_modes;
  if (r.projection) {
    ordered_json pj;
    pj["modes"] = r.projection->modes;
    if (r.projection->magnitudes_file)
      pj["magnitudes_file"] = *r.projection->magnitudes_file;
    if (r.projection->projector_file)
      pj["projector_file"] = *r.projection->projector_file;
    if (r.projection->projected_file)
      pj["projected_file"] = *r.projection->projected_file;
    if (r.projection->variant)
      pj["variant"] = variant_name(*r.projection->variant);
    j["projection"] = std::move(pj);
  }
  if (r.errors) {
    ordered_json ej;
    ej["steps"] = r.errors->steps;
    ej["relative_error"] = r.errors->relative_error;
    ej["separability_residual"] = r.errors->separability_residual;
    if (r.errors->multi_step_relative_error)
      ej["multi_step_relative_error"] = *r.errors->multi_step_relative_error;
    j["errors"] = std::move(ej);
  }
  if (r.agreement) {
    j["agreement"] = {{"total", r.agreement->total},
                      {"matching", r.agreement->matching},
                      {"rate", r.agreement->rate()},
                      {"confusion", r.agreement->confusion}};
  }
  if (r.silhouette) {
    ordered_json sj;
    sj["dim"] = r.silhouette->dim;
    if (r.silhouette->curves_file)
      sj["curves_file"] = *r.silhouette->curves_file;
    ordered_json curves = ordered_json::object();
    for (const auto &[name, values] : r.silhouette->curves)
      curves[name] = values;
    sj["curves"] = std::move(curves);
    j["silhouette"] = std::move(sj);
  }
  return j;
}

AnalysisReport report_from_json(const json &j) {
  validate_report_json(j);
  AnalysisReport r;
  r.toolkit_version = j.at("toolkit_version").get<std::string>();
  if (j.contains("manifest")) {
    const auto &mj = j.at("manifest");
    DatasetManifest m;
    m.name = mj.at("name").get<std::string>();
    m.tensor_path = mj.at("tensor_path").get<std::string>();
    m.labels_path = opt_string(mj, "labels_path");
    m.mask_path = opt_string(mj, "mask_path");
    m.readout_path = opt_string(mj, "readout_path");
    m.readout_bias_path = opt_string(mj, "readout_bias_path");
    if (auto kind = opt_string(mj, "readout_kind"))
      m.readout_kind = parse_readout_kind(*kind);
    r.manifest = std::move(m);
  }
  if (j.contains("basis")) {
    const auto &bj = j.at("basis");
    BasisSection b;
    b.method = parse_basis_method(bj.at("method").get<std::string>());
    b.rank = bj.at("r").get<std::size_t>();
    b.singular_values = bj.at("singular_values").get<std::vector<double>>();
    b.include_padding = bj.value("include_padding", false);
    r.basis = std::move(b);
  }
  if (j.contains("operator")) {
    const auto &oj = j.at("operator");
    r.op = OperatorSection{oj.at("fit_residual").get<double>(),
                           oj.at("matrix_file").get<std::string>(),
                           oj.at("basis_file").get<std::string>(), opt_string(oj, "mean_file")};
  }
  if (j.contains("spectrum")) {
    const auto &sj = j.at("spectrum");
    SpectrumSection s;
    s.epsilon = sj.at("epsilon").get<double>();
    s.condition = sj.value("condition", std::numeric_limits<double>::infinity());
    s.defective = sj.value("defective", false);
    for (const auto &e : sj.at("modes"))
      s.modes.push_back({e.at("index").get<std::size_t>(), e.at("lambda_re").get<double>(),
                         e.at("lambda_im").get<double>(), e.at("modulus").get<double>(),
                         horizon_from(e.at("memory_horizon"))});
    r.spectrum = std::move(s);
  }
  if (j.contains("dominant_modes"))
    r.dominant_modes = j.at("dominant_modes").get<ModeIndexSet>();
  if (j.contains("projection")) {
    const auto &pj = j.at("projection");
    ProjectionSection p;
    p.modes = pj.at("modes").get<ModeIndexSet>();
    p.magnitudes_file = opt_string(pj, "magnitudes_file");
    p.projector_file = opt_string(pj, "projector_file");
    p.projected_file = opt_string(pj, "projected_file");
    if (auto v = opt_string(pj, "variant"))
      p.variant = *v == "modulus" ? ProjectorVariant::Modulus : ProjectorVariant::RealPart;
    r.projection = std::move(p);
  }
  if (j.contains("errors")) {
    const auto &ej = j.at("errors");
    ErrorsSection e;
    e.steps = ej.value("steps", std::size_t{1});
    e.relative_error = ej.at("relative_error").get<double>();
    e.separability_residual = ej.at("separability_residual").get<double>();
    if (ej.contains("multi_step_relative_error"))
      e.multi_step_relative_error = ej.at("multi_step_relative_error").get<double>();
    r.errors = e;
  }
  if (j.contains("agreement")) {
    const auto &aj = j.at("agreement");
    AgreementReport a;
    a.total = aj.at("total").get<std::size_t>();
    a.matching = aj.at("matching").get<std::size_t>();
    a.confusion = aj.at("confusion").get<std::vector<std::vector<std::size_t>>>();
    r.agreement = std::move(a);
  }
  if (j.contains("silhouette")) {
    const auto &sj = j.at("silhouette");
    SilhouetteSection s;
    s.dim = sj.at("dim").get<std::size_t>();
    s.curves_file = opt_string(sj, "curves_file");
    for (const auto &[name, values] : sj.at("curves").items())
      s.curves[name] = values.get<std::vector<double>>();
    r.silhouette = std::move(s);
  }
  return r;
}

std::string dump_report(const AnalysisReport &report) { return to_json(report).dump(2) + "\n"; }

AnalysisReport load_report(const std::filesystem::path &path) {
  std::ifstream in(path);
  if (!in)
    throw IoError("cannot open report '" + path.string() + "': " + std::strerror(errno));
  json j;
  try {
    in >> j;
  } catch (const json::exception &e) {
    throw ValidationError("report '" + path.string() + "': " + e.what());
  }
  return report_from_json(j);
}

void save_report(const AnalysisReport &report, const std::filesystem::path &path) {
  const auto text = dump_report(report);
  validate_report_json(json::parse(text));
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out)
    throw IoError("cannot write report '" + path.string() + "': " + std::strerror(errno));
  out << text;
  if (!out)
    throw IoError("write failed for report '" + path.string() + "'");
}

// ---------------------------------------------------------------------------
// Schema validation

const json &report_schema() {
  static const json schema = json::parse(detail::kReportSchemaText);
  return schema;
}

namespace {

bool has_type(const json &v, const std::string &type) {
  if (type == "object")
    return v.is_object();
  if (type == "array")
    return v.is_array();
  if (type == "string")
    return v.is_string();
  if (type == "boolean")
    return v.is_boolean();
  if (type == "null")
    return v.is_null();
  if (type == "number")
    return v.is_number();
  if (type == "integer")
    return v.is_number_integer() ||
           (v.is_number_float() && std::floor(v.get<double>()) == v.get<double>());
  return false;
}

void check(const json &v, const json &schema, const std::string &path,
           std::vector<std::string> &out) {
  const auto where = path.empty() ? std::string("/") : path;

  if (auto it = schema.find("anyOf"); it != schema.end()) {
    bool any = false;
    for (const auto &alt : *it) {
      std::vector<std::string> sub;
      check(v, alt, path, sub);
      if (sub.empty()) {
        any = true;
        break;
      }
    }
    if (!any)
      out.push_back(where + ": matches none of the allowed alternatives");
  }

  if (auto it = schema.find("type"); it != schema.end()) {
    bool ok = false;
    if (it->is_array()) {
      for (const auto &t : *it)
        ok = ok || has_type(v, t.get<std::string>());
    } else {
      ok = has_type(v, it->get<std::string>());
    }
    if (!ok) {
      out.push_back(where + ": expected type " + it->dump() + ", got " + v.type_name());
      return;
    }
  }

  if (auto it = schema.find("enum"); it != schema.end()) {
    if (std::find(it->begin(), it->end(), v) == it->end())
      out.push_back(where + ": value " + v.dump() + " not in " + it->dump());
  }

  if (auto it = schema.find("minimum"); it != schema.end() && v.is_number()) {
    if (v.get<double>() < it->get<double>())
      out.push_back(where + ": " + v.dump() + " below minimum " + it->dump());
  }

  if (v.is_object()) {
    if (auto it = schema.find("required"); it != schema.end())
      for (const auto &key : *it)
        if (!v.contains(key.get<std::string>()))
          out.push_back(where + ": missing required property '" + key.get<std::string>() + "'");

    const auto props = schema.find("properties");
    const auto extra = schema.find("additionalProperties");
    for (const auto &[key, value] : v.items()) {
      const auto child = path + "/" + key;
      if (props != schema.end() && props->contains(key)) {
        check(value, props->at(key), child, out);
      } else if (extra != schema.end()) {
        if (extra->is_boolean()) {
          if (!extra->get<bool>())
            out.push_back(where + ": unexpected property '" + key + "'");
        } else {
          check(value, *extra, child, out);
        }
      }
    }
  }

  if (v.is_array()) {
    if (auto it = schema.find("items"); it != schema.end())
      for (std::size_t i = 0; i < v.size(); ++i)
        check(v[i], *it, path + "/" + std::to_string(i), out);
  }
}

} // namespace

std::vector<std::string> schema_violations(const json &instance, const json &schema) {
  std::vector<std::string> out;
  check(instance, schema, "", out);
  return out;
}

void validate_report_json(const json &instance) {
  const auto problems = schema_violations(instance, report_schema());
  if (problems.empty())
    return;
  std::string msg = "report does not match schema: " + problems.front();
  if (problems.size() > 1)
    msg += " (and " + std::to_string(problems.size() - 1) + " more)";
  throw ValidationError(msg);
}

// ---------------------------------------------------------------------------
// CSV

std::string csv_text(const CsvRow &header, const std::vector<CsvRow> &rows) {
  std::ostringstream out;
  const auto emit = [&](const CsvRow &row) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i)
        out << ',';
      out << row[i];
    }
    out << '\n';
  };
  emit(header);
  for (const auto &row : rows) {
    if (row.size() != header.size())
      throw DimensionError("csv: row has " + std::to_string(row.size()) + " fields, header has " +
                           std::to_string(header.size()));
    emit(row);
  }
  return out.str();
}

void write_csv(const std::filesystem::path &path, const CsvRow &header,
               const std::vector<CsvRow> &rows) {
  const auto text = csv_text(header, rows);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out)
    throw IoError("cannot write '" + path.string() + "': " + std::strerror(errno));
  out << text;
  if (!out)
    throw IoError("write failed for '" + path.string() + "'");
}

void write_curves_csv(const std::filesystem::path &path,
                      const std::map<std::string, std::vector<double>> &curves) {
  CsvRow header{"t"};
  std::size_t n = 0;
  for (const auto &[name, values] : curves) {
    header.push_back(name);
    if (header.size() == 2)
      n = values.size();
    else if (values.size() != n)
      throw DimensionError("curves csv: curve '" + name + "' has a different length");
  }
  std::vector<CsvRow> rows(n);
  for (std::size_t t = 0; t < n; ++t) {
    rows[t].push_back(std::to_string(t));
    for (const auto &[name, values] : curves)
      rows[t].push_back(format_double(values[t]));
  }
  write_csv(path, header, rows);
}

void write_spectrum_csv(const std::filesystem::path &path, const SpectrumSection &spectrum) {
  std::vector<CsvRow> rows;
  for (const auto &e : spectrum.modes)
    rows.push_back({std::to_string(e.index), format_double(e.lambda_re), format_double(e.lambda_im),
                    format_double(e.modulus), e.horizon.to_string()});
  write_csv(path, {"index", "re", "im", "modulus", "horizon"}, rows);
}

void write_matrix_csv(const std::filesystem::path &path, const RealMatrix &m,
                      const std::string &row_label, const std::string &col_prefix) {
  CsvRow header{row_label};
  for (Eigen::Index c = 0; c < m.cols(); ++c)
    header.push_back(col_prefix + std::to_string(c));
  std::vector<CsvRow> rows(static_cast<std::size_t>(m.rows()));
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    auto &row = rows[static_cast<std::size_t>(r)];
    row.push_back(std::to_string(r));
    for (Eigen::Index c = 0; c < m.cols(); ++c)
      row.push_back(format_double(m(r, c)));
  }
  write_csv(path, header, rows);
}

} // namespace kann
