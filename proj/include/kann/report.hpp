#pragma once

// Machine-readable analysis report, its JSON schema, and CSV output helpers.

#include "kann/metrics.hpp"
#include "kann/spectral.hpp"
#include "kann/state_io.hpp"

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace kann {

std::string toolkit_version();

struct BasisSection {
  BasisMethod method = BasisMethod::Svd;
  std::size_t rank = 0;
  std::vector<double> singular_values;
  bool include_padding = false;

  friend bool operator==(const BasisSection &, const BasisSection &) = default;
};

struct OperatorSection {
  double fit_residual = 0;
  std::string matrix_file;
  std::string basis_file;
  std::optional<std::string> mean_file;

  friend bool operator==(const OperatorSection &, const OperatorSection &) = default;
};

struct SpectrumEntry {
  std::size_t index = 0;
  double lambda_re = 0;
  double lambda_im = 0;
  double modulus = 0;
  MemoryHorizon horizon;

  friend bool operator==(const SpectrumEntry &a, const SpectrumEntry &b) {
    return a.index == b.index && a.lambda_re == b.lambda_re && a.lambda_im == b.lambda_im &&
           a.modulus == b.modulus && a.horizon.kind == b.horizon.kind &&
           a.horizon.steps == b.horizon.steps;
  }
};

struct SpectrumSection {
  double epsilon = kDefaultEpsilon;
  double condition = 1;
  bool defective = false;
  std::vector<SpectrumEntry> modes; // modulus descending

  friend bool operator==(const SpectrumSection &, const SpectrumSection &) = default;
};

SpectrumSection make_spectrum(const EigenSystem &eig, double epsilon = kDefaultEpsilon);

struct ProjectionSection {
  ModeIndexSet modes;
  std::optional<std::string> magnitudes_file;
  std::optional<std::string> projector_file;
  std::optional<std::string> projected_file;
  std::optional<ProjectorVariant> variant;

  friend bool operator==(const ProjectionSection &, const ProjectionSection &) = default;
};

struct ErrorsSection {
  std::size_t steps = 1;
  double relative_error = 0;
  double separability_residual = 0;
  std::optional<double> multi_step_relative_error;

  friend bool operator==(const ErrorsSection &, const ErrorsSection &) = default;
};

struct SilhouetteSection {
  std::size_t dim = 5;
  std::optional<std::string> curves_file;
  std::map<std::string, std::vector<double>> curves; // embedding name -> cumulative curve

  friend bool operator==(const SilhouetteSection &, const SilhouetteSection &) = default;
};

struct AnalysisReport {
  std::string toolkit_version = kann::toolkit_version();
  std::optional<DatasetManifest> manifest;
  std::optional<BasisSection> basis;
  std::optional<OperatorSection> op;
  std::optional<SpectrumSection> spectrum;
  std::optional<ModeIndexSet> dominant_modes;
  std::optional<ProjectionSection> projection;
  std::optional<ErrorsSection> errors;
  std::optional<AgreementReport> agreement;
  std::optional<SilhouetteSection> silhouette;

  friend bool operator==(const AnalysisReport &, const AnalysisReport &) = default;
};

nlohmann::ordered_json to_json(const AnalysisReport &report);
/// Validates against the schema first; throws ValidationError naming the path.
AnalysisReport report_from_json(const nlohmann::json &j);

/// Serialized form: two-space indent, trailing newline.
std::string dump_report(const AnalysisReport &report);

AnalysisReport load_report(const std::filesystem::path &path);
void save_report(const AnalysisReport &report, const std::filesystem::path &path);

// ---------------------------------------------------------------------------
// Schema

const nlohmann::json &report_schema();

/// Violations as "path: message" strings; empty when the instance validates.
/// Understands type, enum, minimum, required, properties,
/// additionalProperties, items and anyOf.
std::vector<std::string> schema_violations(const nlohmann::json &instance,
                                           const nlohmann::json &schema);

void validate_report_json(const nlohmann::json &instance);

// ---------------------------------------------------------------------------
// CSV

using CsvRow = std::vector<std::string>;

std::string csv_text(const CsvRow &header, const std::vector<CsvRow> &rows);
void write_csv(const std::filesystem::path &path, const CsvRow &header,
               const std::vector<CsvRow> &rows);

/// Header t,<names...>, one row per time step.
void write_curves_csv(const std::filesystem::path &path,
                      const std::map<std::string, std::vector<double>> &curves);

/// Header index,re,im,modulus,horizon.
void write_spectrum_csv(const std::filesystem::path &path, const SpectrumSection &spectrum);

/// Header sample,t0..t{n-1}.
void write_matrix_csv(const std::filesystem::path &path, const RealMatrix &m,
                      const std::string &row_label = "sample", const std::string &col_prefix = "t");

} // namespace kann
