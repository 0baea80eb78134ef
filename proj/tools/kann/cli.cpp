#include "kann/cli.hpp"

#include "kann/errors.hpp"
#include "kann/format.hpp"
#include "kann/harness.hpp"
#include "kann/koopman.hpp"
#include "kann/metrics.hpp"
#include "kann/report.hpp"
#include "kann/spectral.hpp"
#include "kann/state_io.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>

namespace kann::cli {
namespace fs = std::filesystem;

namespace {

constexpr std::size_t kDefaultDominantCount = 4;

struct Globals {
  std::string manifest;
  std::string out = ".";
  std::uint64_t seed = 0;
  std::optional<std::size_t> rank;
  double epsilon = kDefaultEpsilon;
  std::string basis = "svd";
  bool verbose = false;
};

struct Context {
  Globals g;
  std::ostream &out;
  std::ostream &err;

  void log(const std::string &msg) const {
    if (g.verbose)
      err << "kann: " << msg << '\n';
  }

  fs::path out_dir() const {
    fs::path dir(g.out);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec)
      throw IoError("cannot create output directory '" + dir.string() + "': " + ec.message());
    return dir;
  }

  fs::path manifest_path(const std::string &command) const {
    if (g.manifest.empty())
      throw ArgumentError(command + ": --manifest is required");
    return g.manifest;
  }
};

// Files written by `fit` and read back by later commands.
constexpr const char *kMatrixFile = "C.npy";
constexpr const char *kBasisFile = "B.npy";
constexpr const char *kSingularFile = "singular_values.npy";
constexpr const char *kMeanFile = "mean.npy";
constexpr const char *kReportFile = "report.json";

DatasetManifest echo(DatasetManifest m) {
  m.base_dir.clear();
  return m;
}

AnalysisReport load_or_new_report(const fs::path &dir) {
  const auto path = dir / kReportFile;
  if (fs::exists(path))
    return load_report(path);
  return AnalysisReport{};
}

KoopmanOperator load_operator(const fs::path &dir) {
  for (const char *name : {kMatrixFile, kBasisFile})
    if (!fs::exists(dir / name))
      throw IoError("missing operator file '" + (dir / name).string() + "' (run fit first)");
  KoopmanOperator op;
  op.matrix = load_matrix(dir / kMatrixFile);
  op.basis.vectors = load_matrix(dir / kBasisFile);
  if (op.matrix.rows() != op.matrix.cols() || op.matrix.rows() != op.basis.vectors.cols())
    throw DimensionError("operator files disagree: C is " + std::to_string(op.matrix.rows()) + "x" +
                         std::to_string(op.matrix.cols()) + ", B has " +
                         std::to_string(op.basis.vectors.cols()) + " columns");
  if (fs::exists(dir / kSingularFile))
    op.basis.singular_values = load_vector(dir / kSingularFile);
  else
    op.basis.singular_values = RealVector::Zero(op.basis.vectors.cols());
  if (fs::exists(dir / kMeanFile)) {
    op.basis.method = BasisMethod::PcaCentered;
    op.basis.mean = load_vector(dir / kMeanFile);
  }
  if (auto report = dir / kReportFile; fs::exists(report)) {
    const auto r = load_report(report);
    if (r.op)
      op.fit_residual = r.op->fit_residual;
  }
  return op;
}

void check_dims(const HiddenStateTensor &h, const KoopmanOperator &op) {
  if (h.dim() != op.basis.dim())
    throw DimensionError("states have dimension " + std::to_string(h.dim()) +
                         " but the fitted basis expects " + std::to_string(op.basis.dim()));
}

// Ranked by mean projection magnitude over the states when they are at hand,
// by |lambda| otherwise.
ModeIndexSet default_modes(const EigenSystem &eig, const HiddenStateTensor *h = nullptr,
                           const SpectralBasis *basis = nullptr) {
  const auto count = std::min(kDefaultDominantCount, eig.size());
  if (h && basis)
    return dominant_modes(eig, count, *h, *basis);
  return dominant_modes(eig, count);
}

std::string join(const std::vector<std::string> &parts) {
  std::string s;
  for (const auto &p : parts)
    s += (s.empty() ? "" : " ") + p;
  return s;
}

// ---------------------------------------------------------------------------
// synth

struct LinearArgs {
  std::size_t k = 8, s = 16, n = 40;
  double radius = 0.9, noise = 0.0;
  bool force = false;
};

struct CounterArgs {
  std::size_t len = 50, s = 32, k = 4;
  double decay = 0.5, p_positive = 0.05, p_negative = 0.05;
  bool positive_only = false;
};

struct ClusterArgs {
  std::size_t k = 8, s = 40, n = 20;
  double separation = 40.0, noise = 1.0;
};

struct RnnArgs {
  std::string cell = "gru";
  std::size_t m = 3, k = 8, s = 16, n = 30;
  double scale = 1.0;
};

void finish_synth(const Context &ctx, const fs::path &dir, const DatasetManifest &m,
                  std::vector<std::string> written) {
  save_manifest(m, dir / "manifest.json");
  written.push_back("manifest.json");
  ctx.out << "seed " << ctx.g.seed << '\n';
  ctx.out << "wrote " << join(written) << '\n';
}

int synth_linear(const Context &ctx, const LinearArgs &a) {
  std::mt19937_64 master(ctx.g.seed);
  const auto dyn_seed = master();
  const auto data_seed = master();
  const auto dyn = random_linear_dynamics(a.k, a.radius, dyn_seed, a.force);
  const auto h = gen_linear(dyn, a.s, a.n, a.noise, data_seed);
  ctx.log("linear dynamics, spectral radius " + format_double(dyn.spectral_radius));

  const auto dir = ctx.out_dir();
  save_tensor(h, dir / "states.npy");
  save_matrix(dyn.transition, dir / "transition.npy");
  DatasetManifest m;
  m.name = "linear";
  m.tensor_path = "states.npy";
  finish_synth(ctx, dir, m, {"states.npy", "transition.npy"});
  return kExitOk;
}

int synth_counter(const Context &ctx, const CounterArgs &a) {
  std::mt19937_64 master(ctx.g.seed);
  const auto net_seed = master();
  const auto stream_seed = master();
  const auto rnn = build_counter_rnn(a.k, a.decay, Vocabulary{}, net_seed);
  const auto streams = a.positive_only
                           ? positive_streams(rnn, a.s, a.len, stream_seed)
                           : sample_streams(rnn, a.s, a.len, {a.p_positive, a.p_negative}, stream_seed);
  const auto h = run_counter(rnn, streams.tokens);

  const auto dir = ctx.out_dir();
  save_tensor(h, dir / "states.npy");
  save_labels(streams.labels, dir / "labels.txt");
  save_matrix(rnn.readout.weights, dir / "readout_weights.npy");
  save_vector(rnn.readout.bias, dir / "readout_bias.npy");
  save_matrix(rnn.input_weights, dir / "input_weights.npy");
  {
    std::ofstream tokens(dir / "tokens.txt", std::ios::binary | std::ios::trunc);
    if (!tokens)
      throw IoError("cannot write '" + (dir / "tokens.txt").string() + "'");
    for (const auto &seq : streams.tokens) {
      for (std::size_t t = 0; t < seq.size(); ++t)
        tokens << (t ? " " : "") << seq[t];
      tokens << '\n';
    }
  }
  DatasetManifest m;
  m.name = a.positive_only ? "counter-positive" : "counter";
  m.tensor_path = "states.npy";
  m.labels_path = "labels.txt";
  m.readout_path = "readout_weights.npy";
  m.readout_bias_path = "readout_bias.npy";
  m.readout_kind = rnn.readout.kind;
  finish_synth(ctx, dir, m,
               {"states.npy", "labels.txt", "readout_weights.npy", "readout_bias.npy",
                "input_weights.npy", "tokens.txt"});
  return kExitOk;
}

int synth_clusters(const Context &ctx, const ClusterArgs &a) {
  const auto data = gen_clusters(a.k, a.s, a.n, a.separation, a.noise, ctx.g.seed);
  const auto dir = ctx.out_dir();
  save_tensor(data.states, dir / "states.npy");
  save_labels(data.labels, dir / "labels.txt");
  DatasetManifest m;
  m.name = "clusters";
  m.tensor_path = "states.npy";
  m.labels_path = "labels.txt";
  finish_synth(ctx, dir, m, {"states.npy", "labels.txt"});
  return kExitOk;
}

int synth_rnn(const Context &ctx, const RnnArgs &a) {
  std::mt19937_64 master(ctx.g.seed);
  const auto cell_seed = master();
  const auto input_seed = master();
  const auto cell = make_cell(parse_cell_kind(a.cell), a.m, a.k, cell_seed, a.scale);
  const auto inputs = random_inputs(a.s, a.n, a.m, input_seed);
  const auto h = run_cell(cell, inputs);
  const auto dir = ctx.out_dir();
  save_tensor(h, dir / "states.npy");
  save_tensor(inputs, dir / "inputs.npy");
  DatasetManifest m;
  m.name = "rnn-" + to_string(cell.kind);
  m.tensor_path = "states.npy";
  finish_synth(ctx, dir, m, {"states.npy", "inputs.npy"});
  return kExitOk;
}

// ---------------------------------------------------------------------------
// analysis commands

struct FitArgs {
  bool include_padding = false;
};

int cmd_fit(const Context &ctx, const FitArgs &a) {
  const auto data = load_dataset(ctx.manifest_path("fit"));
  const auto &h = data.states;
  const auto method = parse_basis_method(ctx.g.basis);
  const auto basis = compute_basis(h, ctx.g.rank, method, a.include_padding);
  const auto op = fit_koopman(h, basis, a.include_padding);
  const auto eig = decompose(op);
  ctx.log("rank " + std::to_string(basis.rank()) + ", eigenvector condition " +
          format_double(eig.condition));

  const auto dir = ctx.out_dir();
  save_matrix(op.matrix, dir / kMatrixFile);
  save_matrix(basis.vectors, dir / kBasisFile);
  save_vector(basis.singular_values, dir / kSingularFile);
  if (basis.mean)
    save_vector(*basis.mean, dir / kMeanFile);
  else
    fs::remove(dir / kMeanFile);

  const auto pair = predict_ahead(h, op, 1, a.include_padding);

  // A new operator invalidates every section derived from an old one.
  AnalysisReport report;
  report.manifest = echo(data.manifest);
  report.basis = BasisSection{method, basis.rank(),
                              {basis.singular_values.begin(), basis.singular_values.end()},
                              a.include_padding};
  report.op = OperatorSection{op.fit_residual, kMatrixFile, kBasisFile,
                              basis.mean ? std::optional<std::string>(kMeanFile) : std::nullopt};
  report.spectrum = make_spectrum(eig, ctx.g.epsilon);
  report.dominant_modes = default_modes(eig, &h, &basis);
  report.errors = ErrorsSection{1, relative_error(pair.predicted, pair.actual),
                                separability_residual(h, basis, eig, a.include_padding),
                                std::nullopt};
  save_report(report, dir / kReportFile);

  ctx.out << "rank " << basis.rank() << '\n';
  ctx.out << "fit_residual " << format_double(op.fit_residual) << '\n';
  ctx.out << "relative_error " << format_double(report.errors->relative_error) << '\n';
  return kExitOk;
}

int cmd_spectrum(const Context &ctx) {
  const auto dir = ctx.out_dir();
  const auto op = load_operator(dir);
  const auto eig = decompose(op);
  auto report = load_or_new_report(dir);
  report.spectrum = make_spectrum(eig, ctx.g.epsilon);
  if (!ctx.g.manifest.empty()) {
    const auto data = load_dataset(ctx.g.manifest);
    check_dims(data.states, op);
    report.dominant_modes = default_modes(eig, &data.states, &op.basis);
  } else if (!report.dominant_modes) {
    report.dominant_modes = default_modes(eig);
  }
  write_spectrum_csv(dir / "spectrum.csv", *report.spectrum);
  save_report(report, dir / kReportFile);

  for (const auto &e : report.spectrum->modes)
    ctx.out << e.index << ' ' << format_double(e.modulus) << ' ' << e.horizon.to_string() << '\n';
  return kExitOk;
}

struct ProjectArgs {
  std::string modes;
  bool magnitudes = false;
  bool subspace = false;
  std::string variant = "modulus";
};

int cmd_project(const Context &ctx, const ProjectArgs &a) {
  const auto data = load_dataset(ctx.manifest_path("project"));
  const auto &h = data.states;
  const auto dir = ctx.out_dir();
  const auto op = load_operator(dir);
  check_dims(h, op);
  const auto eig = decompose(op);

  ModeIndexSet modes = a.modes.empty() ? default_modes(eig, &h, &op.basis) : parse_modes(a.modes);
  const auto closed = conjugate_closure(eig, modes);
  if (closed != modes)
    throw ModeClosureError(closed, "mode set {" + format_modes(modes) +
                                       "} is not closed under conjugation");
  ctx.log("modes " + format_modes(modes));

  auto report = load_or_new_report(dir);
  if (!report.manifest)
    report.manifest = echo(data.manifest);
  ProjectionSection section;
  section.modes = modes;

  std::vector<std::string> written;
  if (a.magnitudes || !a.subspace) {
    write_matrix_csv(dir / "magnitudes.csv", magnitude_series(h, op.basis, eig, modes));
    section.magnitudes_file = "magnitudes.csv";
    written.push_back("magnitudes.csv");
  }
  if (a.subspace) {
    const auto variant =
        a.variant == "real-part" ? ProjectorVariant::RealPart : ProjectorVariant::Modulus;
    const RealMatrix projector = subspace_projector(op.basis, eig, modes, variant);
    save_matrix(projector, dir / "projector.npy");

    const auto rows = static_cast<Eigen::Index>(h.samples() * h.steps());
    const auto k = static_cast<Eigen::Index>(h.dim());
    Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> flat(
        h.data().data(), rows, k);
    const RealMatrix projected = apply_projector(flat, projector, op.basis);
    auto out = HiddenStateTensor::zeros(h.samples(), h.steps(), h.dim());
    Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
        out.data().data(), rows, k) = projected;
    save_tensor(out, dir / "projected.npy");

    section.projector_file = "projector.npy";
    section.projected_file = "projected.npy";
    section.variant = variant;
    written.push_back("projector.npy");
    written.push_back("projected.npy");
  }
  report.projection = std::move(section);
  save_report(report, dir / kReportFile);
  ctx.out << "modes " << format_modes(modes) << '\n';
  ctx.out << "wrote " << join(written) << '\n';
  return kExitOk;
}

struct PredictArgs {
  std::size_t steps = 1;
  bool include_padding = false;
};

int cmd_predict(const Context &ctx, const PredictArgs &a) {
  const auto data = load_dataset(ctx.manifest_path("predict"));
  const auto &h = data.states;
  const auto dir = ctx.out_dir();
  const auto op = load_operator(dir);
  check_dims(h, op);
  const auto eig = decompose(op);

  const auto one = predict_ahead(h, op, 1, a.include_padding);
  ErrorsSection errors;
  errors.steps = a.steps;
  errors.relative_error = relative_error(one.predicted, one.actual);
  errors.separability_residual = separability_residual(h, op.basis, eig, a.include_padding);

  auto target = one;
  if (a.steps > 1) {
    target = predict_ahead(h, op, a.steps, a.include_padding);
    errors.multi_step_relative_error = relative_error(target.predicted, target.actual);
  }

  auto report = load_or_new_report(dir);
  if (!report.manifest)
    report.manifest = echo(data.manifest);
  report.errors = errors;

  if (data.readout) {
    // Network categories come from the true states, surrogate categories from
    // the operator's predictions of the same states.
    const auto net = apply_readout(*data.readout, target.actual.valid_rows());
    const auto sur = apply_readout(*data.readout, target.predicted.valid_rows());
    report.agreement = agreement(net.categories, sur.categories, data.readout->categories());
  } else {
    report.agreement.reset();
  }
  save_report(report, dir / kReportFile);

  ctx.out << "relative_error " << format_double(errors.relative_error) << '\n';
  if (errors.multi_step_relative_error)
    ctx.out << "relative_error@" << a.steps << ' '
            << format_double(*errors.multi_step_relative_error) << '\n';
  ctx.out << "separability_residual " << format_double(errors.separability_residual) << '\n';
  if (report.agreement)
    ctx.out << "agreement " << format_double(report.agreement->rate()) << '\n';
  return kExitOk;
}

struct SilhouetteArgs {
  std::size_t dim = 5;
  bool dim_given = false;
  bool modulus = false;
};

int cmd_silhouette(const Context &ctx, const SilhouetteArgs &a) {
  const auto data = load_dataset(ctx.manifest_path("silhouette"));
  const auto &h = data.states;
  if (!data.labels)
    throw ArgumentError("silhouette: the manifest has no labels_path");
  const auto dir = ctx.out_dir();

  KoopmanOperator op;
  if (fs::exists(dir / kMatrixFile)) {
    op = load_operator(dir);
    check_dims(h, op);
  } else {
    ctx.log("no fitted operator in " + dir.string() + ", fitting in memory");
    op = fit_koopman(h, compute_basis(h, ctx.g.rank, parse_basis_method(ctx.g.basis)));
  }
  const auto eig = decompose(op);
  const std::size_t r = op.basis.rank();
  const std::size_t d = a.dim_given ? a.dim : std::min(a.dim, r);

  SilhouetteSection section;
  section.dim = d;
  section.curves_file = "silhouette.csv";
  const auto &labels = *data.labels;
  section.curves["raw"] = silhouette_curve(h, op.basis, labels, Embedding::Raw, d).values;
  section.curves["pca"] = silhouette_curve(h, op.basis, labels, Embedding::PcaTop, d).values;
  section.curves["koopman"] =
      silhouette_curve(h, op.basis, labels, Embedding::KoopmanTop, d, &eig).values;
  if (a.modulus)
    section.curves["koopman-modulus"] =
        silhouette_curve(h, op.basis, labels, Embedding::KoopmanModulus, d, &eig).values;
  write_curves_csv(dir / "silhouette.csv", section.curves);

  auto report = load_or_new_report(dir);
  if (!report.manifest)
    report.manifest = echo(data.manifest);
  report.silhouette = section;
  save_report(report, dir / kReportFile);

  for (const auto &[name, values] : section.curves)
    ctx.out << name << ' ' << format_double(values.empty() ? 0.0 : values.back()) << '\n';
  return kExitOk;
}

int cmd_report(const Context &ctx, bool schema) {
  if (schema) {
    ctx.out << report_schema().dump(2) << '\n';
    return kExitOk;
  }
  const auto path = fs::path(ctx.g.out) / kReportFile;
  if (!fs::exists(path))
    throw IoError("no report at '" + path.string() + "'");
  ctx.out << dump_report(load_report(path));
  return kExitOk;
}

} // namespace

int run(const std::vector<std::string> &args, std::ostream &out, std::ostream &err) {
  CLI::App app{"Koopman analysis of recurrent hidden states", "kann"};
  app.set_version_flag("--version", toolkit_version());
  app.require_subcommand(1);
  app.fallthrough();

  Context ctx{Globals{}, out, err};
  auto &g = ctx.g;
  app.add_option("--manifest", g.manifest, "Dataset manifest (JSON)");
  app.add_option("--out", g.out, "Output directory")->capture_default_str();
  app.add_option("--seed", g.seed, "Random seed")->capture_default_str();
  app.add_option("--rank", g.rank, "Basis rank r (default: 99.9% energy)")
      ->check(CLI::PositiveNumber);
  app.add_option("--epsilon", g.epsilon, "Memory-horizon threshold")
      ->capture_default_str()
      ->check(CLI::Range(0.0, 1.0, "(0, 1)"));
  app.add_option("--basis", g.basis, "Basis method")
      ->capture_default_str()
      ->check(CLI::IsMember({"svd", "pca"}));
  app.add_flag("--verbose,-v", g.verbose, "Log progress to stderr");

  std::function<int()> action;

  auto *synth = app.add_subcommand("synth", "Generate a synthetic dataset");
  synth->require_subcommand(1);
  synth->fallthrough();

  LinearArgs lin;
  auto *linear = synth->add_subcommand("linear", "Noisy linear dynamics h' = A h");
  linear->fallthrough();
  linear->add_option("--k", lin.k)->capture_default_str()->check(CLI::PositiveNumber);
  linear->add_option("--s", lin.s)->capture_default_str()->check(CLI::PositiveNumber);
  linear->add_option("--n", lin.n)->capture_default_str()->check(CLI::Range(2, 1 << 24));
  linear->add_option("--spectral-radius", lin.radius)
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  linear->add_option("--noise", lin.noise, "Relative noise level")
      ->capture_default_str()
      ->check(CLI::NonNegativeNumber);
  linear->add_flag("--force", lin.force, "Allow spectral radius above 1.05");
  linear->callback([&] { action = [&] { return synth_linear(ctx, lin); }; });

  CounterArgs cnt;
  auto *counter = synth->add_subcommand("counter", "Sentiment-counter RNN on token streams");
  counter->fallthrough();
  counter->add_option("--len", cnt.len)->capture_default_str()->check(CLI::PositiveNumber);
  counter->add_option("--s", cnt.s)->capture_default_str()->check(CLI::PositiveNumber);
  counter->add_option("--k", cnt.k)->capture_default_str()->check(CLI::Range(2, 1 << 16));
  counter->add_option("--decay", cnt.decay)->capture_default_str();
  counter->add_option("--p-positive", cnt.p_positive)
      ->capture_default_str()
      ->check(CLI::Range(0.0, 1.0));
  counter->add_option("--p-negative", cnt.p_negative)
      ->capture_default_str()
      ->check(CLI::Range(0.0, 1.0));
  counter->add_flag("--positive-only", cnt.positive_only, "Streams of positive tokens only");
  counter->callback([&] { action = [&] { return synth_counter(ctx, cnt); }; });

  ClusterArgs cl;
  auto *clusters = synth->add_subcommand("clusters", "Two labelled Gaussian clouds");
  clusters->fallthrough();
  clusters->add_option("--k", cl.k)->capture_default_str()->check(CLI::PositiveNumber);
  clusters->add_option("--s", cl.s)->capture_default_str()->check(CLI::Range(2, 1 << 24));
  clusters->add_option("--n", cl.n)->capture_default_str()->check(CLI::PositiveNumber);
  clusters->add_option("--separation", cl.separation)
      ->capture_default_str()
      ->check(CLI::NonNegativeNumber);
  clusters->add_option("--noise", cl.noise)->capture_default_str()->check(CLI::NonNegativeNumber);
  clusters->callback([&] { action = [&] { return synth_clusters(ctx, cl); }; });

  RnnArgs rn;
  auto *rnn = synth->add_subcommand("rnn", "Random Elman or GRU cell on Gaussian inputs");
  rnn->fallthrough();
  rnn->add_option("--cell", rn.cell)->capture_default_str()->check(CLI::IsMember({"elman", "gru"}));
  rnn->add_option("--m", rn.m, "Input size")->capture_default_str()->check(CLI::PositiveNumber);
  rnn->add_option("--k", rn.k)->capture_default_str()->check(CLI::PositiveNumber);
  rnn->add_option("--s", rn.s)->capture_default_str()->check(CLI::PositiveNumber);
  rnn->add_option("--n", rn.n)->capture_default_str()->check(CLI::PositiveNumber);
  rnn->add_option("--scale", rn.scale, "Weight scale")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  rnn->callback([&] { action = [&] { return synth_rnn(ctx, rn); }; });

  FitArgs fa;
  auto *fit = app.add_subcommand("fit", "Fit basis and operator; write C.npy, B.npy, report.json");
  fit->fallthrough();
  fit->add_flag("--include-padding", fa.include_padding, "Fit over padded steps too");
  fit->callback([&] { action = [&] { return cmd_fit(ctx, fa); }; });

  auto *spectrum = app.add_subcommand("spectrum", "Eigenvalues and memory horizons");
  spectrum->fallthrough();
  spectrum->callback([&] { action = [&] { return cmd_spectrum(ctx); }; });

  ProjectArgs pa;
  auto *project = app.add_subcommand("project", "Projection magnitudes or subspace projection");
  project->fallthrough();
  project->add_option("--modes", pa.modes, "Comma-separated mode indices (default: dominant 4)");
  project->add_flag("--magnitudes", pa.magnitudes, "Write the s x n magnitude CSV");
  project->add_flag("--subspace", pa.subspace, "Write projector.npy and projected.npy");
  project->add_option("--variant", pa.variant, "Projector form")
      ->capture_default_str()
      ->check(CLI::IsMember({"modulus", "real-part"}));
  project->callback([&] { action = [&] { return cmd_project(ctx, pa); }; });

  PredictArgs pr;
  auto *predict = app.add_subcommand("predict", "Prediction error, separability, readout agreement");
  predict->fallthrough();
  predict->add_option("--steps", pr.steps, "Prediction horizon")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  predict->add_flag("--include-padding", pr.include_padding, "Score padded steps too");
  predict->callback([&] { action = [&] { return cmd_predict(ctx, pr); }; });

  SilhouetteArgs sa;
  auto *silhouette = app.add_subcommand("silhouette", "Silhouette curves per embedding");
  silhouette->fallthrough();
  auto *dim_opt = silhouette->add_option("--dim", sa.dim, "Embedding dimension")
                      ->capture_default_str()
                      ->check(CLI::PositiveNumber);
  silhouette->add_flag("--koopman-modulus", sa.modulus, "Add the modulus-only Koopman curve");
  silhouette->callback([&] {
    sa.dim_given = dim_opt->count() > 0;
    action = [&] { return cmd_silhouette(ctx, sa); };
  });

  bool show_schema = false;
  auto *report = app.add_subcommand("report", "Validate and print report.json");
  report->fallthrough();
  report->add_flag("--schema", show_schema, "Print the report schema instead");
  report->callback([&] { action = [&] { return cmd_report(ctx, show_schema); }; });

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError &e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    return action ? action() : kExitUsage;
  } catch (const ModeClosureError &e) {
    err << "error: " << e.what() << '\n';
    err << "suggested modes: " << format_modes(e.completion()) << '\n';
    return kExitUsage;
  } catch (const ArgumentError &e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception &e) {
    err << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
}

int run(int argc, char **argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i)
    args.emplace_back(argv[i]);
  return run(args, std::cout, std::cerr);
}

} // namespace kann::cli
