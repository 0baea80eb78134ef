// Acceptance suite: one PASS/FAIL line per criterion, with the measured
// quantities and wall time. Exit status is the number of failures.

#include "kann/errors.hpp"
#include "kann/harness.hpp"
#include "kann/koopman.hpp"
#include "kann/metrics.hpp"
#include "kann/numerics.hpp"
#include "kann/spectral.hpp"
#include "kann/state_io.hpp"

#include "support.hpp"

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <iostream>
#include <sstream>

using namespace kann;
namespace fs = std::filesystem;

namespace {

struct Check {
  bool ok = true;
  std::ostringstream detail;

  void require(bool cond, const std::string &what) {
    if (!cond) {
      ok = false;
      detail << " [failed: " << what << "]";
    }
  }
  template <typename T> Check &note(const std::string &name, const T &value) {
    detail << ' ' << name << '=' << value;
    return *this;
  }
};

struct Criterion {
  int id;
  std::string title;
  double budget_seconds; // 0: no runtime bound
  std::function<void(Check &)> body;
};

// ---------------------------------------------------------------------------

struct LinearOracle {
  LinearDynamics dyn;
  HiddenStateTensor h;
  KoopmanOperator op;
};

LinearOracle linear_oracle() {
  auto dyn = random_linear_dynamics(8, 0.9, 2024);
  auto h = gen_linear(dyn, 16, 40, 0.0, 2025);
  auto op = fit_koopman(h, compute_basis(h, 8));
  return {std::move(dyn), std::move(h), std::move(op)};
}

void linear_exactness(Check &c) {
  const auto o = linear_oracle();
  const auto pair = predict_ahead(o.h, o.op);
  const double err = relative_error(pair.predicted, pair.actual);
  c.note("relative_error", err);
  c.require(err < 1e-8, "relative_error < 1e-8");

  // Greedy one-to-one match of fitted eigenvalues against those of A.
  const auto fitted = decompose(o.op).lambdas;
  const auto truth = eig(o.dyn.transition).values;
  std::vector<bool> used(static_cast<std::size_t>(truth.size()), false);
  double worst = 0;
  for (Eigen::Index i = 0; i < fitted.size(); ++i) {
    double best = INFINITY;
    std::size_t at = 0;
    for (Eigen::Index j = 0; j < truth.size(); ++j)
      if (!used[static_cast<std::size_t>(j)] && std::abs(fitted(i) - truth(j)) < best)
        best = std::abs(fitted(i) - truth(j)), at = static_cast<std::size_t>(j);
    used[at] = true;
    worst = std::max(worst, best);
  }
  c.note("max_eigenvalue_gap", worst);
  c.require(worst < 1e-6, "every mode within 1e-6");
}

void separability(Check &c) {
  const auto o = linear_oracle();
  const auto e = decompose(o.op);
  const double res = separability_residual(o.h, o.op.basis, e);
  c.note("separability_residual", res);
  c.require(res < 1e-8, "separability_residual < 1e-8");
  c.require(!e.defective, "eigensystem not defective");

  const RealMatrix start = o.h.valid_rows();
  const auto steps = rollout(start, o.op, 10);
  double worst = 0;
  for (std::size_t l = 1; l <= 10; ++l) {
    const RealMatrix via = eigen_power_rollout(start, o.op.basis, e, l);
    worst = std::max(worst, (via - steps[l - 1]).norm() / steps[l - 1].norm());
  }
  c.note("max_rollout_gap", worst);
  c.require(worst < 1e-6, "eigen-power rollout within 1e-6 over 10 steps");
}

void horizon(Check &c) {
  const double two = memory_horizon(0.1, 1e-2).steps;
  c.note("tau(0.1)", two);
  c.require(two == 2.0, "tau(1e-2, 0.1) == 2 exactly");

  // The reference is log(0.01) / log(0.9965) evaluated independently in long
  // double, 1313.45898.
  const long double reference = std::log(0.01L) / std::log(0.9965L);
  const double tau = memory_horizon(0.9965, 1e-2).steps;
  c.note("tau(0.9965)", tau).note("reference", static_cast<double>(reference));
  c.require(std::abs(tau - static_cast<double>(reference)) <= 0.01, "tau(0.9965) within 0.01 of reference");

  c.require(memory_horizon(1.0).kind == MemoryHorizon::Kind::Infinite, "|lambda| = 1 is infinite");
  c.require(memory_horizon(Complex(0.0, 1.0)).kind == MemoryHorizon::Kind::Infinite, "|i| = 1 is infinite");

  // tau grows with |lambda| and shrinks as epsilon grows.
  int violations = 0;
  for (int i = 1; i <= 20; ++i)
    for (int j = 1; j <= 20; ++j) {
      const double m = i / 21.0, eps = j / 21.0;
      const double tau_ij = memory_horizon(m, eps).steps;
      if (i < 20 && !(memory_horizon((i + 1) / 21.0, eps).steps > tau_ij))
        ++violations;
      if (j < 20 && !(memory_horizon(m, (j + 1) / 21.0).steps < tau_ij))
        ++violations;
    }
  c.note("grid_violations", violations);
  c.require(violations == 0, "monotonicity grid");
}

void counter(Check &c) {
  const auto rnn = build_counter_rnn(4, 0.5, Vocabulary{}, 41);

  // Operator fitted on a long calibration corpus of mixed streams.
  const auto corpus = sample_streams(rnn, 512, 200, {}, 42);
  const auto train = run_counter(rnn, corpus.tokens);
  const auto op = fit_koopman(train, compute_basis(train, 4));
  const auto e = decompose(op);
  const double top = std::abs(e.lambdas(0));
  c.note("top_modulus", top);
  c.require(top >= 0.999, "dominant |lambda| >= 0.999");

  const auto positive = positive_streams(rnn, 32, 50, 43);
  const auto hp = run_counter(rnn, positive.tokens);
  const auto modes = dominant_modes(e, 1, hp, op.basis);
  const RealMatrix mags = magnitude_series(hp, op.basis, e, modes);
  int drops = 0;
  for (Eigen::Index s = 0; s < mags.rows(); ++s)
    for (Eigen::Index t = 1; t < mags.cols(); ++t)
      drops += mags(s, t) < mags(s, t - 1);
  c.note("positive_only_drops", drops);
  c.require(drops == 0, "magnitudes non-decreasing on positive-only streams");

  const auto fresh = sample_streams(rnn, 32, 50, {}, 44);
  const auto h = run_counter(rnn, fresh.tokens);
  const auto pair = predict_ahead(h, op);
  const auto net = apply_readout(rnn.readout, pair.actual.valid_rows());
  const auto sur = apply_readout(rnn.readout, pair.predicted.valid_rows());
  const auto agree = agreement(net.categories, sur.categories, 2);
  c.note("agreement", agree.rate()).note("pairs", agree.total);
  c.require(agree.rate() >= 0.95, "readout agreement >= 95%");
}

void subspace(Check &c) {
  // Rotation pair and decaying mode embedded in R^8 along orthonormal q0, q1, q2.
  constexpr std::size_t k = 8, samples = 12, steps = 60, length = 64;
  kt::Rng rng(51);
  const RealMatrix q = rng.orthonormal(k, 3);
  const RealMatrix core = kt::block_diag(kt::rotation(0.3) * 0.99, RealMatrix::Constant(1, 1, 0.8));
  const auto dyn = make_linear_dynamics(q * core * q.transpose());

  // Each initial state appears with its rotation part mirrored, so the
  // rotation plane and the decaying axis are uncorrelated in the data.
  RealMatrix init(samples, 3);
  for (Eigen::Index s = 0; s < static_cast<Eigen::Index>(samples); s += 2) {
    init.row(s) << rng.normal(), rng.normal(), 0.5 * rng.normal();
    init.row(s + 1) << -init(s, 0), -init(s, 1), init(s, 2);
  }
  const auto h = gen_linear(dyn, RealMatrix(init * q.transpose()), steps, 0.0, 52);

  const auto op = fit_koopman(h, compute_basis(h, 3));
  const auto e = decompose(op);
  ModeIndexSet pair;
  for (std::size_t j = 0; j < e.size(); ++j)
    if (std::abs(e.lambdas(static_cast<Eigen::Index>(j)).imag()) > 1e-6)
      pair.push_back(j);
  c.require(pair.size() == 2, "rotation pair identified");
  if (pair.size() != 2)
    return;

  // Decoder: the rotation plane drives a sine/cosine shape, the decaying axis
  // a Gaussian bump.
  RealMatrix shapes(3, length);
  for (std::size_t i = 0; i < length; ++i) {
    const double x = static_cast<double>(i) / length;
    shapes(0, static_cast<Eigen::Index>(i)) = std::sin(2 * M_PI * 3 * x);
    shapes(1, static_cast<Eigen::Index>(i)) = std::cos(2 * M_PI * 3 * x);
    shapes(2, static_cast<Eigen::Index>(i)) = std::exp(-std::pow((x - 0.5) / 0.08, 2));
  }
  const RealMatrix decoder = q * shapes;

  const RealMatrix states = h.valid_rows();
  const RealMatrix coords = states * q; // analytic decomposition
  const RealMatrix rotation_signal = coords.leftCols(2) * shapes.topRows(2);
  const RealMatrix decay_signal = coords.col(2) * shapes.row(2);

  const RealMatrix projected = apply_projector(states, subspace_projector(op.basis, e, pair), op.basis);
  const RealMatrix decoded = linear_decoder(projected, decoder);
  const RealMatrix kept_coords = projected * q;
  const double shape_err = (decoded - rotation_signal).norm() / rotation_signal.norm();
  const double removed = 1.0 - (kept_coords.col(2) * shapes.row(2)).norm() / decay_signal.norm();
  c.note("rotation_shape_error", shape_err).note("decay_removed", removed);
  c.require(shape_err < 0.05, "rotation signal preserved within 5%");
  c.require(removed >= 0.9, ">= 90% of decaying contribution removed");
}

void silhouette(Check &c) {
  const auto far = gen_clusters(8, 40, 20, 40.0, 1.0, 61);
  const auto far_curve = silhouette_curve(far.states, compute_basis(far.states, 8), far.labels, Embedding::Raw, 8);
  c.note("separated_final", far_curve.values.back());
  c.require(far_curve.values.back() > 0.8, "separated classes sigma > 0.8");

  const auto same = gen_clusters(8, 40, 20, 0.0, 1.0, 62);
  const auto same_curve =
      silhouette_curve(same.states, compute_basis(same.states, 8), same.labels, Embedding::Raw, 8);
  double worst = 0;
  for (double v : same_curve.values)
    worst = std::max(worst, std::abs(v));
  c.note("same_generator_max", worst);
  c.require(worst < 0.15, "same generator |sigma| < 0.15");

  RealMatrix p(4, 1);
  p << 0, 1, 10, 11;
  const std::vector<int> labels{0, 0, 1, 1};
  const auto s = silhouette_points(p, labels);
  const double mean = (s[0] + s[1] + s[2] + s[3]) / 4;
  c.note("point0", s[0]).note("mean", mean);
  c.require(std::abs(s[0] - 0.904762) < 1e-6, "point-0 silhouette");
  c.require(std::abs(mean - 0.899749) < 1e-6, "mean silhouette");
}

void numerics(Check &c) {
  kt::Rng rng(71);
  double svd_worst = 0;
  for (int t = 0; t < 50; ++t) {
    const RealMatrix m = rng.matrix(static_cast<Eigen::Index>(1 + rng.index(10)),
                                    static_cast<Eigen::Index>(1 + rng.index(10)));
    const auto r = svd(m);
    const RealMatrix back = r.left_vectors * r.singular_values.asDiagonal() * r.right_vectors.transpose();
    svd_worst = std::max(svd_worst, kt::max_abs(back - m) / std::max(1.0, kt::max_abs(m)));
  }
  c.note("svd_reconstruction", svd_worst);
  c.require(svd_worst < 1e-10, "svd reconstruction < 1e-10");

  double eig_worst = 0;
  for (int t = 0; t < 50; ++t) {
    const auto n = static_cast<Eigen::Index>(1 + rng.index(10));
    const RealMatrix a = rng.matrix(n, n);
    const auto r = eig(a);
    for (Eigen::Index j = 0; j < n; ++j) {
      const auto v = r.vectors.col(j);
      const double bound = 1e-8 * (1 + std::abs(r.values(j))) * v.norm();
      eig_worst = std::max(eig_worst, (a.cast<Complex>() * v - r.values(j) * v).norm() / bound);
    }
  }
  c.note("eig_residual_over_bound", eig_worst);
  c.require(eig_worst < 1.0, "eigen residual bound");

  // 25 full-column-rank instances against the normal equations, 25 rank-
  // deficient ones against the pseudoinverse of their full-rank factors.
  double ls_worst = 0;
  for (int t = 0; t < 25; ++t) {
    const RealMatrix x = rng.matrix(static_cast<Eigen::Index>(8 + rng.index(8)),
                                    static_cast<Eigen::Index>(1 + rng.index(6)));
    const RealMatrix y = rng.matrix(x.rows(), 3);
    ls_worst = std::max(ls_worst, kt::max_abs(lstsq(x, y) - kt::normal_equations_pinv(x) * y));
  }
  for (int t = 0; t < 25; ++t) {
    const auto m = static_cast<Eigen::Index>(8 + rng.index(6));
    const auto n = static_cast<Eigen::Index>(3 + rng.index(5));
    const auto q = static_cast<Eigen::Index>(1 + rng.index(static_cast<std::size_t>(n - 1)));
    const RealMatrix f = rng.matrix(m, q), g = rng.matrix(q, n), y = rng.matrix(m, 2);
    ls_worst = std::max(ls_worst, kt::max_abs(lstsq(f * g, y) - kt::factored_pinv(f, g) * y));
  }
  c.note("lstsq_vs_oracle", ls_worst);
  c.require(ls_worst < 1e-8, "lstsq agrees with pseudoinverse oracle on 50 instances");
}

void io(Check &c) {
  kt::TempDir dir;
  kt::Rng rng(81);
  int mismatches = 0;
  for (int t = 0; t < 100; ++t) {
    auto h = rng.tensor(1 + rng.index(5), 1 + rng.index(7), 1 + rng.index(6));
    for (auto &v : h.data())
      v = std::ldexp(v, static_cast<int>(rng.index(60)) - 30);
    save_tensor(h, dir / "a.npy");
    const auto back = load_tensor(dir / "a.npy");
    save_tensor(back, dir / "b.npy");
    const bool same_bits = std::memcmp(h.data().data(), back.data().data(), h.data().size() * sizeof(double)) == 0;
    mismatches += !(same_bits && kt::read_bytes(dir / "a.npy") == kt::read_bytes(dir / "b.npy"));
  }
  c.note("roundtrip_mismatches", mismatches);
  c.require(mismatches == 0, "100 byte-identical round trips");

  const std::string payload = kt::le_doubles({1, 2, 3, 4, 5, 6});
  const std::string good = "{'descr': '<f8', 'fortran_order': False, 'shape': (1, 2, 3), }";
  std::string bad_magic = kt::npy_bytes(good, payload);
  bad_magic[1] = 'M';
  const std::vector<std::pair<std::string, std::string>> corpus{
      {bad_magic, "magic"},
      {kt::npy_bytes("{'descr': '>f8', 'fortran_order': False, 'shape': (1, 2, 3), }", kt::be_doubles({1, 2, 3, 4, 5, 6})),
       "descr"},
      {kt::npy_bytes("{'descr': '<f8', 'fortran_order': True, 'shape': (1, 2, 3), }", payload), "fortran_order"},
  };
  int rejected = 0;
  for (const auto &[bytes, field] : corpus) {
    kt::write_bytes(dir / "bad.npy", bytes);
    try {
      load_tensor(dir / "bad.npy");
    } catch (const FormatError &e) {
      rejected += e.field() == field;
    } catch (const std::exception &) {
    }
  }
  c.note("malformed_rejected", std::to_string(rejected) + "/" + std::to_string(corpus.size()));
  c.require(rejected == static_cast<int>(corpus.size()), "malformed headers rejected with FormatError");
}

// Runs the kann executable twice per command in separate trees and compares
// every output file and stdout byte for byte.
void determinism(Check &c) {
  const std::vector<std::vector<std::string>> script{
      {"synth", "linear", "--k", "6", "--noise", "0.05", "--out", "linear"},
      {"synth", "counter", "--s", "24", "--len", "40", "--out", "counter"},
      {"synth", "clusters", "--out", "clusters"},
      {"synth", "rnn", "--cell", "gru", "--out", "rnn"},
      {"synth", "rnn", "--cell", "elman", "--out", "elman"},
      {"fit", "--manifest", "counter/manifest.json", "--rank", "4", "--out", "counter"},
      {"fit", "--manifest", "rnn/manifest.json", "--basis", "pca", "--out", "rnn"},
      {"spectrum", "--out", "counter", "--epsilon", "0.05"},
      {"project", "--manifest", "counter/manifest.json", "--magnitudes", "--subspace", "--out", "counter"},
      {"predict", "--manifest", "counter/manifest.json", "--steps", "3", "--out", "counter"},
      {"silhouette", "--manifest", "clusters/manifest.json", "--out", "clusters"},
      {"silhouette", "--manifest", "counter/manifest.json", "--dim", "2", "--koopman-modulus", "--out", "counter"},
      {"report", "--out", "counter"},
      {"report", "--schema"},
  };
  kt::TempDir a, b;
  int failures = 0;
  std::size_t files = 0;
  for (std::size_t i = 0; i < script.size(); ++i) {
    std::string stdout_text[2];
    for (int rep = 0; rep < 2; ++rep) {
      const fs::path root = rep ? b.path() : a.path();
      std::string cmd = "cd '" + root.string() + "' && '" KANN_EXE "' --seed 17";
      for (const auto &arg : script[i])
        cmd += " '" + arg + "'";
      const fs::path log = root / ("stdout." + std::to_string(i));
      cmd += " > '" + log.string() + "' 2>/dev/null";
      if (std::system(cmd.c_str()) != 0) {
        ++failures;
        c.note("command_failed", script[i][0]);
      }
      stdout_text[rep] = kt::read_bytes(log);
    }
    failures += stdout_text[0] != stdout_text[1];
  }
  for (const auto &entry : fs::recursive_directory_iterator(a.path())) {
    if (!entry.is_regular_file())
      continue;
    const auto rel = fs::relative(entry.path(), a.path());
    ++files;
    if (!fs::exists(b.path() / rel) || kt::read_bytes(entry.path()) != kt::read_bytes(b.path() / rel)) {
      ++failures;
      c.note("differs", rel.string());
    }
  }
  c.note("commands", script.size()).note("files_compared", files).note("differences", failures);
  c.require(failures == 0, "byte-identical reruns");
}

} // namespace

int main() {
  const std::vector<Criterion> criteria{
      {1, "linear-oracle exactness", 1.0, linear_exactness},
      {2, "separability and eigen-power rollout", 0, separability},
      {3, "memory horizon", 1.0, horizon},
      {4, "counter RNN: integrator, highlighting, agreement", 5.0, counter},
      {5, "subspace reconstruction", 2.0, subspace},
      {6, "silhouette", 0, silhouette},
      {7, "numerics suite", 0, numerics},
      {8, "NPY bit-exactness and malformed corpus", 0, io},
      {9, "CLI determinism", 0, determinism},
  };
  int failed = 0;
  for (const auto &crit : criteria) {
    Check c;
    const auto start = std::chrono::steady_clock::now();
    try {
      crit.body(c);
    } catch (const std::exception &e) {
      c.require(false, std::string("exception: ") + e.what());
    }
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (crit.budget_seconds > 0)
      c.require(seconds < crit.budget_seconds, "runtime under " + std::to_string(crit.budget_seconds) + " s");
    failed += !c.ok;
    std::printf("%s %d %s:%s (%.3f s)\n", c.ok ? "PASS" : "FAIL", crit.id, crit.title.c_str(),
                c.detail.str().c_str(), seconds);
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed;
}
