#include "kann/errors.hpp"
#include "kann/harness.hpp"
#include "kann/koopman.hpp"
#include "kann/metrics.hpp"

#include "support.hpp"

#include <doctest.h>

#include <numeric>

using namespace kann;

namespace {

std::vector<std::vector<double>> to_points(const RealMatrix &m) {
  std::vector<std::vector<double>> out(static_cast<std::size_t>(m.rows()));
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j)
      out[static_cast<std::size_t>(i)].push_back(m(i, j));
  return out;
}

double mean(const std::vector<double> &v) { return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size()); }

} // namespace

TEST_CASE("silhouette_points: four points on a line") {
  RealMatrix p(4, 1);
  p << 0, 1, 10, 11;
  const std::vector<int> labels{0, 0, 1, 1};
  const auto s = silhouette_points(p, labels);
  CHECK(s[0] == doctest::Approx(9.5 / 10.5).epsilon(1e-14));
  CHECK(s[1] == doctest::Approx(8.5 / 9.5).epsilon(1e-14));
  CHECK(mean(s) == doctest::Approx(0.899749).epsilon(1e-6));
}

TEST_CASE("silhouette_points: degenerate and invalid inputs") {
  const RealMatrix same = RealMatrix::Ones(4, 2);
  const std::vector<int> labels{0, 1, 0, 1};
  for (double v : silhouette_points(same, labels))
    CHECK(v == 0.0);

  RealMatrix p(3, 1);
  p << 0, 1, 5;
  const std::vector<int> singleton{0, 0, 1};
  CHECK(silhouette_points(p, singleton)[2] == 0.0);

  const std::vector<int> one{0, 0, 0};
  CHECK_THROWS_AS(silhouette_points(p, one), ArgumentError);
  CHECK_THROWS_AS(silhouette_points(RealMatrix(0, 2), std::vector<int>{}), ArgumentError);
  CHECK_THROWS_AS(silhouette_points(p, std::vector<int>{0, 1}), DimensionError);
}

TEST_CASE("silhouette_points: agrees with the naive oracle, stays in [-1, 1]") {
  kt::Rng rng(81);
  for (int trial = 0; trial < 30; ++trial) {
    const auto n = 4 + rng.index(20);
    const auto d = static_cast<Eigen::Index>(1 + rng.index(4));
    const int classes = 2 + static_cast<int>(rng.index(3));
    const RealMatrix p = rng.matrix(static_cast<Eigen::Index>(n), d);
    std::vector<int> labels(n);
    for (std::size_t i = 0; i < n; ++i)
      labels[i] = static_cast<int>(i % static_cast<std::size_t>(classes));
    const auto got = silhouette_points(p, labels);
    const auto want = kt::naive_silhouette(to_points(p), labels);
    for (std::size_t i = 0; i < n; ++i) {
      CHECK(got[i] == doctest::Approx(want[i]).epsilon(1e-12));
      CHECK(got[i] >= -1.0);
      CHECK(got[i] <= 1.0);
    }
  }
}

TEST_CASE("silhouette_points: translation, scale and relabelling invariance") {
  kt::Rng rng(82);
  for (int trial = 0; trial < 20; ++trial) {
    const RealMatrix p = rng.matrix(12, 3);
    std::vector<int> labels(12), renamed(12);
    for (std::size_t i = 0; i < 12; ++i) {
      labels[i] = static_cast<int>(rng.index(3));
      renamed[i] = 7 - 2 * labels[i];
    }
    labels[0] = 0, labels[1] = 1, renamed[0] = 7, renamed[1] = 5;
    const auto base = silhouette_points(p, labels);

    RealMatrix moved = p * rng.uniform(0.1, 50.0);
    moved.rowwise() += RealMatrix(rng.matrix(1, 3) * 100.0).row(0);
    const auto shifted = silhouette_points(moved, labels);
    const auto relabelled = silhouette_points(p, renamed);
    for (std::size_t i = 0; i < 12; ++i) {
      CHECK(std::abs(shifted[i] - base[i]) < 1e-10);
      CHECK(std::abs(relabelled[i] - base[i]) < 1e-12);
    }
  }
}

TEST_CASE("silhouette_curve: separated classes score high") {
  const auto data = gen_clusters(6, 20, 10, 40.0, 1.0, 83);
  const auto basis = compute_basis(data.states, 6);
  const auto curve = silhouette_curve(data.states, basis, data.labels, Embedding::Raw, 6);
  CHECK(curve.values.size() == 10);
  CHECK(curve.values.back() > 0.8);
}

TEST_CASE("silhouette_curve: identical dynamics for both labels stay near 0") {
  const auto h = gen_linear(random_linear_dynamics(5, 0.9, 84), 40, 15, 0.0, 85);
  std::vector<int> labels(40);
  for (std::size_t i = 0; i < 40; ++i)
    labels[i] = static_cast<int>(i % 2);
  const auto op = fit_koopman(h, compute_basis(h, 5));
  const auto eig = decompose(op);
  for (auto e : {Embedding::Raw, Embedding::PcaTop, Embedding::KoopmanTop, Embedding::KoopmanModulus}) {
    const auto curve = silhouette_curve(h, op.basis, labels, e, 3, &eig);
    for (double v : curve.values)
      CHECK(std::abs(v) <= 0.15);
  }
}

TEST_CASE("silhouette_curve: raw equals pca at full rank; cumulative mean") {
  kt::Rng rng(86);
  const auto h = rng.tensor(10, 6, 4);
  std::vector<int> labels(10);
  for (std::size_t i = 0; i < 10; ++i)
    labels[i] = static_cast<int>(i % 2);
  const auto basis = compute_basis(h, 4);
  const auto raw = silhouette_curve(h, basis, labels, Embedding::Raw, 4);
  const auto pca = silhouette_curve(h, basis, labels, Embedding::PcaTop, 4);
  for (std::size_t t = 0; t < 6; ++t)
    CHECK(std::abs(raw.values[t] - pca.values[t]) < 1e-12);

  double running = 0;
  for (std::size_t t = 0; t < 6; ++t) {
    running += raw.per_point.col(static_cast<Eigen::Index>(t)).mean();
    CHECK(raw.values[t] == doctest::Approx(running / static_cast<double>(t + 1)).epsilon(1e-12));
  }
  CHECK_THROWS_AS(silhouette_curve(h, basis, labels, Embedding::KoopmanTop, 2), ArgumentError);
  CHECK_THROWS_AS(silhouette_curve(h, basis, labels, Embedding::PcaTop, 5), ArgumentError);
}

TEST_CASE("agreement: examples") {
  const std::vector<int> a{0, 1, 1, 0};
  const auto same = agreement(a, a, 2);
  CHECK(same.matching == 4);
  CHECK(same.total == 4);
  CHECK(same.confusion[0][1] == 0);
  CHECK(same.confusion[1][0] == 0);
  CHECK(same.rate() == 1.0);

  const std::vector<int> b{0, 1, 0, 0};
  const auto r = agreement(a, b, 2);
  CHECK(r.matching == 3);
  CHECK(r.confusion[1][0] == 1);
  CHECK(r.confusion[0][0] == 2);
  CHECK(r.rate() == 0.75);

  CHECK_THROWS_AS(agreement(a, std::vector<int>{0, 1}, 2), DimensionError);
  CHECK_THROWS_AS(agreement(a, std::vector<int>{0, 1, 2, 0}, 2), ArgumentError);
}

TEST_CASE("agreement: symmetric with transposed confusion") {
  kt::Rng rng(87);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t c = 2 + rng.index(4), n = 1 + rng.index(50);
    std::vector<int> x(n), y(n);
    for (std::size_t i = 0; i < n; ++i) {
      x[i] = static_cast<int>(rng.index(c));
      y[i] = static_cast<int>(rng.index(c));
    }
    const auto xy = agreement(x, y, c);
    const auto yx = agreement(y, x, c);
    CHECK(xy.matching == yx.matching);
    for (std::size_t i = 0; i < c; ++i)
      for (std::size_t j = 0; j < c; ++j)
        CHECK(xy.confusion[i][j] == yx.confusion[j][i]);
  }
}
