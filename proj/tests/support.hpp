#pragma once

// Seeded generators, independent reference implementations and small file
// helpers shared by the test executables. The references deliberately avoid
// the library's own kernels (and Eigen's decompositions) so a mistake in one
// does not hide behind the other.

#include "kann/numerics.hpp"
#include "kann/state_io.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include <unistd.h>

namespace kt {

using kann::Complex;
using kann::ComplexMatrix;
using kann::RealMatrix;
using kann::RealVector;

class Rng {
public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double normal() { return normal_(engine_); }
  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(engine_); }
  std::size_t index(std::size_t n) { return std::uniform_int_distribution<std::size_t>(0, n - 1)(engine_); }
  std::uint64_t bits() { return engine_(); }

  RealMatrix matrix(Eigen::Index rows, Eigen::Index cols) {
    RealMatrix m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i)
      for (Eigen::Index j = 0; j < cols; ++j)
        m(i, j) = normal();
    return m;
  }

  RealVector unit(Eigen::Index k) {
    RealVector v = matrix(k, 1);
    return v / v.norm();
  }

  /// k x m with orthonormal columns (Gram-Schmidt, twice for stability).
  RealMatrix orthonormal(Eigen::Index k, Eigen::Index m) {
    RealMatrix q = matrix(k, m);
    for (int pass = 0; pass < 2; ++pass)
      for (Eigen::Index j = 0; j < m; ++j) {
        for (Eigen::Index i = 0; i < j; ++i)
          q.col(j) -= q.col(i).dot(q.col(j)) * q.col(i);
        q.col(j).normalize();
      }
    return q;
  }

  kann::HiddenStateTensor tensor(std::size_t s, std::size_t n, std::size_t k) {
    auto t = kann::HiddenStateTensor::zeros(s, n, k);
    for (auto &v : t.data())
      v = normal();
    return t;
  }

private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

inline RealMatrix rotation(double theta) {
  RealMatrix r(2, 2);
  r << std::cos(theta), -std::sin(theta), std::sin(theta), std::cos(theta);
  return r;
}

inline RealMatrix block_diag(const RealMatrix &a, const RealMatrix &b) {
  RealMatrix out = RealMatrix::Zero(a.rows() + b.rows(), a.cols() + b.cols());
  out.topLeftCorner(a.rows(), a.cols()) = a;
  out.bottomRightCorner(b.rows(), b.cols()) = b;
  return out;
}

template <typename Derived> double max_abs(const Eigen::MatrixBase<Derived> &m) {
  return m.size() ? static_cast<double>(m.cwiseAbs().maxCoeff()) : 0.0;
}

// ---------------------------------------------------------------------------
// Reference linear algebra: plain Gauss-Jordan, no Eigen decompositions.

/// Inverse of a square matrix by Gauss-Jordan elimination with partial pivoting.
inline RealMatrix gauss_jordan_inverse(RealMatrix a) {
  const Eigen::Index n = a.rows();
  RealMatrix inv = RealMatrix::Identity(n, n);
  for (Eigen::Index col = 0; col < n; ++col) {
    Eigen::Index pivot = col;
    for (Eigen::Index r = col + 1; r < n; ++r)
      if (std::abs(a(r, col)) > std::abs(a(pivot, col)))
        pivot = r;
    if (a(pivot, col) == 0.0)
      throw std::runtime_error("gauss_jordan_inverse: singular matrix");
    a.row(col).swap(a.row(pivot));
    inv.row(col).swap(inv.row(pivot));
    const double p = a(col, col);
    a.row(col) /= p;
    inv.row(col) /= p;
    for (Eigen::Index r = 0; r < n; ++r) {
      if (r == col)
        continue;
      const double f = a(r, col);
      a.row(r) -= f * a.row(col);
      inv.row(r) -= f * inv.row(col);
    }
  }
  return inv;
}

/// Pseudoinverse of a full-column-rank matrix via the normal equations.
inline RealMatrix normal_equations_pinv(const RealMatrix &x) {
  return gauss_jordan_inverse(x.transpose() * x) * x.transpose();
}

/// Pseudoinverse of X = F G with F full column rank and G full row rank:
/// X+ = G^T (G G^T)^-1 (F^T F)^-1 F^T.
inline RealMatrix factored_pinv(const RealMatrix &f, const RealMatrix &g) {
  return g.transpose() * gauss_jordan_inverse(g * g.transpose()) *
         gauss_jordan_inverse(f.transpose() * f) * f.transpose();
}

/// Naive silhouette: direct transcription of the per-point definition.
inline std::vector<double> naive_silhouette(const std::vector<std::vector<double>> &pts,
                                            const std::vector<int> &labels) {
  const auto dist = [&](std::size_t i, std::size_t j) {
    double s = 0;
    for (std::size_t d = 0; d < pts[i].size(); ++d)
      s += (pts[i][d] - pts[j][d]) * (pts[i][d] - pts[j][d]);
    return std::sqrt(s);
  };
  std::vector<int> distinct(labels);
  std::sort(distinct.begin(), distinct.end());
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());

  std::vector<double> out(pts.size(), 0.0);
  for (std::size_t i = 0; i < pts.size(); ++i) {
    double a_sum = 0;
    std::size_t a_n = 0;
    for (std::size_t j = 0; j < pts.size(); ++j)
      if (j != i && labels[j] == labels[i]) {
        a_sum += dist(i, j);
        ++a_n;
      }
    if (a_n == 0)
      continue;
    const double a = a_sum / static_cast<double>(a_n);
    double b = INFINITY;
    for (int c : distinct) {
      if (c == labels[i])
        continue;
      double sum = 0;
      std::size_t n = 0;
      for (std::size_t j = 0; j < pts.size(); ++j)
        if (labels[j] == c) {
          sum += dist(i, j);
          ++n;
        }
      b = std::min(b, sum / static_cast<double>(n));
    }
    const double m = std::max(a, b);
    out[i] = m > 0 ? (b - a) / m : 0.0;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Files

class TempDir {
public:
  TempDir() {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("kann-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir &) = delete;
  TempDir &operator=(const TempDir &) = delete;

  const std::filesystem::path &path() const { return path_; }
  std::filesystem::path operator/(const std::string &name) const { return path_ / name; }

private:
  std::filesystem::path path_;
};

inline std::string read_bytes(const std::filesystem::path &p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_bytes(const std::filesystem::path &p, const std::string &bytes) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  out << bytes;
}

/// Hand-built NPY v1.0 file: magic, version, little-endian header length,
/// space-padded dict literal, then raw bytes.
inline std::string npy_bytes(const std::string &dict, const std::string &payload,
                             unsigned char major = 1, unsigned char minor = 0) {
  std::string header = dict;
  const std::size_t preamble = 10;
  std::size_t total = preamble + header.size() + 1;
  header.append((64 - total % 64) % 64, ' ');
  header.push_back('\n');
  std::string out = "\x93NUMPY";
  out.push_back(static_cast<char>(major));
  out.push_back(static_cast<char>(minor));
  out.push_back(static_cast<char>(header.size() & 0xff));
  out.push_back(static_cast<char>((header.size() >> 8) & 0xff));
  return out + header + payload;
}

inline std::string le_doubles(const std::vector<double> &values) {
  std::string out;
  for (double v : values) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, sizeof bits);
    for (int b = 0; b < 8; ++b)
      out.push_back(static_cast<char>((bits >> (8 * b)) & 0xff));
  }
  return out;
}

inline std::string be_doubles(const std::vector<double> &values) {
  std::string out;
  for (double v : values) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, sizeof bits);
    for (int b = 7; b >= 0; --b)
      out.push_back(static_cast<char>((bits >> (8 * b)) & 0xff));
  }
  return out;
}

} // namespace kt
