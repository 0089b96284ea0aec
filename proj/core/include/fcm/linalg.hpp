#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

namespace fcm {

using Vec = std::vector<double>;

// Dense row-major matrix of doubles. This is a small helper, not a linear
// algebra library; the model only needs matrix-vector products, outer-product
// accumulation and elementwise updates.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c, double fill = 0.0)
      : rows(r), cols(c), data(r * c, fill) {}

  double& at(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  double at(std::size_t r, std::size_t c) const { return data[r * cols + c]; }

  std::span<double> row(std::size_t r) { return {data.data() + r * cols, cols}; }
  std::span<const double> row(std::size_t r) const {
    return {data.data() + r * cols, cols};
  }

  bool operator==(const Matrix& other) const {
    return rows == other.rows && cols == other.cols && data == other.data;
  }
};

inline double dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw std::invalid_argument("dot: length mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double norm(std::span<const double> a) {
  double s = 0.0;
  for (double x : a) s += x * x;
  return std::sqrt(s);
}

inline double squared_distance(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size())
    throw std::invalid_argument("squared_distance: length mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

// y += a * x
inline void axpy(double a, std::span<const double> x, std::span<double> y) {
  if (x.size() != y.size()) throw std::invalid_argument("axpy: length mismatch");
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += a * x[i];
}

inline void scale(std::span<double> x, double a) {
  for (double& v : x) v *= a;
}

inline Vec matvec(const Matrix& m, std::span<const double> v) {
  if (m.cols != v.size()) throw std::invalid_argument("matvec: shape mismatch");
  Vec out(m.rows, 0.0);
  for (std::size_t r = 0; r < m.rows; ++r) out[r] = dot(m.row(r), v);
  return out;
}

// m += scale * col * row^T
inline void add_outer(Matrix& m, double scale, std::span<const double> col,
                      std::span<const double> row) {
  if (m.rows != col.size() || m.cols != row.size())
    throw std::invalid_argument("add_outer: shape mismatch");
  for (std::size_t r = 0; r < m.rows; ++r) {
    double* dst = m.data.data() + r * m.cols;
    const double cr = scale * col[r];
    for (std::size_t c = 0; c < m.cols; ++c) dst[c] += cr * row[c];
  }
}

}  // namespace fcm
