// Minimal dense numeric kernel: vectors, row-major matrices, norms, softmax.
// Everything is 64-bit double internally; serialization precision is handled
// by the model file formats, not here.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "bombworks/errors.hpp"

namespace bombworks {

using Vector = std::vector<double>;

struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;  // row-major

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c, double fill = 0.0)
      : rows(r), cols(c), data(r * c, fill) {}

  double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }

  std::size_t size() const { return data.size(); }
  bool empty() const { return data.empty(); }

  bool same_shape(const Matrix& o) const { return rows == o.rows && cols == o.cols; }
};

enum class Norm { l2, frobenius, linf };

inline double norm(const Vector& v, Norm kind = Norm::l2) {
  if (v.empty()) throw DimensionError("norm: empty vector");
  if (kind == Norm::linf) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
  }
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

inline double norm(const Matrix& m, Norm kind = Norm::frobenius) {
  if (m.empty()) throw DimensionError("norm: empty matrix");
  if (kind == Norm::linf) {
    double mx = 0.0;
    for (double x : m.data) mx = std::max(mx, std::abs(x));
    return mx;
  }
  // l2 on a matrix is taken as the Frobenius norm.
  double s = 0.0;
  for (double x : m.data) s += x * x;
  return std::sqrt(s);
}

inline Vector softmax(const Vector& logits) {
  if (logits.empty()) throw DimensionError("softmax: empty input");
  double mx = *std::max_element(logits.begin(), logits.end());
  Vector out(logits.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    out[i] = std::exp(logits[i] - mx);
    sum += out[i];
  }
  for (double& x : out) x /= sum;
  return out;
}

inline Vector matvec(const Matrix& m, const Vector& x) {
  if (m.cols != x.size()) throw DimensionError("matvec: shape mismatch");
  Vector y(m.rows, 0.0);
  for (std::size_t r = 0; r < m.rows; ++r) {
    const double* row = &m.data[r * m.cols];
    double s = 0.0;
    for (std::size_t c = 0; c < m.cols; ++c) s += row[c] * x[c];
    y[r] = s;
  }
  return y;
}

inline double dot(const Vector& a, const Vector& b) {
  if (a.size() != b.size()) throw DimensionError("dot: size mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline Vector sub(const Vector& a, const Vector& b) {
  if (a.size() != b.size()) throw DimensionError("sub: size mismatch");
  Vector out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] - b[i];
  return out;
}

inline Vector add(const Vector& a, const Vector& b) {
  if (a.size() != b.size()) throw DimensionError("add: size mismatch");
  Vector out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] + b[i];
  return out;
}

inline void axpy(double a, const Vector& x, Vector& y) {
  if (x.size() != y.size()) throw DimensionError("axpy: size mismatch");
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += a * x[i];
}

inline void scale(Vector& v, double a) {
  for (double& x : v) x *= a;
}

inline bool all_finite(const Vector& v) {
  for (double x : v)
    if (!std::isfinite(x)) return false;
  return true;
}

inline bool all_finite(const Matrix& m) {
  for (double x : m.data)
    if (!std::isfinite(x)) return false;
  return true;
}

inline int argmax(const Vector& v) {
  if (v.empty()) throw DimensionError("argmax: empty vector");
  return static_cast<int>(std::max_element(v.begin(), v.end()) - v.begin());
}

// Mean and population standard deviation.
struct MeanStd {
  double mean = 0.0;
  double std = 0.0;
};

inline MeanStd mean_std(const std::vector<double>& xs) {
  if (xs.empty()) throw InputError("mean_std: empty sample");
  double m = 0.0;
  for (double x : xs) m += x;
  m /= static_cast<double>(xs.size());
  double v = 0.0;
  for (double x : xs) v += (x - m) * (x - m);
  v /= static_cast<double>(xs.size());
  return {m, std::sqrt(v)};
}

inline double median(std::vector<double> xs) {
  if (xs.empty()) throw InputError("median: empty sample");
  std::sort(xs.begin(), xs.end());
  std::size_t n = xs.size();
  if (n % 2 == 1) return xs[n / 2];
  return 0.5 * (xs[n / 2 - 1] + xs[n / 2]);
}

}  // namespace bombworks
