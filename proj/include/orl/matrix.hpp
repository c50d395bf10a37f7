#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "orl/errors.hpp"

namespace orl {

using Vector = std::vector<double>;

// Dense row-major matrix of doubles. Algebra stays in explicit loops so the
// backward passes read 1:1 against the forward code.
class Matrix {
 public:
  Matrix() = default;
  Matrix(int rows, int cols, double fill = 0.0) : rows_(rows), cols_(cols) {
    if (rows < 0 || cols < 0) throw ValidationError("Matrix: negative shape");
    data_.assign(static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols), fill);
  }

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }

  double& operator()(int r, int c) { return data_[idx(r, c)]; }
  double operator()(int r, int c) const { return data_[idx(r, c)]; }

  std::span<double> row(int r) { return {data_.data() + idx(r, 0), static_cast<std::size_t>(cols_)}; }
  std::span<const double> row(int r) const {
    return {data_.data() + idx(r, 0), static_cast<std::size_t>(cols_)};
  }

  std::span<double> flat() { return data_; }
  std::span<const double> flat() const { return data_; }

  void set_zero() { data_.assign(data_.size(), 0.0); }

  bool all_finite() const {
    for (double v : data_) {
      if (!std::isfinite(v)) return false;
    }
    return true;
  }

  friend bool operator==(const Matrix& a, const Matrix& b) {
    return a.rows_ == b.rows_ && a.cols_ == b.cols_ && a.data_ == b.data_;
  }

 private:
  std::size_t idx(int r, int c) const {
    return static_cast<std::size_t>(r) * static_cast<std::size_t>(cols_) + static_cast<std::size_t>(c);
  }

  int rows_ = 0;
  int cols_ = 0;
  std::vector<double> data_;
};

// y = M x
inline void matvec(const Matrix& m, std::span<const double> x, std::span<double> y) {
  if (static_cast<int>(x.size()) != m.cols() || static_cast<int>(y.size()) != m.rows())
    throw ValidationError("matvec: shape mismatch");
  for (int r = 0; r < m.rows(); ++r) {
    double acc = 0.0;
    const auto row = m.row(r);
    for (int c = 0; c < m.cols(); ++c) acc += row[c] * x[c];
    y[r] = acc;
  }
}

// y += M x
inline void matvec_add(const Matrix& m, std::span<const double> x, std::span<double> y) {
  if (static_cast<int>(x.size()) != m.cols() || static_cast<int>(y.size()) != m.rows())
    throw ValidationError("matvec_add: shape mismatch");
  for (int r = 0; r < m.rows(); ++r) {
    double acc = 0.0;
    const auto row = m.row(r);
    for (int c = 0; c < m.cols(); ++c) acc += row[c] * x[c];
    y[r] += acc;
  }
}

// y += M^T x
inline void matvec_transpose_add(const Matrix& m, std::span<const double> x, std::span<double> y) {
  if (static_cast<int>(x.size()) != m.rows() || static_cast<int>(y.size()) != m.cols())
    throw ValidationError("matvec_transpose_add: shape mismatch");
  for (int r = 0; r < m.rows(); ++r) {
    const double xr = x[r];
    const auto row = m.row(r);
    for (int c = 0; c < m.cols(); ++c) y[c] += row[c] * xr;
  }
}

// M += a b^T
inline void outer_add(Matrix& m, std::span<const double> a, std::span<const double> b) {
  if (static_cast<int>(a.size()) != m.rows() || static_cast<int>(b.size()) != m.cols())
    throw ValidationError("outer_add: shape mismatch");
  for (int r = 0; r < m.rows(); ++r) {
    const double ar = a[r];
    const auto row = m.row(r);
    for (int c = 0; c < m.cols(); ++c) row[c] += ar * b[c];
  }
}

// y += alpha x
inline void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  if (x.size() != y.size()) throw ValidationError("axpy: size mismatch");
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

inline double dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw ValidationError("dot: size mismatch");
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

inline double squared_norm(std::span<const double> a) { return dot(a, a); }

// index of the largest entry, smallest index on ties
inline int argmax(std::span<const double> v) {
  if (v.empty()) throw ValidationError("argmax: empty input");
  int best = 0;
  for (int i = 1; i < static_cast<int>(v.size()); ++i) {
    if (v[i] > v[best]) best = i;
  }
  return best;
}

inline void softmax_inplace(std::span<double> v) {
  if (v.empty()) throw ValidationError("softmax: empty input");
  double max_val = v[0];
  for (double x : v) max_val = std::max(max_val, x);
  double total = 0.0;
  for (double& x : v) {
    x = std::exp(x - max_val);
    total += x;
  }
  for (double& x : v) x /= total;
}

}  // namespace orl
