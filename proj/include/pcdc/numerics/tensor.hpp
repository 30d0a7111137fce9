// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <pcdc/error.hpp>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <initializer_list>
#include <numeric>
#include <span>
#include <sstream>
#include <string>
#include <vector>

namespace pcdc {

using Shape = std::vector<std::size_t>;

inline std::string shape_str(const Shape &s) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < s.size(); ++i)
    os << (i ? "x" : "") << s[i];
  os << ']';
  return os.str();
}

inline std::size_t shape_numel(const Shape &s) {
  return std::accumulate(s.begin(), s.end(), std::size_t{1},
                         std::multiplies<>());
}

/// Dense row-major array of doubles. Value type; copies are deep.
class Tensor {
public:
  Tensor() = default;

  explicit Tensor(Shape shape, double fill = 0.0)
      : shape_(std::move(shape)), data_(shape_numel(shape_), fill) {}

  Tensor(Shape shape, std::vector<double> data)
      : shape_(std::move(shape)), data_(std::move(data)) {
    if (shape_numel(shape_) != data_.size())
      throw DimensionError("tensor data length " +
                           std::to_string(data_.size()) +
                           " does not match shape " + shape_str(shape_));
  }

  /// 2-D literal, e.g. `Tensor::matrix({{1, 2}, {3, 4}})`.
  static Tensor matrix(std::initializer_list<std::initializer_list<double>> rows) {
    const std::size_t m = rows.size();
    const std::size_t n = m ? rows.begin()->size() : 0;
    Tensor t({m, n});
    std::size_t i = 0;
    for (const auto &r : rows) {
      if (r.size() != n)
        throw DimensionError("ragged matrix literal");
      for (double v : r)
        t.data_[i++] = v;
    }
    return t;
  }

  static Tensor vector(std::initializer_list<double> values) {
    return Tensor({values.size()}, std::vector<double>(values));
  }

  static Tensor identity(std::size_t n) {
    Tensor t({n, n});
    for (std::size_t i = 0; i < n; ++i)
      t(i, i) = 1.0;
    return t;
  }

  [[nodiscard]] const Shape &shape() const noexcept { return shape_; }
  [[nodiscard]] std::size_t rank() const noexcept { return shape_.size(); }
  [[nodiscard]] std::size_t dim(std::size_t i) const { return shape_.at(i); }
  [[nodiscard]] std::size_t size() const noexcept { return data_.size(); }
  [[nodiscard]] bool empty() const noexcept { return data_.empty(); }

  [[nodiscard]] std::span<double> span() noexcept { return data_; }
  [[nodiscard]] std::span<const double> span() const noexcept { return data_; }
  [[nodiscard]] double *data() noexcept { return data_.data(); }
  [[nodiscard]] const double *data() const noexcept { return data_.data(); }
  [[nodiscard]] std::vector<double> &values() noexcept { return data_; }
  [[nodiscard]] const std::vector<double> &values() const noexcept {
    return data_;
  }

  double &operator[](std::size_t i) noexcept { return data_[i]; }
  double operator[](std::size_t i) const noexcept { return data_[i]; }

  double &operator()(std::size_t i, std::size_t j) noexcept {
    return data_[i * shape_[1] + j];
  }
  double operator()(std::size_t i, std::size_t j) const noexcept {
    return data_[i * shape_[1] + j];
  }
  double &operator()(std::size_t i, std::size_t j, std::size_t k) noexcept {
    return data_[(i * shape_[1] + j) * shape_[2] + k];
  }
  double operator()(std::size_t i, std::size_t j, std::size_t k) const noexcept {
    return data_[(i * shape_[1] + j) * shape_[2] + k];
  }

  /// Copy of the leading-axis slice `i` (rank drops by one).
  [[nodiscard]] Tensor slice(std::size_t i) const {
    Shape sub(shape_.begin() + 1, shape_.end());
    const std::size_t n = shape_numel(sub);
    return Tensor(std::move(sub),
                  std::vector<double>(data_.begin() + i * n,
                                      data_.begin() + (i + 1) * n));
  }

  /// Copy of leading-axis slices [begin, end).
  [[nodiscard]] Tensor slices(std::size_t begin, std::size_t end) const {
    Shape sub = shape_;
    sub[0] = end - begin;
    const std::size_t n = shape_numel(shape_) / shape_[0];
    return Tensor(std::move(sub),
                  std::vector<double>(data_.begin() + begin * n,
                                      data_.begin() + end * n));
  }

  [[nodiscard]] Tensor reshaped(Shape s) const {
    return Tensor(std::move(s), data_);
  }

  void fill(double v) { std::fill(data_.begin(), data_.end(), v); }

  [[nodiscard]] bool all_finite() const noexcept {
    for (double v : data_)
      if (!std::isfinite(v))
        return false;
    return true;
  }

  Tensor &operator+=(const Tensor &o) {
    require_same_shape(o, "+=");
    for (std::size_t i = 0; i < data_.size(); ++i)
      data_[i] += o.data_[i];
    return *this;
  }
  Tensor &operator-=(const Tensor &o) {
    require_same_shape(o, "-=");
    for (std::size_t i = 0; i < data_.size(); ++i)
      data_[i] -= o.data_[i];
    return *this;
  }
  Tensor &operator*=(double s) noexcept {
    for (double &v : data_)
      v *= s;
    return *this;
  }

  friend Tensor operator+(Tensor a, const Tensor &b) { return a += b; }
  friend Tensor operator-(Tensor a, const Tensor &b) { return a -= b; }
  friend Tensor operator*(Tensor a, double s) { return a *= s; }
  friend Tensor operator*(double s, Tensor a) { return a *= s; }

  friend bool operator==(const Tensor &a, const Tensor &b) {
    return a.shape_ == b.shape_ && a.data_ == b.data_;
  }

  void require_same_shape(const Tensor &o, const char *what) const {
    if (shape_ != o.shape_)
      throw DimensionError(std::string("shape mismatch in ") + what + ": " +
                           shape_str(shape_) + " vs " + shape_str(o.shape_));
  }

private:
  Shape shape_;
  std::vector<double> data_;
};

namespace kernels {

// All kernels accumulate in a fixed loop order so results are reproducible.

/// C[m x n] += A[m x k] * B[k x n]
inline void gemm_acc(const double *a, const double *b, double *c,
                     std::size_t m, std::size_t k, std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    double *ci = c + i * n;
    const double *ai = a + i * k;
    for (std::size_t p = 0; p < k; ++p) {
      const double aip = ai[p];
      const double *bp = b + p * n;
      for (std::size_t j = 0; j < n; ++j)
        ci[j] += aip * bp[j];
    }
  }
}

/// C[k x n] += A[m x k]^T * B[m x n]
inline void gemm_tn_acc(const double *a, const double *b, double *c,
                        std::size_t m, std::size_t k, std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    const double *ai = a + i * k;
    const double *bi = b + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const double aip = ai[p];
      double *cp = c + p * n;
      for (std::size_t j = 0; j < n; ++j)
        cp[j] += aip * bi[j];
    }
  }
}

/// C[m x k] += A[m x n] * B[k x n]^T
inline void gemm_nt_acc(const double *a, const double *b, double *c,
                        std::size_t m, std::size_t n, std::size_t k) {
  // Transposing B first turns the inner loop into a contiguous axpy.
  thread_local std::vector<double> bt;
  bt.resize(n * k);
  for (std::size_t p = 0; p < k; ++p)
    for (std::size_t j = 0; j < n; ++j)
      bt[j * k + p] = b[p * n + j];
  gemm_acc(a, bt.data(), c, m, n, k);
}

} // namespace kernels

inline void require_matrix(const Tensor &t, const char *what) {
  if (t.rank() != 2)
    throw DimensionError(std::string(what) + " expects a matrix, got " +
                         shape_str(t.shape()));
}

/// Standard matrix product.
inline Tensor matmul(const Tensor &a, const Tensor &b) {
  require_matrix(a, "matmul");
  require_matrix(b, "matmul");
  if (a.dim(1) != b.dim(0))
    throw DimensionError("matmul inner extents differ: " + shape_str(a.shape()) +
                         " x " + shape_str(b.shape()));
  Tensor c({a.dim(0), b.dim(1)});
  kernels::gemm_acc(a.data(), b.data(), c.data(), a.dim(0), a.dim(1), b.dim(1));
  return c;
}

/// a^T * b
inline Tensor matmul_tn(const Tensor &a, const Tensor &b) {
  require_matrix(a, "matmul_tn");
  require_matrix(b, "matmul_tn");
  if (a.dim(0) != b.dim(0))
    throw DimensionError("matmul_tn row counts differ");
  Tensor c({a.dim(1), b.dim(1)});
  kernels::gemm_tn_acc(a.data(), b.data(), c.data(), a.dim(0), a.dim(1),
                       b.dim(1));
  return c;
}

/// a * b^T
inline Tensor matmul_nt(const Tensor &a, const Tensor &b) {
  require_matrix(a, "matmul_nt");
  require_matrix(b, "matmul_nt");
  if (a.dim(1) != b.dim(1))
    throw DimensionError("matmul_nt column counts differ");
  Tensor c({a.dim(0), b.dim(0)});
  kernels::gemm_nt_acc(a.data(), b.data(), c.data(), a.dim(0), a.dim(1),
                       b.dim(0));
  return c;
}

inline Tensor transpose(const Tensor &a) {
  require_matrix(a, "transpose");
  Tensor t({a.dim(1), a.dim(0)});
  for (std::size_t i = 0; i < a.dim(0); ++i)
    for (std::size_t j = 0; j < a.dim(1); ++j)
      t(j, i) = a(i, j);
  return t;
}

inline double max_abs_diff(const Tensor &a, const Tensor &b) {
  a.require_same_shape(b, "max_abs_diff");
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

inline double l2_norm(std::span<const double> v) {
  double s = 0.0;
  for (double x : v)
    s += x * x;
  return std::sqrt(s);
}

} // namespace pcdc
