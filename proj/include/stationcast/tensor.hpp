#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "stationcast/errors.hpp"

namespace stationcast {

// Dense row-major tensor of doubles. Rank is dynamic; most of the code
// uses rank 1 (vectors), rank 2 (matrices) and rank 3 (slot stacks).
class Tensor {
 public:
  Tensor() = default;

  explicit Tensor(std::vector<std::size_t> shape)
      : shape_(std::move(shape)), data_(count(shape_), 0.0) {}

  Tensor(std::size_t rows, std::size_t cols)
      : shape_{rows, cols}, data_(rows * cols, 0.0) {}

  Tensor(std::vector<std::size_t> shape, std::vector<double> data)
      : shape_(std::move(shape)), data_(std::move(data)) {
    if (data_.size() != count(shape_)) {
      throw ShapeMismatchError("tensor data length does not match shape");
    }
  }

  static Tensor full(std::vector<std::size_t> shape, double v) {
    Tensor t(std::move(shape));
    std::fill(t.data_.begin(), t.data_.end(), v);
    return t;
  }

  static Tensor identity(std::size_t n) {
    Tensor t(n, n);
    for (std::size_t i = 0; i < n; ++i) t(i, i) = 1.0;
    return t;
  }

  static Tensor row(std::initializer_list<double> vals) {
    return Tensor({vals.size()}, std::vector<double>(vals));
  }

  std::size_t ndim() const { return shape_.size(); }
  std::size_t size() const { return data_.size(); }
  const std::vector<std::size_t>& shape() const { return shape_; }
  std::size_t dim(std::size_t i) const { return shape_.at(i); }

  std::size_t rows() const { return shape_.size() > 0 ? shape_[0] : 0; }
  std::size_t cols() const { return shape_.size() > 1 ? shape_[1] : 1; }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }
  std::vector<double>& vec() { return data_; }
  const std::vector<double>& vec() const { return data_; }

  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols() + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols() + c]; }

  // rank-3 access (a x b x c), used for slot-stacked tensors
  double& at3(std::size_t i, std::size_t j, std::size_t k) {
    return data_[(i * shape_[1] + j) * shape_[2] + k];
  }
  double at3(std::size_t i, std::size_t j, std::size_t k) const {
    return data_[(i * shape_[1] + j) * shape_[2] + k];
  }

  bool same_shape(const Tensor& o) const { return shape_ == o.shape_; }

  void fill(double v) { std::fill(data_.begin(), data_.end(), v); }

  bool all_finite() const {
    for (double v : data_) {
      if (!std::isfinite(v)) return false;
    }
    return true;
  }

  std::string shape_str() const {
    std::ostringstream os;
    os << "(";
    for (std::size_t i = 0; i < shape_.size(); ++i) {
      if (i) os << "x";
      os << shape_[i];
    }
    os << ")";
    return os.str();
  }

 private:
  static std::size_t count(const std::vector<std::size_t>& s) {
    return std::accumulate(s.begin(), s.end(), std::size_t{1},
                           std::multiplies<>());
  }

  std::vector<std::size_t> shape_;
  std::vector<double> data_;
};

namespace kernels {

// c = a . b, (m x k)(k x n). ikj order so the inner loop is contiguous.
inline void matmul(const double* a, const double* b, double* c,
                   std::size_t m, std::size_t k, std::size_t n) {
  std::fill(c, c + m * n, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    const double* arow = a + i * k;
    double* crow = c + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const double av = arow[p];
      const double* brow = b + p * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

// c += a . b^T, a (m x n), b (k x n), c (m x k). Used for dA = dC . B^T.
inline void matmul_nt_acc(const double* a, const double* b, double* c,
                          std::size_t m, std::size_t n, std::size_t k) {
  for (std::size_t i = 0; i < m; ++i) {
    const double* arow = a + i * n;
    double* crow = c + i * k;
    for (std::size_t p = 0; p < k; ++p) {
      const double* brow = b + p * n;
      double acc = 0.0;
      for (std::size_t j = 0; j < n; ++j) acc += arow[j] * brow[j];
      crow[p] += acc;
    }
  }
}

// c += a^T . b, a (m x k), b (m x n), c (k x n). Used for dB = A^T . dC.
inline void matmul_tn_acc(const double* a, const double* b, double* c,
                          std::size_t m, std::size_t k, std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    const double* arow = a + i * k;
    const double* brow = b + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const double av = arow[p];
      double* crow = c + p * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

}  // namespace kernels

inline Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.ndim() != 2 || b.ndim() != 2 || a.cols() != b.rows()) {
    throw ShapeMismatchError("matmul: " + a.shape_str() + " . " + b.shape_str());
  }
  Tensor c(a.rows(), b.cols());
  kernels::matmul(a.data(), b.data(), c.data(), a.rows(), a.cols(), b.cols());
  return c;
}

inline Tensor transpose(const Tensor& a) {
  Tensor t(a.cols(), a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) t(j, i) = a(i, j);
  return t;
}

}  // namespace stationcast
