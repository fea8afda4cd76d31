#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace gridsync {

// Dense symmetric real matrix, row-major. All mutation goes through set()
// and add(), which write both triangles, so symmetry holds exactly by
// construction (no tolerance involved).
class SymMatrix {
 public:
  SymMatrix() = default;
  explicit SymMatrix(std::size_t n) : n_(n), a_(n * n, 0.0) {}

  std::size_t order() const { return n_; }

  double operator()(std::size_t i, std::size_t j) const { return a_[i * n_ + j]; }

  void set(std::size_t i, std::size_t j, double v) {
    a_[i * n_ + j] = v;
    a_[j * n_ + i] = v;
  }

  void add(std::size_t i, std::size_t j, double v) {
    a_[i * n_ + j] += v;
    if (i != j) a_[j * n_ + i] += v;
  }

  const std::vector<double>& data() const { return a_; }

  double row_sum(std::size_t i) const {
    double s = 0.0;
    for (std::size_t j = 0; j < n_; ++j) s += a_[i * n_ + j];
    return s;
  }

  // max_i sum_j |a_ij|; upper bound on the spectral radius.
  double max_abs_row_sum() const {
    double m = 0.0;
    for (std::size_t i = 0; i < n_; ++i) {
      double s = 0.0;
      for (std::size_t j = 0; j < n_; ++j) s += std::fabs(a_[i * n_ + j]);
      if (s > m) m = s;
    }
    return m;
  }

  double frobenius_norm() const {
    double s = 0.0;
    for (double v : a_) s += v * v;
    return std::sqrt(s);
  }

 private:
  std::size_t n_ = 0;
  std::vector<double> a_;
};

// Builds a SymMatrix from a full row-major buffer; the input must already be
// exactly symmetric.
inline SymMatrix sym_from_dense(std::size_t n, const std::vector<double>& full) {
  if (full.size() != n * n) throw std::invalid_argument("sym_from_dense: size mismatch");
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (full[i * n + j] != full[j * n + i])
        throw std::invalid_argument("sym_from_dense: input not symmetric at (" +
                                    std::to_string(i) + "," + std::to_string(j) + ")");
  SymMatrix m(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i; j < n; ++j) m.set(i, j, full[i * n + j]);
  return m;
}

// Plain dense matrix, for the (nonsymmetric) state matrix and similar.
struct DenseMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> a;

  DenseMatrix() = default;
  DenseMatrix(std::size_t r, std::size_t c) : rows(r), cols(c), a(r * c, 0.0) {}

  double operator()(std::size_t i, std::size_t j) const { return a[i * cols + j]; }
  double& operator()(std::size_t i, std::size_t j) { return a[i * cols + j]; }
};

inline double dot(const std::vector<double>& x, const std::vector<double>& y) {
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) s += x[i] * y[i];
  return s;
}

inline double norm2(const std::vector<double>& x) { return std::sqrt(dot(x, x)); }

}  // namespace gridsync
