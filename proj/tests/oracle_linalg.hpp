#pragma once

// Test-only reference linear algebra, kept independent of the library under
// test: eigenvalues come from Householder reduction + implicit-shift QL
// (classic EISPACK/NR route), the matrix exponential from scaling-and-
// squaring with a Taylor kernel.

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace oracle {

// Householder reduction of symmetric a (row-major, order n) to tridiagonal,
// accumulating the orthogonal transform in-place in a.
inline void tred2(std::vector<double>& a, int n, std::vector<double>& d, std::vector<double>& e) {
  d.assign(n, 0.0);
  e.assign(n, 0.0);
  for (int i = n - 1; i >= 1; --i) {
    const int l = i - 1;
    double h = 0.0, scale = 0.0;
    if (l > 0) {
      for (int k = 0; k <= l; ++k) scale += std::fabs(a[i * n + k]);
      if (scale == 0.0) {
        e[i] = a[i * n + l];
      } else {
        for (int k = 0; k <= l; ++k) {
          a[i * n + k] /= scale;
          h += a[i * n + k] * a[i * n + k];
        }
        double f = a[i * n + l];
        double g = (f >= 0.0) ? -std::sqrt(h) : std::sqrt(h);
        e[i] = scale * g;
        h -= f * g;
        a[i * n + l] = f - g;
        f = 0.0;
        for (int j = 0; j <= l; ++j) {
          a[j * n + i] = a[i * n + j] / h;
          g = 0.0;
          for (int k = 0; k <= j; ++k) g += a[j * n + k] * a[i * n + k];
          for (int k = j + 1; k <= l; ++k) g += a[k * n + j] * a[i * n + k];
          e[j] = g / h;
          f += e[j] * a[i * n + j];
        }
        const double hh = f / (h + h);
        for (int j = 0; j <= l; ++j) {
          f = a[i * n + j];
          e[j] = g = e[j] - hh * f;
          for (int k = 0; k <= j; ++k) a[j * n + k] -= f * e[k] + g * a[i * n + k];
        }
      }
    } else {
      e[i] = a[i * n + l];
    }
    d[i] = h;
  }
  d[0] = 0.0;
  e[0] = 0.0;
  for (int i = 0; i < n; ++i) {
    const int l = i - 1;
    if (d[i] != 0.0) {
      for (int j = 0; j <= l; ++j) {
        double g = 0.0;
        for (int k = 0; k <= l; ++k) g += a[i * n + k] * a[k * n + j];
        for (int k = 0; k <= l; ++k) a[k * n + j] -= g * a[k * n + i];
      }
    }
    d[i] = a[i * n + i];
    a[i * n + i] = 1.0;
    for (int j = 0; j <= l; ++j) a[j * n + i] = a[i * n + j] = 0.0;
  }
}

// Implicit-shift QL on the tridiagonal (d, e); z accumulates eigenvectors
// (columns). On return d holds eigenvalues, unordered.
inline void tqli(std::vector<double>& d, std::vector<double>& e, std::vector<double>& z, int n) {
  for (int i = 1; i < n; ++i) e[i - 1] = e[i];
  e[n - 1] = 0.0;
  for (int l = 0; l < n; ++l) {
    int iter = 0;
    int m;
    do {
      for (m = l; m < n - 1; ++m) {
        const double dd = std::fabs(d[m]) + std::fabs(d[m + 1]);
        if (std::fabs(e[m]) <= 1e-300 + 2.3e-16 * dd) break;
      }
      if (m != l) {
        if (iter++ == 60) throw std::runtime_error("oracle tqli: too many iterations");
        double g = (d[l + 1] - d[l]) / (2.0 * e[l]);
        double r = std::hypot(g, 1.0);
        g = d[m] - d[l] + e[l] / (g + std::copysign(r, g));
        double s = 1.0, c = 1.0, p = 0.0;
        int i;
        for (i = m - 1; i >= l; --i) {
          double f = s * e[i];
          const double b = c * e[i];
          r = std::hypot(f, g);
          e[i + 1] = r;
          if (r == 0.0) {
            d[i + 1] -= p;
            e[m] = 0.0;
            break;
          }
          s = f / r;
          c = g / r;
          g = d[i + 1] - p;
          r = (d[i] - g) * s + 2.0 * c * b;
          p = s * r;
          d[i + 1] = g + p;
          g = c * r - b;
          for (int k = 0; k < n; ++k) {
            f = z[k * n + i + 1];
            z[k * n + i + 1] = s * z[k * n + i] + c * f;
            z[k * n + i] = c * z[k * n + i] - s * f;
          }
        }
        if (r == 0.0 && i >= l) continue;
        d[l] -= p;
        e[l] = g;
        e[m] = 0.0;
      }
    } while (m != l);
  }
}

struct Eigensystem {
  std::vector<double> values;               // ascending
  std::vector<std::vector<double>> vectors; // vectors[k] matches values[k]
};

// Full symmetric eigensystem from a row-major buffer.
inline Eigensystem eigensystem(std::vector<double> a, int n) {
  std::vector<double> d, e;
  tred2(a, n, d, e);
  tqli(d, e, a, n);
  std::vector<int> order(n);
  for (int i = 0; i < n; ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](int x, int y) { return d[x] < d[y]; });
  Eigensystem out;
  out.values.resize(n);
  out.vectors.assign(n, std::vector<double>(n));
  for (int k = 0; k < n; ++k) {
    out.values[k] = d[order[k]];
    for (int i = 0; i < n; ++i) out.vectors[k][i] = a[i * n + order[k]];
  }
  return out;
}

inline std::vector<double> eigenvalues(std::vector<double> a, int n) {
  return eigensystem(std::move(a), n).values;
}

// 2-norm of a symmetric matrix = max |eigenvalue|.
inline double sym_norm2(const std::vector<double>& a, int n) {
  auto vals = eigenvalues(a, n);
  return std::max(std::fabs(vals.front()), std::fabs(vals.back()));
}

// --- dense helpers -----------------------------------------------------

inline std::vector<double> matmul(const std::vector<double>& a, const std::vector<double>& b,
                                  int n) {
  std::vector<double> c(static_cast<std::size_t>(n) * n, 0.0);
  for (int i = 0; i < n; ++i)
    for (int k = 0; k < n; ++k) {
      const double aik = a[i * n + k];
      if (aik == 0.0) continue;
      for (int j = 0; j < n; ++j) c[i * n + j] += aik * b[k * n + j];
    }
  return c;
}

inline std::vector<double> matvec(const std::vector<double>& a, const std::vector<double>& x,
                                  int n) {
  std::vector<double> y(n, 0.0);
  for (int i = 0; i < n; ++i) {
    double s = 0.0;
    for (int j = 0; j < n; ++j) s += a[i * n + j] * x[j];
    y[i] = s;
  }
  return y;
}

// exp(A) by scaling-and-squaring with a long Taylor kernel; ample accuracy
// for the desk-scale matrices the tests use.
inline std::vector<double> expm(std::vector<double> a, int n) {
  double norm1 = 0.0;
  for (int j = 0; j < n; ++j) {
    double s = 0.0;
    for (int i = 0; i < n; ++i) s += std::fabs(a[i * n + j]);
    norm1 = std::max(norm1, s);
  }
  int squarings = 0;
  while (norm1 > 0.25) {
    norm1 *= 0.5;
    ++squarings;
  }
  const double scale = std::ldexp(1.0, -squarings);
  for (double& v : a) v *= scale;

  std::vector<double> result(static_cast<std::size_t>(n) * n, 0.0);
  for (int i = 0; i < n; ++i) result[i * n + i] = 1.0;
  std::vector<double> term = result;
  for (int k = 1; k <= 24; ++k) {
    term = matmul(term, a, n);
    const double inv = 1.0 / k;
    for (double& v : term) v *= inv;
    for (std::size_t i = 0; i < term.size(); ++i) result[i] += term[i];
  }
  for (int s = 0; s < squarings; ++s) result = matmul(result, result, n);
  return result;
}

}  // namespace oracle
