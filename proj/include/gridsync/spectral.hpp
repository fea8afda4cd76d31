#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstring>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "gridsync/grid_model.hpp"
#include "gridsync/matrix.hpp"

namespace gridsync {

struct SpectralSummary {
  double lambda_max = 0.0;
  std::vector<double> top_vector;   // unit eigenvector for lambda_max
  std::vector<double> all_lambdas;  // ascending; empty unless a full solve ran
};

struct EigenDecomposition {
  std::vector<double> values;                // ascending
  std::vector<std::vector<double>> vectors;  // vectors[k] pairs with values[k]
};

struct ModeRoots {
  std::complex<double> phi1, phi2;  // phi1 has the larger real part
};

struct Prop1Verdict {
  bool synchronizable = false;
  double lambda_max = 0.0;
  double threshold = 0.0;
  double margin = 0.0;  // threshold - lambda_max
};

struct StateSpectrum {
  std::vector<std::complex<double>> roots;  // 2N state-matrix eigenvalues
  double abscissa = 0.0;                    // max Re
  bool synchronizable_direct = false;       // abscissa < 0
};

namespace detail {

// Householder reduction to tridiagonal form, touching only the lower
// triangle so the inner loops stay unit-stride. Destroys `a`. On return d
// holds the diagonal and e the subdiagonals (e[0] = 0, e[i] couples i-1,i).
inline void tridiagonalize_lower(double* a, std::size_t n, double* d, double* e, double* v,
                                 double* w) {
  e[0] = 0.0;
  for (std::size_t k = n - 1; k >= 2; --k) {
    const std::size_t m = k;
    double* rowk = a + k * n;
    double sig = 0.0;
    for (std::size_t j = 0; j < m; ++j) sig += rowk[j] * rowk[j];
    const double alpha = rowk[m - 1];
    if (sig == 0.0 || sig == alpha * alpha) {
      e[k] = alpha;
      continue;
    }
    const double norm = std::sqrt(sig);
    const double bs = (alpha >= 0.0) ? norm : -norm;
    e[k] = -bs;
    for (std::size_t j = 0; j < m; ++j) v[j] = rowk[j];
    v[m - 1] = alpha + bs;
    const double vtv = sig - alpha * alpha + v[m - 1] * v[m - 1];
    const double beta = 2.0 / vtv;
    // w = beta * A v from the lower triangle (dot + scatter per row)
    for (std::size_t j = 0; j < m; ++j) w[j] = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      const double* rowi = a + i * n;
      const double vi = v[i];
      double s = rowi[i] * vi;
      for (std::size_t j = 0; j < i; ++j) {
        s += rowi[j] * v[j];
        w[j] += rowi[j] * vi;
      }
      w[i] += s;
    }
    for (std::size_t j = 0; j < m; ++j) w[j] *= beta;
    double vw = 0.0;
    for (std::size_t j = 0; j < m; ++j) vw += v[j] * w[j];
    const double kk = 0.5 * beta * vw;
    for (std::size_t j = 0; j < m; ++j) w[j] -= kk * v[j];
    // rank-2 update A -= v w' + w v' on the lower triangle
    for (std::size_t i = 0; i < m; ++i) {
      double* rowi = a + i * n;
      const double vi = v[i], wi = w[i];
      for (std::size_t j = 0; j <= i; ++j) rowi[j] -= vi * w[j] + wi * v[j];
    }
  }
  if (n >= 2) e[1] = a[1 * n + 0];
  for (std::size_t i = 0; i < n; ++i) d[i] = a[i * n + i];
}

// Number of eigenvalues of tridiag(d, e^2) strictly below x, by counting sign
// changes of the Sturm sequence. Division-free; rescales to dodge over- and
// underflow for large orders.
inline int sturm_count_below(const double* d, const double* esq, std::size_t n, double x) {
  int changes = 0;
  double pm1 = 1.0;
  double p = d[0] - x;
  if (std::signbit(p) != std::signbit(pm1)) ++changes;
  for (std::size_t i = 1; i < n; ++i) {
    const double pn = (d[i] - x) * p - esq[i] * pm1;
    if (std::signbit(pn) != std::signbit(p)) ++changes;
    pm1 = p;
    p = pn;
    const double ap = std::fabs(p);
    if (ap > 1e200) {
      p *= 1e-200;
      pm1 *= 1e-200;
    } else if (ap < 1e-200 && ap != 0.0) {
      p *= 1e200;
      pm1 *= 1e200;
    }
  }
  return changes;
}

// True iff every eigenvalue of tridiag(d, e^2) lies strictly below x, i.e.
// T - xI is negative definite, so the Sturm sequence must flip sign at every
// step. Exits at the first sign agreement.
inline bool sturm_all_below(const double* d, const double* esq, std::size_t n, double x) {
  double pm1 = 1.0;
  double p = d[0] - x;
  if (!std::signbit(p)) return false;
  for (std::size_t i = 1; i < n; ++i) {
    const double pn = (d[i] - x) * p - esq[i] * pm1;
    if (std::signbit(pn) == std::signbit(p)) return false;
    pm1 = p;
    p = pn;
    const double ap = std::fabs(p);
    if (ap > 1e200) {
      p *= 1e-200;
      pm1 *= 1e-200;
    } else if (ap < 1e-200 && ap != 0.0) {
      p *= 1e200;
      pm1 *= 1e200;
    }
  }
  return true;
}

// Largest eigenvalue of the tridiagonal (d, e) by bisection. The lower start
// is max(d_i) (Schur-Horn), the upper a Gershgorin bound.
inline double tridiag_largest(const double* d, const double* e, std::size_t n,
                              std::vector<double>& esq_buf) {
  if (n == 1) return d[0];
  esq_buf.resize(n);
  esq_buf[0] = 0.0;
  for (std::size_t i = 1; i < n; ++i) esq_buf[i] = e[i] * e[i];
  double lo = d[0], hi = d[0];
  for (std::size_t i = 0; i < n; ++i) {
    const double r = std::fabs(e[i]) + (i + 1 < n ? std::fabs(e[i + 1]) : 0.0);
    lo = std::max(lo, d[i]);
    hi = std::max(hi, d[i] + r);
  }
  while (hi - lo > 1e-14 * std::max(1.0, std::max(std::fabs(lo), std::fabs(hi)))) {
    const double mid = 0.5 * (lo + hi);
    if (mid == lo || mid == hi) break;
    if (sturm_all_below(d, esq_buf.data(), n, mid))
      hi = mid;
    else
      lo = mid;
  }
  return 0.5 * (lo + hi);
}

// Roots of the monic quadratic x^2 + b x + c, numerically stable split.
inline std::pair<std::complex<double>, std::complex<double>> quadratic_roots_monic(double b,
                                                                                   double c) {
  const double disc = b * b - 4.0 * c;
  if (disc >= 0.0) {
    const double sq = std::sqrt(disc);
    double r1, r2;
    if (b >= 0.0) {
      const double q = -0.5 * (b + sq);
      r1 = (q != 0.0) ? c / q : 0.0;
      r2 = q;
    } else {
      const double q = -0.5 * (b - sq);
      r1 = q;
      r2 = (q != 0.0) ? c / q : 0.0;
    }
    if (r1 < r2) std::swap(r1, r2);
    return {std::complex<double>(r1, 0.0), std::complex<double>(r2, 0.0)};
  }
  const double re = -0.5 * b;
  const double im = 0.5 * std::sqrt(-disc);
  return {std::complex<double>(re, im), std::complex<double>(re, -im)};
}

}  // namespace detail

// Full symmetric eigendecomposition by cyclic Jacobi rotations; converges
// when the off-diagonal Frobenius mass falls below tol * ||A||_F. Values come
// back ascending with matching unit eigenvectors (sign fixed so the largest-
// magnitude component is positive). Throws on a convergence failure, which
// for symmetric input would indicate a broken invariant.
inline EigenDecomposition full_decomposition(const SymMatrix& a_in, double tol = 1e-12) {
  if (!(tol > 0.0)) throw std::invalid_argument("full_decomposition: tol must be > 0");
  const std::size_t n = a_in.order();
  if (n == 0) throw std::invalid_argument("full_decomposition: empty matrix");
  std::vector<double> a = a_in.data();
  std::vector<double> vmat(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) vmat[i * n + i] = 1.0;

  const double fnorm = a_in.frobenius_norm();
  const double off_target = tol * fnorm;
  const int max_sweeps = 64;
  double off = 0.0;
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    off = 0.0;
    for (std::size_t p = 0; p < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) off += a[p * n + q] * a[p * n + q];
    off = std::sqrt(2.0 * off);
    if (off <= off_target) break;
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = a[p * n + q];
        if (apq == 0.0) continue;
        const double app = a[p * n + p];
        const double aqq = a[q * n + q];
        const double theta = 0.5 * (aqq - app) / apq;
        const double t = ((theta >= 0.0) ? 1.0 : -1.0) /
                         (std::fabs(theta) + std::sqrt(theta * theta + 1.0));
        const double cs = 1.0 / std::sqrt(t * t + 1.0);
        const double sn = t * cs;
        const double tau = sn / (1.0 + cs);
        a[p * n + p] = app - t * apq;
        a[q * n + q] = aqq + t * apq;
        a[p * n + q] = 0.0;
        a[q * n + p] = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
          if (i != p && i != q) {
            const double aip = a[i * n + p];
            const double aiq = a[i * n + q];
            a[i * n + p] = aip - sn * (aiq + tau * aip);
            a[i * n + q] = aiq + sn * (aip - tau * aiq);
            a[p * n + i] = a[i * n + p];
            a[q * n + i] = a[i * n + q];
          }
          const double vip = vmat[i * n + p];
          const double viq = vmat[i * n + q];
          vmat[i * n + p] = vip - sn * (viq + tau * vip);
          vmat[i * n + q] = viq + sn * (vip - tau * viq);
        }
      }
    }
  }
  if (off > off_target && off > tol * std::max(1.0, fnorm))
    throw std::runtime_error("full_decomposition: jacobi sweep cap reached, off-diagonal mass " +
                             std::to_string(off));

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t x, std::size_t y) { return a[x * n + x] < a[y * n + y]; });

  EigenDecomposition out;
  out.values.resize(n);
  out.vectors.assign(n, std::vector<double>(n));
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t c = order[k];
    out.values[k] = a[c * n + c];
    auto& vec = out.vectors[k];
    for (std::size_t i = 0; i < n; ++i) vec[i] = vmat[i * n + c];
    // deterministic sign: largest-magnitude component positive
    std::size_t imax = 0;
    for (std::size_t i = 1; i < n; ++i)
      if (std::fabs(vec[i]) > std::fabs(vec[imax])) imax = i;
    if (vec[imax] < 0.0)
      for (double& x : vec) x = -x;
  }
  return out;
}

// Every eigenvalue, ascending, plus the dominant eigenpair.
inline SpectralSummary full_spectrum(const SymMatrix& a) {
  EigenDecomposition d = full_decomposition(a);
  SpectralSummary s;
  s.all_lambdas = std::move(d.values);
  s.lambda_max = s.all_lambdas.back();
  s.top_vector = std::move(d.vectors.back());
  return s;
}

// Largest (signed) eigenvalue with its unit eigenvector. Orders <= 512 use
// the full Jacobi decomposition; beyond that a shifted dominant-eigenvalue
// iteration (shift = max absolute row sum, which makes lambda_max + s the
// dominant magnitude). Deterministic for fixed input.
inline SpectralSummary lambda_max(const SymMatrix& a, double tol = 1e-12) {
  if (!(tol > 0.0)) throw std::invalid_argument("lambda_max: tol must be > 0");
  const std::size_t n = a.order();
  if (n == 0) throw std::invalid_argument("lambda_max: empty matrix");
  if (n <= 512) {
    EigenDecomposition d = full_decomposition(a, tol);
    SpectralSummary s;
    s.lambda_max = d.values.back();
    s.top_vector = std::move(d.vectors.back());
    return s;
  }

  const double shift = a.max_abs_row_sum() + 1.0;
  std::vector<double> v(n), av(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = 1.0 + static_cast<double>(i) / n;
  double nn = norm2(v);
  for (double& x : v) x /= nn;
  const long max_iter = 200000;
  double lam = 0.0, resid = std::numeric_limits<double>::infinity();
  for (long it = 0; it < max_iter; ++it) {
    for (std::size_t i = 0; i < n; ++i) {
      double s = 0.0;
      for (std::size_t j = 0; j < n; ++j) s += a(i, j) * v[j];
      av[i] = s;
    }
    lam = dot(v, av);
    resid = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double r = av[i] - lam * v[i];
      resid += r * r;
    }
    resid = std::sqrt(resid);
    if (resid <= tol * std::max(1.0, std::fabs(lam))) break;
    double norm_shifted = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      av[i] += shift * v[i];
      norm_shifted += av[i] * av[i];
    }
    norm_shifted = std::sqrt(norm_shifted);
    for (std::size_t i = 0; i < n; ++i) v[i] = av[i] / norm_shifted;
  }
  if (resid > tol * std::max(1.0, std::fabs(lam)))
    throw std::runtime_error("lambda_max: power iteration did not converge; residual " +
                             std::to_string(resid));
  std::size_t imax = 0;
  for (std::size_t i = 1; i < n; ++i)
    if (std::fabs(v[i]) > std::fabs(v[imax])) imax = i;
  if (v[imax] < 0.0)
    for (double& x : v) x = -x;
  SpectralSummary s;
  s.lambda_max = lam;
  s.top_vector = std::move(v);
  return s;
}

// Value-only fast path: Householder tridiagonalization plus Sturm bisection.
// Used by the planners, where the eigenvector is not needed; agrees with the
// Jacobi path to machine precision.
inline double lambda_max_value(const SymMatrix& a) {
  const std::size_t n = a.order();
  if (n == 0) throw std::invalid_argument("lambda_max_value: empty matrix");
  if (n == 1) return a(0, 0);
  std::vector<double> work = a.data();
  std::vector<double> d(n), e(n), hv(n), hw(n), esq;
  detail::tridiagonalize_lower(work.data(), n, d.data(), e.data(), hv.data(), hw.data());
  return detail::tridiag_largest(d.data(), e.data(), n, esq);
}

// First-order perturbation estimate v'(A + Delta)v; exact when v is an
// eigenvector of A + Delta.
inline double rayleigh_estimate(const SymMatrix& a, const std::vector<double>& v,
                                const SymMatrix& delta) {
  const std::size_t n = a.order();
  if (v.size() != n || delta.order() != n)
    throw std::invalid_argument("rayleigh_estimate: dimension mismatch");
  const double nv = norm2(v);
  if (std::fabs(nv - 1.0) > 1e-8)
    throw std::invalid_argument("rayleigh_estimate: v is not a unit vector (|v| = " +
                                std::to_string(nv) + ")");
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double sa = 0.0, sd = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      sa += a(i, j) * v[j];
      sd += delta(i, j) * v[j];
    }
    acc += v[i] * (sa + sd);
  }
  return acc;
}

// Characteristic roots of one decoupled mode:
// M phi^2 + D phi - (h + V^2 X M |Z|^-2 lambda_i) = 0.
inline ModeRoots mode_roots(const GridParams& params, double lambda_i) {
  params.validate();
  const double bracket =
      params.h + params.V * params.V * params.X * params.M * lambda_i / params.z_squared();
  const auto [r1, r2] =
      detail::quadratic_roots_monic(params.D / params.M, -bracket / params.M);
  return ModeRoots{r1, r2};
}

// Threshold verdict: lambda_max(c_c L_c + c_p L_p) < threshold, strict.
inline Prop1Verdict is_synchronizable_prop1(const GridParams& params, const SymMatrix& lp,
                                            const SymMatrix& lc) {
  params.validate();
  const SymMatrix a = combined_matrix(params, lp, lc);
  Prop1Verdict v;
  v.lambda_max = lambda_max(a).lambda_max;
  v.threshold = sync_threshold(params);
  v.margin = v.threshold - v.lambda_max;
  v.synchronizable = v.lambda_max < v.threshold;
  return v;
}

// The 2N state-matrix eigenvalues, obtained exactly as the roots of
// phi^2 + (D/M) phi - lambda_i = 0 over the spectrum of the combined matrix
// (block-companion reduction; no nonsymmetric eigensolver involved).
inline StateSpectrum state_spectrum(const GridParams& params, const SymMatrix& lp,
                                    const SymMatrix& lc) {
  params.validate();
  const SymMatrix a = combined_matrix(params, lp, lc);
  const EigenDecomposition d = full_decomposition(a);
  StateSpectrum out;
  out.roots.reserve(2 * d.values.size());
  out.abscissa = -std::numeric_limits<double>::infinity();
  for (double lam : d.values) {
    const auto [r1, r2] = detail::quadratic_roots_monic(params.D / params.M, -lam);
    out.roots.push_back(r1);
    out.roots.push_back(r2);
    out.abscissa = std::max(out.abscissa, std::max(r1.real(), r2.real()));
  }
  out.synchronizable_direct = out.abscissa < 0.0;
  return out;
}

}  // namespace gridsync
