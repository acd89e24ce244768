#pragma once

// Uniform cubic B-spline interpolation helpers. Coefficients c solve
// (c[i-1] + 4 c[i] + c[i+1]) / 6 = f[i] so the spline passes through the
// samples. Periodic axes wrap; bounded axes treat coefficients outside the
// grid as zero.

#include <cmath>
#include <cstddef>
#include <vector>

#if defined(__AVX2__) && defined(__FMA__)
#include <immintrin.h>
#endif

namespace nsv::detail {

/// Weights of the four B-splines centred at i-1, i, i+1, i+2 for a point at
/// fractional offset a in [0, 1] from node i.
inline void bspline_weights(double a, double* w) {
  const double b = 1.0 - a;
  const double a2 = a * a, a3 = a2 * a;
  w[0] = b * b * b / 6.0;
  w[1] = (3.0 * a3 - 6.0 * a2 + 4.0) / 6.0;
  w[2] = (-3.0 * a3 + 3.0 * a2 + 3.0 * a + 1.0) / 6.0;
  w[3] = a3 / 6.0;
}

/// Thomas factorization of tridiag(1/6, b_i, 1/6).
class Tridiagonal {
 public:
  explicit Tridiagonal(std::vector<double> diag) : cp_(diag.size()), inv_(diag.size()) {
    constexpr double off = 1.0 / 6.0;
    const std::size_t n = diag.size();
    inv_[0] = 1.0 / diag[0];
    cp_[0] = off * inv_[0];
    for (std::size_t i = 1; i < n; ++i) {
      inv_[i] = 1.0 / (diag[i] - off * cp_[i - 1]);
      cp_[i] = off * inv_[i];
    }
  }

  void solve(double* x, std::ptrdiff_t stride) const {
    constexpr double off = 1.0 / 6.0;
    const std::size_t n = cp_.size();
    x[0] *= inv_[0];
    for (std::size_t i = 1; i < n; ++i) x[i * stride] = (x[i * stride] - off * x[(i - 1) * stride]) * inv_[i];
    for (std::size_t i = n - 1; i-- > 0;) x[i * stride] -= cp_[i] * x[(i + 1) * stride];
  }

  std::size_t size() const { return cp_.size(); }

 private:
  std::vector<double> cp_, inv_;
};

/// Coefficients of a spline whose neighbours outside [0, n) vanish.
class BoundedPrefilter {
 public:
  explicit BoundedPrefilter(int n) : tri_(std::vector<double>(n, 4.0 / 6.0)) {}
  void apply(double* x, std::ptrdiff_t stride) const { tri_.solve(x, stride); }

 private:
  Tridiagonal tri_;
};

/// Cyclic system via Sherman-Morrison on the corner entries.
class PeriodicPrefilter {
 public:
  explicit PeriodicPrefilter(int n) : n_(n), tri_(modified_diag(n)), z_(n, 0.0) {
    z_[0] = gamma();
    z_[n - 1] = corner();
    tri_.solve(z_.data(), 1);
    denom_ = 1.0 + z_[0] + corner() * z_[n - 1] / gamma();
  }

  void apply(double* x, std::ptrdiff_t stride) const {
    tri_.solve(x, stride);
    const double fact = (x[0] + corner() * x[(n_ - 1) * stride] / gamma()) / denom_;
    for (int i = 0; i < n_; ++i) x[i * stride] -= fact * z_[i];
  }

 private:
  static constexpr double corner() { return 1.0 / 6.0; }
  static constexpr double gamma() { return -4.0 / 6.0; }
  static std::vector<double> modified_diag(int n) {
    std::vector<double> d(n, 4.0 / 6.0);
    d[0] -= gamma();
    d[n - 1] -= corner() * corner() / gamma();
    return d;
  }

  int n_;
  Tridiagonal tri_;
  std::vector<double> z_;
  double denom_ = 1.0;
};

/// Periodic 2D spline coefficients with one ghost layer before and two after
/// on each axis: padded index p = i + 1, edge n + 3.
inline std::vector<double> periodic_spline_2d(const std::vector<double>& values, int n) {
  std::vector<double> c(values);
  PeriodicPrefilter pre(n);
  for (int i = 0; i < n; ++i) pre.apply(c.data() + static_cast<std::size_t>(i) * n, 1);
  for (int j = 0; j < n; ++j) pre.apply(c.data() + j, n);
  const int np = n + 3;
  std::vector<double> padded(static_cast<std::size_t>(np) * np);
  for (int p = 0; p < np; ++p) {
    const int i = (p - 1 + n) % n;
    for (int q = 0; q < np; ++q) {
      const int j = (q - 1 + n) % n;
      padded[static_cast<std::size_t>(p) * np + q] = c[static_cast<std::size_t>(i) * n + j];
    }
  }
  return padded;
}

/// Splits a periodic coordinate into cell index in [0, n) and offset.
inline void periodic_locate(double x, double inv_h, int n, int& i, double& a) {
  const double s = x * inv_h;
  const double fl = std::floor(s);
  a = s - fl;
  // Feet are almost always within one period of the grid; avoid the divide.
  if (fl >= 0.0 && fl < n) {
    i = static_cast<int>(fl);
  } else {
    const double w = fl - n * std::floor(fl / n);
    i = static_cast<int>(w);
    if (i >= n) i -= n;
  }
}

inline double eval_periodic_2d(const double* padded, int n, double inv_h, double x1, double x2) {
  int i1, i2;
  double a1, a2;
  periodic_locate(x1, inv_h, n, i1, a1);
  periodic_locate(x2, inv_h, n, i2, a2);
  double w1[4], w2[4];
  bspline_weights(a1, w1);
  bspline_weights(a2, w2);
  const int np = n + 3;
  const double* base = padded + static_cast<std::size_t>(i1) * np + i2;
  double sum = 0.0;
  for (int p = 0; p < 4; ++p) {
    const double* row = base + static_cast<std::size_t>(p) * np;
    sum += w1[p] * (w2[0] * row[0] + w2[1] * row[1] + w2[2] * row[2] + w2[3] * row[3]);
  }
  return sum;
}

/// Tensor cubic spline over a 4^4 block of coefficients. `base` points at
/// the first coefficient; s1 and s2 are the strides of the two outer axes,
/// s3 the stride of the third axis (the fourth is contiguous).
inline double eval_tensor_4d(const double* base, std::size_t s1, std::size_t s2, std::size_t s3, const double* w1,
                             const double* w2, const double* w3, const double* w4) {
#if defined(__AVX2__) && defined(__FMA__)
  __m256d a0 = _mm256_setzero_pd(), a1 = a0, a2 = a0, a3 = a0;
  for (int p = 0; p < 4; ++p) {
    for (int q = 0; q < 4; ++q) {
      const __m256d w = _mm256_set1_pd(w1[p] * w2[q]);
      const double* blk = base + p * s1 + q * s2;
      a0 = _mm256_fmadd_pd(w, _mm256_loadu_pd(blk), a0);
      a1 = _mm256_fmadd_pd(w, _mm256_loadu_pd(blk + s3), a1);
      a2 = _mm256_fmadd_pd(w, _mm256_loadu_pd(blk + 2 * s3), a2);
      a3 = _mm256_fmadd_pd(w, _mm256_loadu_pd(blk + 3 * s3), a3);
    }
  }
  __m256d t = _mm256_mul_pd(_mm256_set1_pd(w3[0]), a0);
  t = _mm256_fmadd_pd(_mm256_set1_pd(w3[1]), a1, t);
  t = _mm256_fmadd_pd(_mm256_set1_pd(w3[2]), a2, t);
  t = _mm256_fmadd_pd(_mm256_set1_pd(w3[3]), a3, t);
  t = _mm256_mul_pd(t, _mm256_loadu_pd(w4));
  alignas(32) double lanes[4];
  _mm256_store_pd(lanes, t);
  return (lanes[0] + lanes[1]) + (lanes[2] + lanes[3]);
#else
  double acc[4][4] = {};
  for (int p = 0; p < 4; ++p) {
    for (int q = 0; q < 4; ++q) {
      const double w = w1[p] * w2[q];
      const double* blk = base + p * s1 + q * s2;
      for (int r = 0; r < 4; ++r)
        for (int s = 0; s < 4; ++s) acc[r][s] += w * blk[r * s3 + s];
    }
  }
  double lanes[4];
  for (int s = 0; s < 4; ++s) lanes[s] = (w3[0] * acc[0][s] + w3[1] * acc[1][s] + w3[2] * acc[2][s] + w3[3] * acc[3][s]) * w4[s];
  return (lanes[0] + lanes[1]) + (lanes[2] + lanes[3]);
#endif
}

}  // namespace nsv::detail
