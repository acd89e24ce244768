#pragma once

#include <cmath>
#include <complex>
#include <numbers>
#include <random>
#include <vector>

#include "nsv/spectral.hpp"

namespace nsv::test {

inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

/// Sum of random Fourier modes with integer frequencies |k_i| <= kmax,
/// evaluated directly (no FFT).
inline VectorField random_field(const GridPtr& g, unsigned seed, int kmax, bool with_mean = true) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> amp(-1.0, 1.0), phase(0.0, kTwoPi);
  VectorField w = VectorField::zeros(g);
  const int n = g->n();
  const double k0 = kTwoPi / g->length();
  for (int a = -kmax; a <= kmax; ++a) {
    for (int b = 0; b <= kmax; ++b) {
      if (b == 0 && a < 0) continue;
      if (a == 0 && b == 0 && !with_mean) continue;
      for (int c = 0; c < 2; ++c) {
        const double A = amp(rng), ph = phase(rng);
        for (int i = 0; i < n; ++i)
          for (int j = 0; j < n; ++j)
            w.comp[c][static_cast<std::size_t>(i) * n + j] +=
                A * std::cos(k0 * (a * g->coordinate(i) + b * g->coordinate(j)) + ph);
      }
    }
  }
  return w;
}

/// Naive 2D DFT of a physical scalar: c(k1, k2) = N^-2 sum f(x) e^{-i k.x},
/// indexed by signed frequencies shifted by n/2.
inline std::vector<std::complex<double>> naive_dft(int n, const std::vector<double>& f) {
  std::vector<std::complex<double>> c(static_cast<std::size_t>(n) * n);
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b) {
      std::complex<double> s = 0.0;
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
          s += f[static_cast<std::size_t>(i) * n + j] * std::polar(1.0, -kTwoPi * ((a - n / 2) * i + (b - n / 2) * j) / n);
      c[static_cast<std::size_t>(a) * n + b] = s / double(n * n);
    }
  return c;
}

/// Inverse of naive_dft (real part).
inline std::vector<double> naive_idft(int n, const std::vector<std::complex<double>>& c) {
  std::vector<double> f(static_cast<std::size_t>(n) * n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      std::complex<double> s = 0.0;
      for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b)
          s += c[static_cast<std::size_t>(a) * n + b] * std::polar(1.0, kTwoPi * ((a - n / 2) * i + (b - n / 2) * j) / n);
      f[static_cast<std::size_t>(i) * n + j] = s.real();
    }
  return f;
}

inline double max_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

inline double max_diff(const VectorField& a, const VectorField& b) {
  return std::max(max_diff(a.comp[0], b.comp[0]), max_diff(a.comp[1], b.comp[1]));
}

}  // namespace nsv::test
