#include "nsv/spectral.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <mutex>
#include <numbers>

#include "nsv/error.hpp"

namespace nsv {

namespace {

// The FFTW planner is not thread-safe; execution of an existing plan is.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

constexpr Complex I{0.0, 1.0};

}  // namespace

std::shared_ptr<const SpectralGrid> SpectralGrid::create(int n, double length) {
  require(n >= 8 && n % 2 == 0, "grid.n_x must be even and >= 8");
  require(std::isfinite(length) && length > 0.0, "grid.length must be positive");
  return std::shared_ptr<const SpectralGrid>(new SpectralGrid(n, length));
}

SpectralGrid::SpectralGrid(int n, double length) : n_(n), length_(length) {
  const std::size_t ns = spectral_size();
  const int cols = spectral_cols();
  const double scale = 2.0 * std::numbers::pi / length;
  k1_.resize(ns);
  k2_.resize(ns);
  ksq_.resize(ns);
  weight_.resize(ns);
  dealias_.resize(ns);
  for (int r = 0; r < n; ++r) {
    for (int c = 0; c < cols; ++c) {
      const std::size_t m = static_cast<std::size_t>(r) * cols + c;
      const int f1 = frequency(r);
      const int f2 = c;
      k1_[m] = (r == n / 2) ? 0.0 : f1 * scale;
      k2_[m] = (c == n / 2) ? 0.0 : f2 * scale;
      ksq_[m] = (static_cast<double>(f1) * f1 + static_cast<double>(f2) * f2) * scale * scale;
      weight_[m] = (c == 0 || c == n / 2) ? 1.0 : 2.0;
      dealias_[m] = (3 * std::abs(f1) <= n && 3 * f2 <= n) ? 1 : 0;
    }
  }

  std::lock_guard<std::mutex> lock(planner_mutex());
  double* real = fftw_alloc_real(size());
  fftw_complex* cplx = fftw_alloc_complex(ns);
  const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
  plan_forward_ = fftw_plan_dft_r2c_2d(n, n, real, cplx, flags);
  plan_inverse_ = fftw_plan_dft_c2r_2d(n, n, cplx, real, flags);
  fftw_free(real);
  fftw_free(cplx);
  if (!plan_forward_ || !plan_inverse_) fail(ErrorCode::internal, "FFTW planning failed");
}

SpectralGrid::~SpectralGrid() {
  std::lock_guard<std::mutex> lock(planner_mutex());
  if (plan_forward_) fftw_destroy_plan(static_cast<fftw_plan>(plan_forward_));
  if (plan_inverse_) fftw_destroy_plan(static_cast<fftw_plan>(plan_inverse_));
}

void SpectralGrid::forward(const double* physical, Complex* spectral) const {
  fftw_execute_dft_r2c(static_cast<fftw_plan>(plan_forward_), const_cast<double*>(physical),
                       reinterpret_cast<fftw_complex*>(spectral));
  const double norm = 1.0 / static_cast<double>(size());
  for (std::size_t m = 0; m < spectral_size(); ++m) spectral[m] *= norm;
}

void SpectralGrid::inverse(const Complex* spectral, double* physical) const {
  // c2r overwrites its input.
  std::vector<Complex> scratch(spectral, spectral + spectral_size());
  fftw_execute_dft_c2r(static_cast<fftw_plan>(plan_inverse_), reinterpret_cast<fftw_complex*>(scratch.data()),
                       physical);
}

std::vector<Complex> to_spectral(const GridPtr& g, const std::vector<double>& scalar) {
  std::vector<Complex> out(g->spectral_size());
  g->forward(scalar.data(), out.data());
  return out;
}

std::vector<double> to_physical(const GridPtr& g, const std::vector<Complex>& scalar) {
  std::vector<double> out(g->size());
  g->inverse(scalar.data(), out.data());
  return out;
}

SpectralVector to_spectral(const VectorField& w) {
  return {w.grid, {to_spectral(w.grid, w.comp[0]), to_spectral(w.grid, w.comp[1])}};
}

VectorField to_physical(const SpectralVector& s) {
  return {s.grid, {to_physical(s.grid, s.comp[0]), to_physical(s.grid, s.comp[1])}};
}

void project_inplace(SpectralVector& s) {
  const SpectralGrid& g = *s.grid;
  for (std::size_t m = 0; m < g.spectral_size(); ++m) {
    const double a = g.k1(m), b = g.k2(m);
    const double kk = a * a + b * b;
    if (kk == 0.0) continue;
    const Complex dot = (a * s.comp[0][m] + b * s.comp[1][m]) / kk;
    s.comp[0][m] -= a * dot;
    s.comp[1][m] -= b * dot;
  }
}

void heat_inplace(SpectralVector& s, double tau) {
  require(tau >= 0.0, "heat propagation time must be non-negative");
  const SpectralGrid& g = *s.grid;
  for (std::size_t m = 0; m < g.spectral_size(); ++m) {
    const double decay = std::exp(-g.laplacian_symbol(m) * tau);
    s.comp[0][m] *= decay;
    s.comp[1][m] *= decay;
  }
}

void dealias_inplace(SpectralVector& s) {
  const SpectralGrid& g = *s.grid;
  for (std::size_t m = 0; m < g.spectral_size(); ++m) {
    if (!g.retained(m)) {
      s.comp[0][m] = 0.0;
      s.comp[1][m] = 0.0;
    }
  }
}

SpectralVector projected_advection(const SpectralVector& u) {
  const GridPtr& g = u.grid;
  const std::size_t ns = g->spectral_size();
  const std::size_t np = g->size();

  std::array<std::vector<double>, 2> vel{to_physical(g, u.comp[0]), to_physical(g, u.comp[1])};
  std::vector<Complex> deriv(ns);
  std::vector<double> d(np);
  VectorField adv = VectorField::zeros(g);
  for (int i = 0; i < 2; ++i) {
    for (int j = 0; j < 2; ++j) {
      for (std::size_t m = 0; m < ns; ++m) deriv[m] = I * (j == 0 ? g->k1(m) : g->k2(m)) * u.comp[i][m];
      g->inverse(deriv.data(), d.data());
      auto& out = adv.comp[i];
      const auto& uj = vel[j];
      for (std::size_t p = 0; p < np; ++p) out[p] += uj[p] * d[p];
    }
  }
  SpectralVector s = to_spectral(adv);
  dealias_inplace(s);
  project_inplace(s);
  return s;
}

VelocityField VelocityField::checked(VectorField w, double tol) {
  require(w.grid != nullptr, "velocity field has no grid");
  const double div = max_divergence(to_spectral(w));
  if (!(div <= tol * (1.0 + max_abs(w)))) fail(ErrorCode::invalid_argument, "velocity field is not divergence-free");
  return VelocityField(std::move(w));
}

VelocityField VelocityField::from_projected(const SpectralVector& s) { return VelocityField(to_physical(s)); }

SpectralVector VelocityField::spectral() const { return to_spectral(field_); }

VelocityField leray_project(const VectorField& w) {
  SpectralVector s = to_spectral(w);
  project_inplace(s);
  return VelocityField::from_projected(s);
}

VelocityField heat_propagate(const VelocityField& u, double tau) {
  require(tau >= 0.0, "heat propagation time must be non-negative");
  SpectralVector s = u.spectral();
  heat_inplace(s, tau);
  return VelocityField::from_projected(s);
}

VelocityField nonlinear_term(const VelocityField& u) { return VelocityField::from_projected(projected_advection(u.spectral())); }

VorticityField curl(const VectorField& u) {
  const GridPtr& g = u.grid;
  SpectralVector s = to_spectral(u);
  std::vector<Complex> w(g->spectral_size());
  for (std::size_t m = 0; m < w.size(); ++m) w[m] = I * (g->k1(m) * s.comp[1][m] - g->k2(m) * s.comp[0][m]);
  return {g, to_physical(g, w)};
}

VelocityField taylor_green(double t, const GridPtr& grid) {
  require(std::abs(grid->length() - 2.0 * std::numbers::pi) <= 1e-12, "taylor_green requires L = 2 pi");
  const int n = grid->n();
  VectorField w = VectorField::zeros(grid);
  const double amp = std::exp(-2.0 * t);
  for (int i = 0; i < n; ++i) {
    const double x1 = grid->coordinate(i);
    for (int j = 0; j < n; ++j) {
      const double x2 = grid->coordinate(j);
      const std::size_t p = static_cast<std::size_t>(i) * n + j;
      w.comp[0][p] = amp * std::sin(x1) * std::cos(x2);
      w.comp[1][p] = -amp * std::cos(x1) * std::sin(x2);
    }
  }
  // Exactly divergence-free on the grid up to round-off; the projection only
  // removes that round-off.
  return leray_project(w);
}

double max_divergence(const SpectralVector& s) {
  const SpectralGrid& g = *s.grid;
  double worst = 0.0;
  for (std::size_t m = 0; m < g.spectral_size(); ++m)
    worst = std::max(worst, std::abs(g.k1(m) * s.comp[0][m] + g.k2(m) * s.comp[1][m]));
  return worst;
}

double inner_product(const VectorField& a, const VectorField& b) {
  double sum = 0.0;
  for (int c = 0; c < 2; ++c)
    for (std::size_t p = 0; p < a.comp[c].size(); ++p) sum += a.comp[c][p] * b.comp[c][p];
  return sum * a.grid->cell_area();
}

double l2_norm(const VectorField& a) { return std::sqrt(inner_product(a, a)); }

double max_abs(const VectorField& a) {
  double m = 0.0;
  for (const auto& c : a.comp)
    for (double v : c) m = std::max(m, std::abs(v));
  return m;
}

SobolevNorms sobolev_norms(const SpectralVector& s) {
  const SpectralGrid& g = *s.grid;
  SobolevNorms out;
  for (std::size_t m = 0; m < g.spectral_size(); ++m) {
    const double a = g.parseval_weight(m) * (std::norm(s.comp[0][m]) + std::norm(s.comp[1][m]));
    const double kk = g.laplacian_symbol(m);
    out.l2 += a;
    out.h1 += kk * a;
    out.h2 += kk * kk * a;
  }
  const double area = g.length() * g.length();
  out.l2 *= area;
  out.h1 *= area;
  out.h2 *= area;
  return out;
}

}  // namespace nsv
