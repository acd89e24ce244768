#pragma once

// Periodic pseudo-spectral representation of a 2D incompressible velocity
// field on the torus [0,L)^2.
//
// Physical samples are stored row-major with x2 varying fastest:
//   value(i1, i2) = data[i1 * n + i2],  x = (i1 * L / n, i2 * L / n).
// Spectral coefficients use the conjugate-symmetry-reduced layout of a real
// 2D transform: n rows (k1) by n/2 + 1 columns (k2 >= 0), normalized so that
// u(x) = sum_k c_k exp(i k.x).

#include <array>
#include <complex>
#include <cstddef>
#include <memory>
#include <vector>

namespace nsv {

using Complex = std::complex<double>;

struct Vec2 {
  double x1 = 0.0;
  double x2 = 0.0;
};

inline Vec2 operator+(Vec2 a, Vec2 b) { return {a.x1 + b.x1, a.x2 + b.x2}; }
inline Vec2 operator-(Vec2 a, Vec2 b) { return {a.x1 - b.x1, a.x2 - b.x2}; }
inline Vec2 operator*(double s, Vec2 a) { return {s * a.x1, s * a.x2}; }

class SpectralGrid {
 public:
  /// n must be even and >= 8; length must be positive.
  static std::shared_ptr<const SpectralGrid> create(int n, double length);

  ~SpectralGrid();
  SpectralGrid(const SpectralGrid&) = delete;
  SpectralGrid& operator=(const SpectralGrid&) = delete;

  int n() const { return n_; }
  double length() const { return length_; }
  double spacing() const { return length_ / n_; }
  double cell_area() const { return spacing() * spacing(); }
  std::size_t size() const { return static_cast<std::size_t>(n_) * n_; }
  int spectral_cols() const { return n_ / 2 + 1; }
  std::size_t spectral_size() const { return static_cast<std::size_t>(n_) * spectral_cols(); }
  double coordinate(int i) const { return i * spacing(); }

  /// Signed integer frequency of row index i (also valid for column indices).
  int frequency(int i) const { return i <= n_ / 2 ? i : i - n_; }

  // Per spectral mode (reduced layout index m = row * cols + col).
  // Derivative wavenumbers have the Nyquist component zeroed; the Laplacian
  // symbol uses the true frequencies.
  double k1(std::size_t m) const { return k1_[m]; }
  double k2(std::size_t m) const { return k2_[m]; }
  double laplacian_symbol(std::size_t m) const { return ksq_[m]; }
  bool retained(std::size_t m) const { return dealias_[m] != 0; }
  /// Multiplicity of a reduced-layout mode in the full spectrum (1 or 2).
  double parseval_weight(std::size_t m) const { return weight_[m]; }

  void forward(const double* physical, Complex* spectral) const;
  void inverse(const Complex* spectral, double* physical) const;

  bool same_as(const SpectralGrid& other) const { return n_ == other.n_ && length_ == other.length_; }

 private:
  SpectralGrid(int n, double length);

  int n_;
  double length_;
  std::vector<double> k1_, k2_, ksq_, weight_;
  std::vector<unsigned char> dealias_;
  void* plan_forward_ = nullptr;
  void* plan_inverse_ = nullptr;
};

using GridPtr = std::shared_ptr<const SpectralGrid>;

struct ScalarField {
  GridPtr grid;
  std::vector<double> values;

  static ScalarField zeros(GridPtr g) { return {g, std::vector<double>(g->size(), 0.0)}; }
};

/// Arbitrary two-component field, not necessarily divergence-free.
struct VectorField {
  GridPtr grid;
  std::array<std::vector<double>, 2> comp;

  static VectorField zeros(GridPtr g) {
    return {g, {std::vector<double>(g->size(), 0.0), std::vector<double>(g->size(), 0.0)}};
  }
};

struct SpectralVector {
  GridPtr grid;
  std::array<std::vector<Complex>, 2> comp;

  static SpectralVector zeros(GridPtr g) {
    return {g, {std::vector<Complex>(g->spectral_size()), std::vector<Complex>(g->spectral_size())}};
  }
};

/// Divergence-free velocity. Only produced by operations that guarantee the
/// constraint (projection, heat flow, exact solutions) or by an explicit check.
class VelocityField {
 public:
  VelocityField() = default;

  static VelocityField zeros(GridPtr g) { return VelocityField(VectorField::zeros(std::move(g))); }
  /// Accepts `w` if max|k.w_hat| <= tol * (1 + ||w||); throws otherwise.
  static VelocityField checked(VectorField w, double tol = 1e-10);
  /// For spectral results that are divergence-free by construction.
  static VelocityField from_projected(const SpectralVector& s);

  const VectorField& field() const { return field_; }
  const GridPtr& grid() const { return field_.grid; }
  const std::vector<double>& u1() const { return field_.comp[0]; }
  const std::vector<double>& u2() const { return field_.comp[1]; }
  SpectralVector spectral() const;

 private:
  explicit VelocityField(VectorField f) : field_(std::move(f)) {}
  VectorField field_;
};

struct VorticityField {
  GridPtr grid;
  std::vector<double> omega;
};

SpectralVector to_spectral(const VectorField& w);
VectorField to_physical(const SpectralVector& s);
std::vector<Complex> to_spectral(const GridPtr& g, const std::vector<double>& scalar);
std::vector<double> to_physical(const GridPtr& g, const std::vector<Complex>& scalar);

// In-place spectral kernels.
void project_inplace(SpectralVector& s);
void heat_inplace(SpectralVector& s, double tau);
void dealias_inplace(SpectralVector& s);
/// Dealiased P(u.grad u) of a spectral velocity.
SpectralVector projected_advection(const SpectralVector& u);

VelocityField leray_project(const VectorField& w);
/// e^{tau Laplacian} u; tau must be >= 0.
VelocityField heat_propagate(const VelocityField& u, double tau);
/// P(u.grad u), pseudo-spectral with two-thirds dealiasing.
VelocityField nonlinear_term(const VelocityField& u);
VorticityField curl(const VectorField& u);
/// (sin x1 cos x2, -cos x1 sin x2) e^{-2t}; requires L = 2 pi.
VelocityField taylor_green(double t, const GridPtr& grid);

/// max over modes of |k . w_hat(k)|.
double max_divergence(const SpectralVector& s);
/// Discrete L2 inner product  sum_x a.b dx^2.
double inner_product(const VectorField& a, const VectorField& b);
double l2_norm(const VectorField& a);
double max_abs(const VectorField& a);

/// Squared norms ||u||^2, ||grad u||^2 and ||Laplacian u||^2 from Parseval
/// sums. The gradient seminorm is taken as -(u, Laplacian u) so it matches
/// the dissipation of the heat semigroup mode by mode.
struct SobolevNorms {
  double l2 = 0.0;
  double h1 = 0.0;
  double h2 = 0.0;
};
SobolevNorms sobolev_norms(const SpectralVector& s);

}  // namespace nsv
