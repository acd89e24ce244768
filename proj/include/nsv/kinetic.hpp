#pragma once

// Phase-space representation of the particle density f(x, v) and its
// transport along the characteristics
//   dx/dt = v,   dv/dt = u(t, x) - v,
// together with the velocity moments that feed back into the fluid.

#include <functional>
#include <memory>
#include <span>
#include <vector>

#include "nsv/spectral.hpp"

namespace nsv {

/// Spatial grid shared with the fluid times a uniform velocity grid covering
/// [-v_max, v_max]^2 with spacing 2 v_max / (n_v - 1). The velocity grid
/// contains v = 0 only when n_v is odd.
///
/// Sample layout: index = ((i1 * n + i2) * n_v + j1) * n_v + j2, i.e. the two
/// space indices outermost and v2 fastest.
struct PhaseGrid {
  GridPtr space;
  int n_v = 0;
  double v_max = 0.0;

  static std::shared_ptr<const PhaseGrid> create(GridPtr space, int n_v, double v_max);

  double dv() const { return 2.0 * v_max / (n_v - 1); }
  double velocity(int j) const { return -v_max + j * dv(); }
  std::size_t velocity_size() const { return static_cast<std::size_t>(n_v) * n_v; }
  std::size_t size() const { return space->size() * velocity_size(); }
  std::size_t index(int i1, int i2, int j1, int j2) const {
    return ((static_cast<std::size_t>(i1) * space->n() + i2) * n_v + j1) * n_v + j2;
  }
  /// Trapezoid weight of velocity index j (includes dv).
  double velocity_weight(int j) const { return (j == 0 || j == n_v - 1) ? 0.5 * dv() : dv(); }
  bool same_as(const PhaseGrid& o) const { return space->same_as(*o.space) && n_v == o.n_v && v_max == o.v_max; }
};

using PhaseGridPtr = std::shared_ptr<const PhaseGrid>;

struct DistributionFunction {
  PhaseGridPtr grid;
  std::vector<double> values;
  double time = 0.0;

  static DistributionFunction zeros(PhaseGridPtr g, double t = 0.0) {
    return {g, std::vector<double>(g->size(), 0.0), t};
  }
  double max() const;
  bool is_zero() const;
};

/// Phase point; x lives on the torus [0, L)^2, v is unbounded.
struct CharacteristicState {
  Vec2 x;
  Vec2 v;
};

struct MomentSet {
  GridPtr grid;
  std::vector<double> rho;  ///< int f dv
  std::vector<double> j1;   ///< int v1 f dv
  std::vector<double> j2;   ///< int v2 f dv
  std::vector<double> m2;   ///< int |v|^2 f dv
  std::vector<double> m6;   ///< int |v|^6 f dv
  double mass = 0.0;        ///< M0
  Vec2 momentum;            ///< int j dx
  double second = 0.0;      ///< M2
  double sixth = 0.0;       ///< M6
};

// ---------------------------------------------------------------------------
// Velocity samplers

/// u(t, .) frozen at one time.
class SpatialVelocity {
 public:
  virtual ~SpatialVelocity() = default;
  virtual Vec2 operator()(Vec2 x) const = 0;
};

/// Time-indexed velocity field u(t, x). Sampling outside [t_begin, t_end]
/// is a hard error.
class VelocitySampler {
 public:
  virtual ~VelocitySampler() = default;
  virtual double t_begin() const = 0;
  virtual double t_end() const = 0;
  virtual Vec2 sample(double t, Vec2 x) const = 0;
  virtual std::unique_ptr<SpatialVelocity> at(double t) const;

  void check_time(double t) const;
};

/// Closed-form u(t, x).
class AnalyticVelocity final : public VelocitySampler {
 public:
  using Fn = std::function<Vec2(double, Vec2)>;
  AnalyticVelocity(Fn fn, double t_begin, double t_end);
  static AnalyticVelocity constant(Vec2 value);

  double t_begin() const override { return t0_; }
  double t_end() const override { return t1_; }
  Vec2 sample(double t, Vec2 x) const override;

 private:
  Fn fn_;
  double t0_, t1_;
};

/// Grid velocity samples at increasing times, interpolated by a Lagrange
/// polynomial in time and a periodic cubic spline in space. A single sample
/// is held constant over [t_begin, t_end].
class GridVelocitySampler final : public VelocitySampler {
 public:
  GridVelocitySampler(std::vector<double> times, std::vector<VelocityField> fields);
  static GridVelocitySampler constant(const VelocityField& u, double t_begin, double t_end);

  double t_begin() const override { return t0_; }
  double t_end() const override { return t1_; }
  Vec2 sample(double t, Vec2 x) const override;
  std::unique_ptr<SpatialVelocity> at(double t) const override;

 private:
  std::vector<double> time_weights(double t) const;

  GridPtr grid_;
  std::vector<double> times_;
  double t0_, t1_;
  // Padded periodic spline coefficients per time sample and component.
  std::vector<std::array<std::vector<double>, 2>> coeffs_;
};

// ---------------------------------------------------------------------------
// Operations

struct KineticOptions {
  /// Upper bound on the RK4 substep used to trace characteristics.
  double max_substep = 0.05;
  /// After clipping to [0, stencil max], return the clipped mass to nodes
  /// with room inside their bounds (clip-and-assured-sum). Off: plain clip.
  bool restore_mass = true;
};

/// Flow map of the characteristic ODE from t0 to t1 (t1 < t0 integrates
/// backward) by classical RK4 with substep h <= max_substep.
CharacteristicState integrate_characteristic(const VelocitySampler& u, CharacteristicState start, double t0,
                                             double t1, double length, double max_substep);

/// Backward semi-Lagrangian transport from one stored density. The spline
/// representation of f is built once and can be traced to several target
/// times, each trace being a single interpolation of the source.
class KineticTransport {
 public:
  explicit KineticTransport(const DistributionFunction& source);
  ~KineticTransport();
  KineticTransport(KineticTransport&&) noexcept;
  KineticTransport& operator=(KineticTransport&&) noexcept;

  /// f(t + tau) from f(t) = source with the velocity given by `u` on
  /// [t, t + tau]. Output is clipped to [0, local stencil max] before the
  /// e^{2 tau} compression factor is applied; see KineticOptions for the
  /// optional mass restoration.
  DistributionFunction trace(const VelocitySampler& u, double tau, const KineticOptions& opt = {}) const;

  const DistributionFunction& source() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

DistributionFunction semi_lagrangian_step(const DistributionFunction& f, const VelocitySampler& u, double dt,
                                          const KineticOptions& opt = {});

using PhaseDensity = std::function<double(Vec2 x, Vec2 v)>;

/// Closed-form density for u == 0: e^{2t} f0(x - v (e^t - 1), v e^t).
/// f0 must accept any x (periodic extension is the caller's business).
double exact_free_solution(const PhaseDensity& f0, double t, Vec2 x, Vec2 v);

MomentSet compute_moments(const DistributionFunction& f);

/// Mass carried by the outermost ring of velocity cells.
double boundary_mass(const DistributionFunction& f);

struct LipschitzProbeOptions {
  int time_intervals = 64;
  double max_substep = 1e-3;
};

/// max over samples of |chi_1 - chi_2|(t) (max of the torus distance in x
/// and the distance in v) divided by int_0^t ||u1 - u2||_inf ds, the sup
/// being taken over the nodes of `sup_grid`. Returns 0 if the denominator
/// vanishes.
double lipschitz_dependence_probe(const VelocitySampler& u1, const VelocitySampler& u2,
                                  std::span<const CharacteristicState> samples, double t,
                                  const SpectralGrid& sup_grid, const LipschitzProbeOptions& opt = {});

/// Minimal-image distance on the torus of edge `length`.
double torus_distance(Vec2 a, Vec2 b, double length);

}  // namespace nsv
