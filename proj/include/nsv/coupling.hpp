#pragma once

// Two-way coupling of the fluid and the particle phase over short time
// windows. Inside a window the velocity is represented by its values at the
// Gauss-Lobatto nodes and updated with the mild (Duhamel) formulation
//   u(s) = e^{s Lap} u0 + int_0^s e^{(s - r) Lap} P[-(u.grad)u - rho u + j](r) dr,
// while f is transported along the characteristics of the current velocity
// path. The two updates are repeated until the velocity path stops moving.

#include <functional>
#include <vector>

#include "nsv/kinetic.hpp"
#include "nsv/spectral.hpp"

namespace nsv {

struct SimState {
  VelocityField u;
  DistributionFunction f;
  double t = 0.0;
  MomentSet moments;

  /// Builds a consistent state; f.time is set to t.
  static SimState make(VelocityField u, DistributionFunction f, double t);
};

enum class SweepMode { jacobi, gauss_seidel };

struct PicardConfig {
  double window = 0.01;
  double tol = 1e-10;
  int max_iter = 20;
  int quadrature_nodes = 5;
  SweepMode sweep = SweepMode::jacobi;
  KineticOptions kinetic;

  void validate() const;
};

struct StepReport {
  int iterations = 0;
  std::vector<double> increments;           ///< X-norm of successive path differences
  std::vector<double> contraction_factors;  ///< increments[i] / increments[i-1]
  bool converged = false;
  double x_norm = 0.0;  ///< X-norm of the accepted velocity path
  double y_norm = 0.0;  ///< max over nodes of max(||f||_inf, M0 f)
  double span = 0.0;    ///< window length actually used
};

/// -rho u + j at every grid point.
VectorField drag_force(const MomentSet& moments, const VelocityField& u);

/// Gauss-Lobatto nodes and weights on [-1, 1], endpoints included.
void gauss_lobatto(int q, std::vector<double>& nodes, std::vector<double>& weights);

/// Exact heat multipliers and Duhamel weights for one window length.
/// For a forcing path N given at the nodes s_r,
///   u_hat(s_q) = e^{-|k|^2 s_q} u0_hat + sum_r W_qr(|k|^2) N_hat(s_r),
///   W_qr(lam) = int_0^{s_q} e^{-lam (s_q - s)} l_r(s) ds,
/// with l_r the Lagrange basis on the nodes. W is integrated by composite
/// Gauss-Legendre, so it stays accurate for stiff modes.
class DuhamelQuadrature {
 public:
  DuhamelQuadrature(GridPtr grid, double span, int nodes);

  double span() const { return span_; }
  int nodes() const { return static_cast<int>(offsets_.size()); }
  /// Node offsets s_q in [0, span].
  const std::vector<double>& offsets() const { return offsets_; }
  /// Quadrature weights of the nodes on [0, span].
  const std::vector<double>& weights() const { return weights_; }

  /// Velocity at every node. `forcing` holds one spectral field per node and
  /// must be divergence-free for the result to be.
  std::vector<SpectralVector> apply(const SpectralVector& u0, const std::vector<SpectralVector>& forcing) const;

 private:
  GridPtr grid_;
  double span_;
  std::vector<double> offsets_, weights_;
  // Per integer |f|^2 class: heat[q] then W[q][r], laid out contiguously.
  std::vector<int> mode_class_;
  std::vector<double> table_;
};

/// Spectral P[-(u.grad)u - rho u + j] at one node; null moments mean f = 0.
SpectralVector coupled_forcing(const VelocityField& u, const MomentSet* moments);

/// One Duhamel sweep: new velocity at every node from the current path and
/// the moments along it. An empty moments path means f = 0.
std::vector<VelocityField> duhamel_update(const std::vector<VelocityField>& u_path,
                                          const std::vector<MomentSet>& moments_path, const VelocityField& u0,
                                          const DuhamelQuadrature& quad);

/// Discrete X-norm of a path sampled at the quadrature nodes:
/// max_q (||u||^2 + ||grad u||^2)^{1/2} + (sum_q w_q ||Lap u||^2)^{1/2}.
double path_x_norm(const std::vector<SpectralVector>& path, const DuhamelQuadrature& quad);

/// Fixed-point iteration over one window of length `span` (cfg.window when
/// span <= 0). Returns the state at the window end and the iteration log; on
/// non-convergence the returned state is the last iterate.
std::pair<SimState, StepReport> picard_solve(const SimState& state, const PicardConfig& cfg, double span = 0.0);

using StepObserver = std::function<void(const SimState&, const StepReport&)>;

/// Chains windows up to t_end. A window that does not converge is split in
/// two halves, recursively up to `max_halvings` times; beyond that an Error
/// with code not_converged is thrown after the observer has seen every
/// accepted window.
SimState advance(const SimState& state, double t_end, const PicardConfig& cfg, const StepObserver& observer = {},
                 int max_halvings = 5);

}  // namespace nsv
