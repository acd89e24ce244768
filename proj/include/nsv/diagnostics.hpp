#pragma once

// Quantities controlled by the a-priori estimates and residuals of the
// balance laws, evaluated on simulation states.
//
// Energy:      E = int |u|^2 dx + int int f (1 + |v|^2) dv dx
// Dissipation: D = 2 ||grad u||^2 + 2 int int f |u - v|^2 dv dx
// The continuous system satisfies dE/dt + D = 0.

#include <span>

#include "nsv/coupling.hpp"

namespace nsv {

struct EnergyLedger {
  double fluid_energy = 0.0;
  double particle_functional = 0.0;
  double visc_dissipation = 0.0;  ///< running int 2 ||grad u||^2 ds
  double drag_dissipation = 0.0;  ///< running int 2 int int f |u - v|^2 ds
  double identity_residual = 0.0; ///< E(t) - E(t0) + dissipation so far
};

struct DissipationRates {
  double viscous = 0.0;
  double drag = 0.0;
  double total() const { return viscous + drag; }
};

double fluid_energy(const VelocityField& u);
double particle_functional(const MomentSet& m);
double total_energy(const SimState& s);
DissipationRates dissipation_rates(const SimState& s);

/// Accumulates the dissipation integrals along a trajectory with the
/// trapezoid rule on the recorded states. All members are plain values so
/// the tracker can be persisted and restored.
struct EnergyTracker {
  double t0 = 0.0;
  double e0 = 0.0;
  double last_t = 0.0;
  DissipationRates last_rates;
  double visc = 0.0;
  double drag = 0.0;
  bool started = false;

  EnergyLedger record(const SimState& s);
};

/// Integrated balance over the given states:
///   |E(last) - E(first) + trapezoid int D dt|.
double energy_identity_residual(std::span<const SimState> trajectory);

/// Pointwise balance at interior states by centered differences:
///   max_i |(E_{i+1} - E_{i-1}) / (t_{i+1} - t_{i-1}) + D_i|.
double energy_rate_residual(std::span<const SimState> trajectory);

/// L2 norm of the vorticity equation residual between consecutive states,
///   (w1 - w0)/dt + mean over both states of [curl P(u.grad u) - Lap w - curl(-rho u + j)],
/// with the same dealiased advection operator the integrator uses.
double vorticity_residual(const SimState& s0, const SimState& s1);

/// Quantities of the initial state that later reports are measured against.
struct ConservationReference {
  double t = 0.0;
  double mass = 0.0;
  double linf = 0.0;
  double l2 = 0.0;
  double m6 = 0.0;
  Vec2 momentum;

  static ConservationReference of(const SimState& s);
};

struct ConservationReport {
  double mass = 0.0;
  double mass_drift = 0.0;  ///< |M0 - M0_ref| / M0_ref (0 when M0_ref = 0)
  double linf_f = 0.0;
  double linf_bound = 0.0;  ///< e^{2(t - t_ref)} ||f_ref||_inf
  double l2_f = 0.0;
  double l2_bound = 0.0;    ///< e^{t - t_ref} ||f_ref||_2
  Vec2 momentum_total;      ///< int u dx + int int v f dv dx
  double momentum_drift = 0.0;
  double m6 = 0.0;
  bool bound_violated = false;
  bool mass_violated = false;
};

double l2_norm(const DistributionFunction& f);

ConservationReport conservation_report(const SimState& s, const ConservationReference& ref, double mass_tol = 1e-4);
ConservationReport conservation_report(const SimState& s, const SimState& reference, double mass_tol = 1e-4);

SobolevNorms sobolev_norms(const VelocityField& u);

}  // namespace nsv
