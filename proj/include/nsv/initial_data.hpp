#pragma once

#include "nsv/config.hpp"
#include "nsv/coupling.hpp"
#include "nsv/kinetic.hpp"

namespace nsv {

/// Bookkeeping of the discretised initial data.
struct InitialDataInfo {
  double analytic_mass = 0.0;   ///< mass of the untruncated density
  double grid_mass = 0.0;       ///< M0 on the phase grid
  double truncated_mass = 0.0;  ///< analytic_mass - grid_mass
  double m6 = 0.0;
};

/// Deterministic initial state for `cfg` at t = 0. The velocity is always
/// Leray-projected and f clipped to f >= 0, whichever generator ran.
SimState make_initial_data(const RunConfig& cfg, InitialDataInfo* info = nullptr);

/// Profile of the kinetic bump, exp(-(r^2 / (2 sigma^2))^p) in x (distance to
/// the centre as chosen by x_profile) and in v (distance to the drift), scaled
/// to the configured analytic mass. Evaluable anywhere.
double bump_density(const InitialDataConfig& d, double length, Vec2 x, Vec2 v);

/// Same density as a callable; the normalization is computed once, so use
/// this for repeated evaluation.
PhaseDensity bump_density(const InitialDataConfig& d, double length);

/// Squared x-distance to the bump centre used by the profile.
double bump_distance2(const InitialDataConfig& d, double length, Vec2 x);

/// Integral of the x-profile over the torus (over the plane for minimal_image).
double bump_x_integral(const InitialDataConfig& d, double length);

/// Analytic integral of exp(-(|y|^2 / (2 sigma^2))^p) over the plane:
/// 2 pi sigma^2 Gamma(1 + 1/p).
double super_gaussian_integral(double sigma, double p);

}  // namespace nsv
