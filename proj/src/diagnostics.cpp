#include "nsv/diagnostics.hpp"

#include <algorithm>
#include <cmath>

#include "nsv/error.hpp"

namespace nsv {

namespace {

std::vector<double> curl_spectral(const GridPtr& g, const SpectralVector& s) {
  std::vector<Complex> w(g->spectral_size());
  const Complex I{0.0, 1.0};
  for (std::size_t m = 0; m < w.size(); ++m) w[m] = I * (g->k1(m) * s.comp[1][m] - g->k2(m) * s.comp[0][m]);
  return to_physical(g, w);
}

// curl P(u.grad u) - Lap w - curl(-rho u + j) in physical space.
std::vector<double> vorticity_rhs(const SimState& s) {
  const GridPtr& g = s.u.grid();
  const SpectralVector us = s.u.spectral();
  std::vector<double> out = curl_spectral(g, projected_advection(us));
  SpectralVector lap = us;
  for (int c = 0; c < 2; ++c)
    for (std::size_t m = 0; m < g->spectral_size(); ++m) lap.comp[c][m] *= -g->laplacian_symbol(m);
  const auto lw = curl_spectral(g, lap);
  const auto fw = curl_spectral(g, to_spectral(drag_force(s.moments, s.u)));
  for (std::size_t p = 0; p < out.size(); ++p) out[p] += -lw[p] - fw[p];
  return out;
}

}  // namespace

double fluid_energy(const VelocityField& u) { return inner_product(u.field(), u.field()); }

double particle_functional(const MomentSet& m) { return m.mass + m.second; }

double total_energy(const SimState& s) { return fluid_energy(s.u) + particle_functional(s.moments); }

DissipationRates dissipation_rates(const SimState& s) {
  DissipationRates r;
  r.viscous = 2.0 * sobolev_norms(s.u).h1;
  // int f |u - v|^2 dv = rho |u|^2 - 2 u.j + m2
  const auto& m = s.moments;
  const auto& u1 = s.u.u1();
  const auto& u2 = s.u.u2();
  double sum = 0.0;
  for (std::size_t p = 0; p < u1.size(); ++p)
    sum += m.rho[p] * (u1[p] * u1[p] + u2[p] * u2[p]) - 2.0 * (u1[p] * m.j1[p] + u2[p] * m.j2[p]) + m.m2[p];
  r.drag = 2.0 * sum * s.u.grid()->cell_area();
  return r;
}

EnergyLedger EnergyTracker::record(const SimState& s) {
  const DissipationRates rates = dissipation_rates(s);
  EnergyLedger l;
  l.fluid_energy = fluid_energy(s.u);
  l.particle_functional = particle_functional(s.moments);
  if (!started) {
    t0 = last_t = s.t;
    e0 = l.fluid_energy + l.particle_functional;
    visc = drag = 0.0;
    started = true;
  } else {
    const double dt = s.t - last_t;
    visc += 0.5 * dt * (last_rates.viscous + rates.viscous);
    drag += 0.5 * dt * (last_rates.drag + rates.drag);
    last_t = s.t;
  }
  last_rates = rates;
  l.visc_dissipation = visc;
  l.drag_dissipation = drag;
  l.identity_residual = l.fluid_energy + l.particle_functional - e0 + visc + drag;
  return l;
}

double energy_identity_residual(std::span<const SimState> trajectory) {
  require(trajectory.size() >= 2, "energy residual needs at least two states");
  EnergyTracker tracker;
  EnergyLedger last;
  for (const auto& s : trajectory) last = tracker.record(s);
  return std::abs(last.identity_residual);
}

double energy_rate_residual(std::span<const SimState> trajectory) {
  require(trajectory.size() >= 3, "centered energy residual needs at least three states");
  double worst = 0.0;
  for (std::size_t i = 1; i + 1 < trajectory.size(); ++i) {
    const double de = total_energy(trajectory[i + 1]) - total_energy(trajectory[i - 1]);
    const double dt = trajectory[i + 1].t - trajectory[i - 1].t;
    worst = std::max(worst, std::abs(de / dt + dissipation_rates(trajectory[i]).total()));
  }
  return worst;
}

double vorticity_residual(const SimState& s0, const SimState& s1) {
  require(s0.u.grid()->same_as(*s1.u.grid()), "states live on different grids");
  const double dt = s1.t - s0.t;
  require(dt > 0.0, "vorticity residual needs increasing times");
  const GridPtr& g = s0.u.grid();
  const auto w0 = curl(s0.u.field()).omega;
  const auto w1 = curl(s1.u.field()).omega;
  const auto r0 = vorticity_rhs(s0);
  const auto r1 = vorticity_rhs(s1);
  double sum = 0.0;
  for (std::size_t p = 0; p < w0.size(); ++p) {
    const double r = (w1[p] - w0[p]) / dt + 0.5 * (r0[p] + r1[p]);
    sum += r * r;
  }
  return std::sqrt(sum * g->cell_area());
}

double l2_norm(const DistributionFunction& f) {
  const PhaseGrid& g = *f.grid;
  const int nv = g.n_v;
  std::vector<double> w(g.velocity_size());
  for (int j1 = 0; j1 < nv; ++j1)
    for (int j2 = 0; j2 < nv; ++j2) w[j1 * nv + j2] = g.velocity_weight(j1) * g.velocity_weight(j2);
  double sum = 0.0;
  for (std::size_t x = 0; x < g.space->size(); ++x) {
    const double* fx = f.values.data() + x * w.size();
    for (std::size_t k = 0; k < w.size(); ++k) sum += w[k] * fx[k] * fx[k];
  }
  return std::sqrt(sum * g.space->cell_area());
}

ConservationReference ConservationReference::of(const SimState& s) {
  ConservationReference r;
  r.t = s.t;
  r.mass = s.moments.mass;
  r.linf = s.f.max();
  r.l2 = l2_norm(s.f);
  r.m6 = s.moments.sixth;
  double a1 = 0.0, a2 = 0.0;
  for (std::size_t p = 0; p < s.u.u1().size(); ++p) {
    a1 += s.u.u1()[p];
    a2 += s.u.u2()[p];
  }
  const double area = s.u.grid()->cell_area();
  r.momentum = Vec2{a1 * area, a2 * area} + s.moments.momentum;
  return r;
}

ConservationReport conservation_report(const SimState& s, const ConservationReference& ref, double mass_tol) {
  ConservationReport c;
  const ConservationReference now = ConservationReference::of(s);
  c.mass = now.mass;
  c.mass_drift = ref.mass > 0.0 ? std::abs(now.mass - ref.mass) / ref.mass : std::abs(now.mass);
  c.linf_f = now.linf;
  c.linf_bound = std::exp(2.0 * (s.t - ref.t)) * ref.linf;
  c.l2_f = now.l2;
  c.l2_bound = std::exp(s.t - ref.t) * ref.l2;
  c.momentum_total = now.momentum;
  c.momentum_drift = std::hypot(now.momentum.x1 - ref.momentum.x1, now.momentum.x2 - ref.momentum.x2);
  c.m6 = now.m6;
  c.bound_violated = c.linf_f > c.linf_bound * (1.0 + 1e-6);
  c.mass_violated = c.mass_drift > mass_tol;
  return c;
}

ConservationReport conservation_report(const SimState& s, const SimState& reference, double mass_tol) {
  require(s.f.grid->same_as(*reference.f.grid), "states live on different grids");
  return conservation_report(s, ConservationReference::of(reference), mass_tol);
}

SobolevNorms sobolev_norms(const VelocityField& u) { return sobolev_norms(u.spectral()); }

}  // namespace nsv
