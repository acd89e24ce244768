#include "nsv/initial_data.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "nsv/error.hpp"

namespace nsv {

namespace {

double periodic_offset(double d, double length) {
  d -= length * std::round(d / length);
  return d;
}

double profile(double r2, double sigma, double p) {
  const double s = r2 / (2.0 * sigma * sigma);
  return std::exp(-(p == 1.0 ? s : std::pow(s, p)));
}

VelocityField make_fluid(const RunConfig& cfg, const GridPtr& g) {
  const auto& d = cfg.initial_data;
  if (d.fluid == "zero_fluid" && d.fluid_noise == 0.0) return VelocityField::zeros(g);
  VectorField w = VectorField::zeros(g);
  const int n = g->n();
  if (d.fluid == "taylor_green_fluid") {
    const double k = 2.0 * std::numbers::pi / g->length();
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        const std::size_t p = static_cast<std::size_t>(i) * n + j;
        const double x1 = k * g->coordinate(i), x2 = k * g->coordinate(j);
        w.comp[0][p] = d.fluid_amplitude * std::sin(x1) * std::cos(x2);
        w.comp[1][p] = -d.fluid_amplitude * std::cos(x1) * std::sin(x2);
      }
    }
  }
  if (d.fluid_noise > 0.0) {
    // Stream function with random low modes |k_i| <= 3; u = (d2 psi, -d1 psi).
    std::mt19937_64 rng(cfg.seed);
    std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi), amp(-1.0, 1.0);
    const double k0 = 2.0 * std::numbers::pi / g->length();
    VectorField noise = VectorField::zeros(g);
    for (int a = -3; a <= 3; ++a) {
      for (int b = 0; b <= 3; ++b) {
        if (b == 0 && a <= 0) continue;
        const double c = amp(rng) / (a * a + b * b), ph = phase(rng);
        for (int i = 0; i < n; ++i) {
          for (int j = 0; j < n; ++j) {
            const std::size_t p = static_cast<std::size_t>(i) * n + j;
            const double arg = k0 * (a * g->coordinate(i) + b * g->coordinate(j)) + ph;
            noise.comp[0][p] += c * k0 * b * -std::sin(arg);
            noise.comp[1][p] -= c * k0 * a * -std::sin(arg);
          }
        }
      }
    }
    const double m = max_abs(noise);
    if (m > 0.0)
      for (int c = 0; c < 2; ++c)
        for (std::size_t p = 0; p < noise.comp[c].size(); ++p) w.comp[c][p] += d.fluid_noise / m * noise.comp[c][p];
  }
  return leray_project(w);
}

}  // namespace

double super_gaussian_integral(double sigma, double p) {
  return 2.0 * std::numbers::pi * sigma * sigma * std::tgamma(1.0 + 1.0 / p);
}

double bump_distance2(const InitialDataConfig& d, double length, Vec2 x) {
  const double c1 = d.center_x1 < 0.0 ? 0.5 * length : d.center_x1;
  const double c2 = d.center_x2 < 0.0 ? 0.5 * length : d.center_x2;
  const double dx1 = periodic_offset(x.x1 - c1, length), dx2 = periodic_offset(x.x2 - c2, length);
  if (d.x_profile == "minimal_image") return dx1 * dx1 + dx2 * dx2;
  const double k = 2.0 * std::numbers::pi / length;
  // 2 - cos a - cos b written with half-angle sines to avoid cancellation near the centre.
  const double s1 = std::sin(0.5 * k * dx1), s2 = std::sin(0.5 * k * dx2);
  return 4.0 * (s1 * s1 + s2 * s2) / (k * k);
}

double bump_x_integral(const InitialDataConfig& d, double length) {
  if (d.x_profile == "minimal_image") return super_gaussian_integral(d.sigma_x, d.x_exponent);
  // The periodic profile is smooth on the torus, so the trapezoid rule converges spectrally.
  const int m = std::max(512, static_cast<int>(std::ceil(16.0 * length / d.sigma_x)));
  const double h = length / m;
  InitialDataConfig centred = d;
  centred.center_x1 = centred.center_x2 = 0.0;
  if (d.x_exponent == 1.0) {
    double line = 0.0;
    for (int i = 0; i < m; ++i) line += profile(bump_distance2(centred, length, {i * h, 0.0}), d.sigma_x, 1.0);
    return line * line * h * h;
  }
  double sum = 0.0;
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j) sum += profile(bump_distance2(centred, length, {i * h, j * h}), d.sigma_x, d.x_exponent);
  return sum * h * h;
}

PhaseDensity bump_density(const InitialDataConfig& d, double length) {
  const double norm = d.bump_mass / (bump_x_integral(d, length) * super_gaussian_integral(d.sigma_v, d.v_exponent));
  return [d, length, norm](Vec2 x, Vec2 v) {
    const double dv1 = v.x1 - d.drift_v1, dv2 = v.x2 - d.drift_v2;
    return norm * profile(bump_distance2(d, length, x), d.sigma_x, d.x_exponent) *
           profile(dv1 * dv1 + dv2 * dv2, d.sigma_v, d.v_exponent);
  };
}

double bump_density(const InitialDataConfig& d, double length, Vec2 x, Vec2 v) {
  return bump_density(d, length)(x, v);
}

SimState make_initial_data(const RunConfig& cfg, InitialDataInfo* info) {
  validate(cfg);
  const auto& d = cfg.initial_data;
  std::string fluid = "zero_fluid", kinetic = "zero_kinetic";
  if (d.generator == "taylor_green_fluid") fluid = d.generator;
  else if (d.generator == "maxwellian_bump") kinetic = d.generator;
  else if (d.generator == "composite") {
    fluid = d.fluid;
    kinetic = d.kinetic;
  } else if (d.generator != "zero_fluid" && d.generator != "zero_kinetic") {
    fail(ErrorCode::config, "initial_data.generator: unknown generator '" + d.generator + "'");
  }

  const GridPtr g = SpectralGrid::create(cfg.grid.n_x, cfg.grid.length);
  const PhaseGridPtr pg = PhaseGrid::create(g, cfg.kinetic.n_v, cfg.kinetic.v_max);

  RunConfig fluid_cfg = cfg;
  fluid_cfg.initial_data.fluid = fluid;
  VelocityField u = make_fluid(fluid_cfg, g);

  DistributionFunction f = DistributionFunction::zeros(pg);
  InitialDataInfo local;
  if (kinetic == "maxwellian_bump") {
    const int n = g->n(), nv = pg->n_v;
    const double norm =
        d.bump_mass / (bump_x_integral(d, g->length()) * super_gaussian_integral(d.sigma_v, d.v_exponent));
    std::vector<double> fv(pg->velocity_size());
    for (int j1 = 0; j1 < nv; ++j1)
      for (int j2 = 0; j2 < nv; ++j2) {
        const double dv1 = pg->velocity(j1) - d.drift_v1, dv2 = pg->velocity(j2) - d.drift_v2;
        fv[j1 * nv + j2] = profile(dv1 * dv1 + dv2 * dv2, d.sigma_v, d.v_exponent);
      }
    for (int i1 = 0; i1 < n; ++i1)
      for (int i2 = 0; i2 < n; ++i2) {
        const double fx =
            norm * profile(bump_distance2(d, g->length(), {g->coordinate(i1), g->coordinate(i2)}), d.sigma_x, d.x_exponent);
        for (std::size_t j = 0; j < fv.size(); ++j) f.values[pg->index(i1, i2, 0, 0) + j] = fx * fv[j];
      }
    local.analytic_mass = d.bump_mass;
  }
  for (double& x : f.values) x = std::max(x, 0.0);

  SimState s = SimState::make(std::move(u), std::move(f), 0.0);
  local.grid_mass = s.moments.mass;
  local.truncated_mass = local.analytic_mass - local.grid_mass;
  local.m6 = s.moments.sixth;
  spdlog::info("initial data: fluid={} kinetic={} mass={:.12g} truncated_mass={:.3e} M6={:.6g}", fluid, kinetic,
               local.grid_mass, local.truncated_mass, local.m6);
  if (info) *info = local;
  return s;
}

}  // namespace nsv
