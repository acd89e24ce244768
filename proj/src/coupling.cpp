#include "nsv/coupling.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <tuple>

#include "nsv/error.hpp"

namespace nsv {

namespace {

// Legendre P_n and its derivative at x.
std::pair<double, double> legendre(int n, double x) {
  double p0 = 1.0, p1 = x;
  if (n == 0) return {1.0, 0.0};
  for (int k = 2; k <= n; ++k) {
    const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
    p0 = p1;
    p1 = p2;
  }
  const double dp = n * (x * p1 - p0) / (x * x - 1.0);
  return {p1, dp};
}

void gauss_legendre(int n, std::vector<double>& x, std::vector<double>& w) {
  x.assign(n, 0.0);
  w.assign(n, 0.0);
  for (int i = 0; i < n; ++i) {
    double z = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    for (int it = 0; it < 100; ++it) {
      const auto [p, dp] = legendre(n, z);
      const double dz = p / dp;
      z -= dz;
      if (std::abs(dz) < 1e-16) break;
    }
    const auto [p, dp] = legendre(n, z);
    x[i] = -z;
    w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
  }
}

double lagrange_basis(const std::vector<double>& nodes, int r, double s) {
  double l = 1.0;
  for (int b = 0; b < static_cast<int>(nodes.size()); ++b)
    if (b != r) l *= (s - nodes[b]) / (nodes[r] - nodes[b]);
  return l;
}

// Window quadratures are rebuilt only when the window length changes.
std::shared_ptr<const DuhamelQuadrature> cached_quadrature(const GridPtr& grid, double span, int nodes) {
  static std::mutex mutex;
  static std::map<std::tuple<int, double, double, int>, std::shared_ptr<const DuhamelQuadrature>> cache;
  std::lock_guard<std::mutex> lock(mutex);
  const auto key = std::make_tuple(grid->n(), grid->length(), span, nodes);
  auto it = cache.find(key);
  if (it != cache.end()) return it->second;
  if (cache.size() >= 16) cache.clear();
  auto q = std::make_shared<const DuhamelQuadrature>(grid, span, nodes);
  cache.emplace(key, q);
  return q;
}

std::vector<SpectralVector> difference(const std::vector<SpectralVector>& a, const std::vector<SpectralVector>& b) {
  std::vector<SpectralVector> d = a;
  for (std::size_t q = 0; q < d.size(); ++q)
    for (int c = 0; c < 2; ++c)
      for (std::size_t m = 0; m < d[q].comp[c].size(); ++m) d[q].comp[c][m] -= b[q].comp[c][m];
  return d;
}

}  // namespace

SimState SimState::make(VelocityField u, DistributionFunction f, double t) {
  require(u.grid() && f.grid, "state needs both a velocity and a distribution");
  require(u.grid()->same_as(*f.grid->space), "velocity and distribution live on different grids");
  f.time = t;
  SimState s{std::move(u), std::move(f), t, {}};
  s.moments = compute_moments(s.f);
  return s;
}

void PicardConfig::validate() const {
  require(std::isfinite(window) && window > 0.0, "picard window must be positive");
  require(std::isfinite(tol) && tol > 0.0, "picard tolerance must be positive");
  require(max_iter >= 2, "picard max_iter must be >= 2");
  require(quadrature_nodes >= 2, "quadrature_nodes must be >= 2");
  require(kinetic.max_substep > 0.0, "characteristic substep must be positive");
}

VectorField drag_force(const MomentSet& moments, const VelocityField& u) {
  require(moments.grid && moments.grid->same_as(*u.grid()), "moments and velocity live on different grids");
  VectorField out = VectorField::zeros(u.grid());
  const auto& u1 = u.u1();
  const auto& u2 = u.u2();
  for (std::size_t p = 0; p < u1.size(); ++p) {
    out.comp[0][p] = -moments.rho[p] * u1[p] + moments.j1[p];
    out.comp[1][p] = -moments.rho[p] * u2[p] + moments.j2[p];
  }
  return out;
}

void gauss_lobatto(int q, std::vector<double>& nodes, std::vector<double>& weights) {
  require(q >= 2, "Gauss-Lobatto rule needs at least 2 nodes");
  const int n = q - 1;
  nodes.assign(q, 0.0);
  weights.assign(q, 0.0);
  nodes[0] = -1.0;
  nodes[n] = 1.0;
  // Interior nodes are the roots of P_n', found by Newton from Chebyshev-Gauss-Lobatto guesses.
  for (int i = 1; i < n; ++i) {
    double z = -std::cos(std::numbers::pi * i / n);
    for (int it = 0; it < 100; ++it) {
      const auto [p, dp] = legendre(n, z);
      // P_n'' from the Legendre equation.
      const double d2p = (2.0 * z * dp - n * (n + 1.0) * p) / (1.0 - z * z);
      const double dz = dp / d2p;
      z -= dz;
      if (std::abs(dz) < 1e-16) break;
    }
    nodes[i] = z;
  }
  for (int i = 0; i < q; ++i) {
    const double p = legendre(n, nodes[i]).first;
    weights[i] = 2.0 / (n * (n + 1.0) * p * p);
  }
}

DuhamelQuadrature::DuhamelQuadrature(GridPtr grid, double span, int nodes) : grid_(std::move(grid)), span_(span) {
  require(nodes >= 2, "quadrature_nodes must be >= 2");
  require(std::isfinite(span) && span > 0.0, "window length must be positive");
  std::vector<double> xi, wi;
  gauss_lobatto(nodes, xi, wi);
  offsets_.resize(nodes);
  weights_.resize(nodes);
  for (int q = 0; q < nodes; ++q) {
    offsets_[q] = 0.5 * span * (xi[q] + 1.0);
    weights_[q] = 0.5 * span * wi[q];
  }
  offsets_.front() = 0.0;
  offsets_.back() = span;

  const SpectralGrid& g = *grid_;
  const int n = g.n();
  const int cols = g.spectral_cols();
  std::vector<int> class_of(static_cast<std::size_t>(n) * n / 2 + 1, -1);
  std::vector<int> classes;
  mode_class_.resize(g.spectral_size());
  for (int r = 0; r < n; ++r) {
    for (int c = 0; c < cols; ++c) {
      const int f1 = g.frequency(r);
      const int kk = f1 * f1 + c * c;
      if (class_of[kk] < 0) {
        class_of[kk] = static_cast<int>(classes.size());
        classes.push_back(kk);
      }
      mode_class_[static_cast<std::size_t>(r) * cols + c] = class_of[kk];
    }
  }

  const std::size_t stride = nodes + static_cast<std::size_t>(nodes) * nodes;
  table_.assign(classes.size() * stride, 0.0);
  const double scale = 2.0 * std::numbers::pi / g.length();
  constexpr int kPanelPoints = 10;
  std::vector<double> gx, gw;
  gauss_legendre(kPanelPoints, gx, gw);
  for (std::size_t c = 0; c < classes.size(); ++c) {
    const double lam = classes[c] * scale * scale;
    double* row = table_.data() + c * stride;
    for (int q = 0; q < nodes; ++q) {
      const double sq = offsets_[q];
      row[q] = std::exp(-lam * sq);
      if (sq == 0.0) continue;
      const int panels = 1 + static_cast<int>(std::ceil(lam * sq / 2.0));
      const double width = sq / panels;
      for (int p = 0; p < panels; ++p) {
        for (int k = 0; k < kPanelPoints; ++k) {
          const double s = width * (p + 0.5 * (gx[k] + 1.0));
          const double w = 0.5 * width * gw[k] * std::exp(-lam * (sq - s));
          for (int r = 0; r < nodes; ++r) row[nodes + q * nodes + r] += w * lagrange_basis(offsets_, r, s);
        }
      }
    }
  }
}

std::vector<SpectralVector> DuhamelQuadrature::apply(const SpectralVector& u0,
                                                     const std::vector<SpectralVector>& forcing) const {
  const int nq = nodes();
  require(static_cast<int>(forcing.size()) == nq, "forcing path must have one field per node");
  require(u0.grid->same_as(*grid_), "Duhamel quadrature built for a different grid");
  const std::size_t stride = nq + static_cast<std::size_t>(nq) * nq;
  std::vector<SpectralVector> out(nq, SpectralVector::zeros(grid_));
  for (std::size_t m = 0; m < grid_->spectral_size(); ++m) {
    const double* row = table_.data() + mode_class_[m] * stride;
    for (int q = 0; q < nq; ++q) {
      const double* w = row + nq + q * nq;
      for (int c = 0; c < 2; ++c) {
        Complex acc = row[q] * u0.comp[c][m];
        for (int r = 0; r < nq; ++r) acc += w[r] * forcing[r].comp[c][m];
        out[q].comp[c][m] = acc;
      }
    }
  }
  return out;
}

SpectralVector coupled_forcing(const VelocityField& u, const MomentSet* moments) {
  SpectralVector s = projected_advection(u.spectral());
  for (auto& c : s.comp)
    for (auto& z : c) z = -z;
  if (moments) {
    SpectralVector d = to_spectral(drag_force(*moments, u));
    project_inplace(d);
    for (int c = 0; c < 2; ++c)
      for (std::size_t m = 0; m < d.comp[c].size(); ++m) s.comp[c][m] += d.comp[c][m];
  }
  return s;
}

std::vector<VelocityField> duhamel_update(const std::vector<VelocityField>& u_path,
                                          const std::vector<MomentSet>& moments_path, const VelocityField& u0,
                                          const DuhamelQuadrature& quad) {
  const std::size_t nq = quad.nodes();
  require(u_path.size() == nq, "velocity path must have one field per node");
  require(moments_path.empty() || moments_path.size() == nq, "moments path must have one entry per node");
  std::vector<SpectralVector> forcing;
  forcing.reserve(nq);
  for (std::size_t q = 0; q < nq; ++q) forcing.push_back(coupled_forcing(u_path[q], moments_path.empty() ? nullptr : &moments_path[q]));
  const auto spec = quad.apply(u0.spectral(), forcing);
  std::vector<VelocityField> out;
  out.reserve(nq);
  for (const auto& s : spec) out.push_back(VelocityField::from_projected(s));
  return out;
}

double path_x_norm(const std::vector<SpectralVector>& path, const DuhamelQuadrature& quad) {
  require(static_cast<int>(path.size()) == quad.nodes(), "path must have one field per node");
  double sup = 0.0, l2t = 0.0;
  for (std::size_t q = 0; q < path.size(); ++q) {
    const SobolevNorms s = sobolev_norms(path[q]);
    sup = std::max(sup, std::sqrt(s.l2 + s.h1));
    l2t += quad.weights()[q] * s.h2;
  }
  return sup + std::sqrt(l2t);
}

std::pair<SimState, StepReport> picard_solve(const SimState& state, const PicardConfig& cfg, double span) {
  cfg.validate();
  if (span <= 0.0) span = cfg.window;
  const auto quad = cached_quadrature(state.u.grid(), span, cfg.quadrature_nodes);
  const int nq = quad->nodes();
  const auto& offs = quad->offsets();
  std::vector<double> times(nq);
  for (int q = 0; q < nq; ++q) times[q] = state.t + offs[q];
  times.back() = state.t + span;

  const bool kinetic = !state.f.is_zero();
  const KineticTransport transport(state.f);

  StepReport report;
  report.span = span;
  std::vector<VelocityField> path(nq, state.u);
  std::vector<SpectralVector> path_spec(nq, state.u.spectral());
  std::vector<MomentSet> moments;
  if (kinetic) moments.assign(nq, state.moments);
  DistributionFunction f_end = state.f;
  double y_norm = 0.0;

  for (int it = 1; it <= cfg.max_iter; ++it) {
    std::vector<MomentSet> traced;
    DistributionFunction f_last = state.f;
    double y = 0.0;
    if (kinetic) {
      const GridVelocitySampler sampler(times, path);
      traced.reserve(nq);
      traced.push_back(state.moments);
      y = std::max(state.f.max(), state.moments.mass);
      for (int q = 1; q < nq; ++q) {
        DistributionFunction fq = transport.trace(sampler, times[q] - state.t, cfg.kinetic);
        traced.push_back(compute_moments(fq));
        y = std::max({y, fq.max(), traced.back().mass});
        if (q == nq - 1) f_last = std::move(fq);
      }
    }
    const auto& forcing_moments = (cfg.sweep == SweepMode::gauss_seidel) ? traced : moments;
    std::vector<VelocityField> next = duhamel_update(path, forcing_moments, state.u, *quad);
    std::vector<SpectralVector> next_spec;
    next_spec.reserve(nq);
    for (const auto& v : next) next_spec.push_back(v.spectral());

    const double inc = path_x_norm(difference(next_spec, path_spec), *quad);
    if (!std::isfinite(inc)) {
      report.increments.push_back(inc);
      report.iterations = it;
      break;
    }
    if (!report.increments.empty())
      report.contraction_factors.push_back(report.increments.back() > 0.0 ? inc / report.increments.back() : 0.0);
    report.increments.push_back(inc);
    report.iterations = it;

    path = std::move(next);
    path_spec = std::move(next_spec);
    moments = std::move(traced);
    f_end = std::move(f_last);
    y_norm = y;
    if (inc <= cfg.tol) {
      report.converged = true;
      break;
    }
  }

  report.x_norm = path_x_norm(path_spec, *quad);
  report.y_norm = y_norm;
  SimState out = SimState::make(std::move(path.back()), std::move(f_end), state.t + span);
  return {std::move(out), std::move(report)};
}

namespace {

void advance_span(SimState& state, double span, const PicardConfig& cfg, const StepObserver& observer, int depth,
                  int max_halvings) {
  auto [next, report] = picard_solve(state, cfg, span);
  if (report.converged) {
    state = std::move(next);
    if (observer) observer(state, report);
    return;
  }
  if (depth >= max_halvings)
    fail(ErrorCode::not_converged, "Picard iteration did not converge at t = " + std::to_string(state.t) +
                                       " with window " + std::to_string(span));
  advance_span(state, 0.5 * span, cfg, observer, depth + 1, max_halvings);
  advance_span(state, 0.5 * span, cfg, observer, depth + 1, max_halvings);
}

}  // namespace

SimState advance(const SimState& state, double t_end, const PicardConfig& cfg, const StepObserver& observer,
                 int max_halvings) {
  cfg.validate();
  require(std::isfinite(t_end) && t_end >= state.t, "t_end must not precede the state time");
  SimState cur = state;
  const double snap = 1e-9 * cfg.window;
  while (t_end - cur.t > snap) {
    double span = std::min(cfg.window, t_end - cur.t);
    if (t_end - (cur.t + span) <= snap) span = t_end - cur.t;
    advance_span(cur, span, cfg, observer, 0, max_halvings);
  }
  return cur;
}

}  // namespace nsv
