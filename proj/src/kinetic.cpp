#include "nsv/kinetic.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "nsv/error.hpp"
#include "spline.hpp"

namespace nsv {

namespace {

double time_slack(double t) { return 1e-12 * (1.0 + std::abs(t)); }

class CallbackSpatial final : public SpatialVelocity {
 public:
  CallbackSpatial(const VelocitySampler& u, double t) : u_(u), t_(t) {}
  Vec2 operator()(Vec2 x) const override { return u_.sample(t_, x); }

 private:
  const VelocitySampler& u_;
  double t_;
};

/// Periodic cubic spline of both velocity components at one time. The two
/// coefficient arrays are interleaved so one stencil walk serves both.
class SplineSpatial final : public SpatialVelocity {
 public:
  SplineSpatial(int n, double inv_h, const std::vector<double>& c1, const std::vector<double>& c2)
      : n_(n), inv_h_(inv_h), c_(2 * c1.size()) {
    for (std::size_t i = 0; i < c1.size(); ++i) {
      c_[2 * i] = c1[i];
      c_[2 * i + 1] = c2[i];
    }
  }

  Vec2 operator()(Vec2 x) const override { return eval(x); }

  Vec2 eval(Vec2 x) const {
    int i1, i2;
    double a1, a2;
    detail::periodic_locate(x.x1, inv_h_, n_, i1, a1);
    detail::periodic_locate(x.x2, inv_h_, n_, i2, a2);
    double w1[4], w2[4];
    detail::bspline_weights(a1, w1);
    detail::bspline_weights(a2, w2);
    const std::size_t np = n_ + 3;
    const double* b = c_.data() + 2 * (i1 * np + i2);
    double s1 = 0.0, s2 = 0.0;
    for (int p = 0; p < 4; ++p) {
      const double* r = b + 2 * p * np;
      const double t1 = w2[0] * r[0] + w2[1] * r[2] + w2[2] * r[4] + w2[3] * r[6];
      const double t2 = w2[0] * r[1] + w2[1] * r[3] + w2[2] * r[5] + w2[3] * r[7];
      s1 += w1[p] * t1;
      s2 += w1[p] * t2;
    }
    return {s1, s2};
  }

 private:
  int n_;
  double inv_h_;
  std::vector<double> c_;
};

struct StateRate {
  Vec2 dx, dv;
};

template <class Eval>
inline StateRate rate(const Eval& u, Vec2 x, Vec2 v) {
  const Vec2 w = u(x);
  return {v, w - v};
}

}  // namespace

// ---------------------------------------------------------------------------

std::shared_ptr<const PhaseGrid> PhaseGrid::create(GridPtr space, int n_v, double v_max) {
  require(space != nullptr, "phase grid needs a spatial grid");
  require(n_v >= 4, "kinetic.n_v must be >= 4");
  require(std::isfinite(v_max) && v_max > 0.0, "kinetic.v_max must be positive");
  auto g = std::make_shared<PhaseGrid>();
  g->space = std::move(space);
  g->n_v = n_v;
  g->v_max = v_max;
  return g;
}

double DistributionFunction::max() const {
  double m = 0.0;
  for (double v : values) m = std::max(m, v);
  return m;
}

bool DistributionFunction::is_zero() const {
  return std::all_of(values.begin(), values.end(), [](double v) { return v == 0.0; });
}

// ---------------------------------------------------------------------------
// Samplers

void VelocitySampler::check_time(double t) const {
  if (!(t >= t_begin() - time_slack(t_begin()) && t <= t_end() + time_slack(t_end())))
    fail(ErrorCode::invalid_argument, "velocity sampler evaluated outside its time range");
}

std::unique_ptr<SpatialVelocity> VelocitySampler::at(double t) const {
  check_time(t);
  return std::make_unique<CallbackSpatial>(*this, t);
}

AnalyticVelocity::AnalyticVelocity(Fn fn, double t_begin, double t_end) : fn_(std::move(fn)), t0_(t_begin), t1_(t_end) {
  require(t_begin <= t_end, "sampler time range is empty");
}

AnalyticVelocity AnalyticVelocity::constant(Vec2 value) {
  const double inf = std::numeric_limits<double>::infinity();
  return AnalyticVelocity([value](double, Vec2) { return value; }, -inf, inf);
}

Vec2 AnalyticVelocity::sample(double t, Vec2 x) const {
  check_time(t);
  return fn_(t, x);
}

GridVelocitySampler::GridVelocitySampler(std::vector<double> times, std::vector<VelocityField> fields)
    : times_(std::move(times)) {
  require(!times_.empty() && times_.size() == fields.size(), "sampler needs one field per time");
  for (std::size_t q = 1; q < times_.size(); ++q) require(times_[q] > times_[q - 1], "sampler times must increase");
  grid_ = fields.front().grid();
  for (const auto& f : fields) require(f.grid()->same_as(*grid_), "sampler fields on different grids");
  t0_ = times_.front();
  t1_ = times_.back();
  coeffs_.reserve(fields.size());
  for (const auto& f : fields)
    coeffs_.push_back({detail::periodic_spline_2d(f.u1(), grid_->n()), detail::periodic_spline_2d(f.u2(), grid_->n())});
}

GridVelocitySampler GridVelocitySampler::constant(const VelocityField& u, double t_begin, double t_end) {
  require(t_begin <= t_end, "sampler time range is empty");
  GridVelocitySampler s({t_begin}, {u});
  s.t1_ = t_end;
  return s;
}

std::vector<double> GridVelocitySampler::time_weights(double t) const {
  check_time(t);
  const std::size_t q = times_.size();
  std::vector<double> w(q, 1.0);
  if (q == 1) return w;
  for (std::size_t a = 0; a < q; ++a)
    for (std::size_t b = 0; b < q; ++b)
      if (a != b) w[a] *= (t - times_[b]) / (times_[a] - times_[b]);
  return w;
}

Vec2 GridVelocitySampler::sample(double t, Vec2 x) const {
  const auto w = time_weights(t);
  const int n = grid_->n();
  const double inv_h = 1.0 / grid_->spacing();
  Vec2 out;
  for (std::size_t q = 0; q < w.size(); ++q) {
    out.x1 += w[q] * detail::eval_periodic_2d(coeffs_[q][0].data(), n, inv_h, x.x1, x.x2);
    out.x2 += w[q] * detail::eval_periodic_2d(coeffs_[q][1].data(), n, inv_h, x.x1, x.x2);
  }
  return out;
}

std::unique_ptr<SpatialVelocity> GridVelocitySampler::at(double t) const {
  const auto w = time_weights(t);
  const std::size_t len = coeffs_.front()[0].size();
  std::vector<double> c1(len, 0.0), c2(len, 0.0);
  for (std::size_t q = 0; q < w.size(); ++q) {
    for (std::size_t i = 0; i < len; ++i) {
      c1[i] += w[q] * coeffs_[q][0][i];
      c2[i] += w[q] * coeffs_[q][1][i];
    }
  }
  return std::make_unique<SplineSpatial>(grid_->n(), 1.0 / grid_->spacing(), c1, c2);
}

// ---------------------------------------------------------------------------
// Characteristics

double torus_distance(Vec2 a, Vec2 b, double length) {
  auto wrap = [length](double d) {
    d = std::fmod(std::abs(d), length);
    return std::min(d, length - d);
  };
  return std::hypot(wrap(a.x1 - b.x1), wrap(a.x2 - b.x2));
}

CharacteristicState integrate_characteristic(const VelocitySampler& u, CharacteristicState start, double t0,
                                             double t1, double length, double max_substep) {
  require(max_substep > 0.0, "characteristic substep must be positive");
  require(length > 0.0, "torus length must be positive");
  u.check_time(t0);
  u.check_time(t1);
  const double span = t1 - t0;
  const int m = std::max(1, static_cast<int>(std::ceil(std::abs(span) / max_substep - 1e-12)));
  const double h = span / m;
  Vec2 x = start.x, v = start.v;
  for (int k = 0; k < m; ++k) {
    const double t = t0 + k * h;
    auto at = [&](double s) { return [&u, s](Vec2 p) { return u.sample(s, p); }; };
    const StateRate k1 = rate(at(t), x, v);
    const StateRate k2 = rate(at(t + 0.5 * h), x + (0.5 * h) * k1.dx, v + (0.5 * h) * k1.dv);
    const StateRate k3 = rate(at(t + 0.5 * h), x + (0.5 * h) * k2.dx, v + (0.5 * h) * k2.dv);
    const StateRate k4 = rate(at(t + h), x + h * k3.dx, v + h * k3.dv);
    x = x + (h / 6.0) * (k1.dx + 2.0 * k2.dx + 2.0 * k3.dx + k4.dx);
    v = v + (h / 6.0) * (k1.dv + 2.0 * k2.dv + 2.0 * k3.dv + k4.dv);
  }
  x.x1 -= length * std::floor(x.x1 / length);
  x.x2 -= length * std::floor(x.x2 / length);
  return {x, v};
}

// ---------------------------------------------------------------------------
// Semi-Lagrangian transport

struct KineticTransport::Impl {
  DistributionFunction source;
  bool zero = false;
  // Spline coefficients padded to (n+3)^2 (nv+3)^2 with padded index i + 1.
  std::vector<double> coeff;
  // Max of f over the 4^4 interpolation stencil of each base cell.
  std::vector<double> stencil_max;

  explicit Impl(const DistributionFunction& f) : source(f) {
    zero = f.is_zero();
    if (!zero) build();
  }

  void build() {
    const PhaseGrid& g = *source.grid;
    const int n = g.space->n();
    const int nv = g.n_v;
    const std::size_t sv2 = 1, sv1 = nv, sx2 = static_cast<std::size_t>(nv) * nv, sx1 = sx2 * n;

    std::vector<double> c = source.values;
    detail::BoundedPrefilter vpre(nv);
    detail::PeriodicPrefilter xpre(n);
    for (std::size_t x = 0; x < static_cast<std::size_t>(n) * n; ++x) {
      double* block = c.data() + x * sx2;
      for (int j1 = 0; j1 < nv; ++j1) vpre.apply(block + j1 * sv1, sv2);
      for (int j2 = 0; j2 < nv; ++j2) vpre.apply(block + j2, sv1);
    }
    for (int i1 = 0; i1 < n; ++i1)
      for (std::size_t v = 0; v < sx2; ++v) xpre.apply(c.data() + i1 * sx1 + v, sx2);
    for (int i2 = 0; i2 < n; ++i2)
      for (std::size_t v = 0; v < sx2; ++v) xpre.apply(c.data() + i2 * sx2 + v, sx1);

    const int np = n + 3, nvp = nv + 3;
    coeff.assign(static_cast<std::size_t>(np) * np * nvp * nvp, 0.0);
    for (int p1 = 0; p1 < np; ++p1) {
      const int i1 = (p1 - 1 + n) % n;
      for (int p2 = 0; p2 < np; ++p2) {
        const int i2 = (p2 - 1 + n) % n;
        for (int q1 = 1; q1 <= nv; ++q1) {
          const double* src = c.data() + g.index(i1, i2, q1 - 1, 0);
          double* dst = coeff.data() + ((static_cast<std::size_t>(p1) * np + p2) * nvp + q1) * nvp + 1;
          std::copy(src, src + nv, dst);
        }
      }
    }

    // Separable sliding max over offsets -1..+2; f >= 0 so out-of-range
    // velocity nodes contribute nothing.
    stencil_max = source.values;
    std::vector<double> line(std::max(n, nv)), out(std::max(n, nv));
    auto slide = [&](std::size_t base, std::size_t stride, int len, bool periodic) {
      for (int i = 0; i < len; ++i) line[i] = stencil_max[base + i * stride];
      for (int i = 0; i < len; ++i) {
        double m = 0.0;
        for (int o = -1; o <= 2; ++o) {
          int k = i + o;
          if (periodic) k = (k + len) % len;
          else if (k < 0 || k >= len) continue;
          m = std::max(m, line[k]);
        }
        out[i] = m;
      }
      for (int i = 0; i < len; ++i) stencil_max[base + i * stride] = out[i];
    };
    for (std::size_t x = 0; x < static_cast<std::size_t>(n) * n; ++x) {
      for (int j1 = 0; j1 < nv; ++j1) slide(x * sx2 + j1 * sv1, sv2, nv, false);
      for (int j2 = 0; j2 < nv; ++j2) slide(x * sx2 + j2, sv1, nv, false);
    }
    for (int i1 = 0; i1 < n; ++i1)
      for (std::size_t v = 0; v < sx2; ++v) slide(i1 * sx1 + v, sx2, n, true);
    for (int i2 = 0; i2 < n; ++i2)
      for (std::size_t v = 0; v < sx2; ++v) slide(i2 * sx2 + v, sx1, n, true);
  }

  // Weighted sums over one trace used by the mass restoration pass.
  struct ClipBudget {
    double before = 0.0;  // interpolated mass before clipping
    double after = 0.0;   // mass after clipping
    double room_up = 0.0;
    double room_down = 0.0;
  };

  template <class Eval>
  ClipBudget kernel(const std::vector<const Eval*>& stages, int substeps, double tau, std::vector<double>& out,
                    std::vector<double>& caps) const {
    const PhaseGrid& g = *source.grid;
    const int n = g.space->n();
    const int nv = g.n_v;
    const double inv_dx = 1.0 / g.space->spacing();
    const double vmax = g.v_max;
    const double inv_dv = 1.0 / g.dv();
    const double h = tau / substeps;
    const int np = n + 3, nvp = nv + 3;
    const std::size_t sp2 = static_cast<std::size_t>(nvp) * nvp, sp1 = sp2 * np;
    const std::size_t sm2 = static_cast<std::size_t>(nv) * nv, sm1 = sm2 * n;
    // Locals only: `out` is a double buffer the compiler cannot prove
    // distinct from the grid parameters.
    std::vector<double> vel(nv);
    for (int j = 0; j < nv; ++j) vel[j] = g.velocity(j);
    const double dx = g.space->spacing();
    const double* cf = coeff.data();
    const double* smax = stencil_max.data();
    double* dstp = out.data();
    double* capp = caps.data();
    std::vector<double> vw(nv);
    for (int j = 0; j < nv; ++j) vw[j] = g.velocity_weight(j);
    ClipBudget budget;

    for (int i1 = 0; i1 < n; ++i1) {
      for (int i2 = 0; i2 < n; ++i2) {
        const Vec2 xnode{i1 * dx, i2 * dx};
        const Vec2 unode = (*stages[0])(xnode);
        for (int j1 = 0; j1 < nv; ++j1) {
          for (int j2 = 0; j2 < nv; ++j2) {
            Vec2 x = xnode;
            Vec2 v{vel[j1], vel[j2]};
            // Backward RK4 from t + tau to t.
            for (int k = 0; k < substeps; ++k) {
              const Eval& e0 = *stages[2 * k];
              const Eval& eh = *stages[2 * k + 1];
              const Eval& e1 = *stages[2 * k + 2];
              const Vec2 u1 = (k == 0) ? unode : e0(x);
              const Vec2 k1x = v, k1v = u1 - v;
              const Vec2 x2 = x - (0.5 * h) * k1x, v2 = v - (0.5 * h) * k1v;
              const Vec2 k2x = v2, k2v = eh(x2) - v2;
              const Vec2 x3 = x - (0.5 * h) * k2x, v3 = v - (0.5 * h) * k2v;
              const Vec2 k3x = v3, k3v = eh(x3) - v3;
              const Vec2 x4 = x - h * k3x, v4 = v - h * k3v;
              const Vec2 k4x = v4, k4v = e1(x4) - v4;
              x = x - (h / 6.0) * (k1x + 2.0 * k2x + 2.0 * k3x + k4x);
              v = v - (h / 6.0) * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
            }
            const std::size_t dst = ((static_cast<std::size_t>(i1) * n + i2) * nv + j1) * nv + j2;
            if (!(std::abs(v.x1) <= vmax && std::abs(v.x2) <= vmax)) {
              dstp[dst] = 0.0;
              capp[dst] = 0.0;
              continue;
            }
            int a1, a2;
            double fa1, fa2;
            detail::periodic_locate(x.x1, inv_dx, n, a1, fa1);
            detail::periodic_locate(x.x2, inv_dx, n, a2, fa2);
            auto vlocate = [&](double vv, int& j, double& a) {
              const double s = (vv + vmax) * inv_dv;
              j = std::min(static_cast<int>(s), nv - 2);
              a = s - j;
            };
            int b1, b2;
            double fb1, fb2;
            vlocate(v.x1, b1, fb1);
            vlocate(v.x2, b2, fb2);
            double wx1[4], wx2[4], wv1[4], wv2[4];
            detail::bspline_weights(fa1, wx1);
            detail::bspline_weights(fa2, wx2);
            detail::bspline_weights(fb1, wv1);
            detail::bspline_weights(fb2, wv2);
            const double* base = cf + a1 * sp1 + a2 * sp2 + static_cast<std::size_t>(b1) * nvp + b2;
            const double sum = detail::eval_tensor_4d(base, sp1, sp2, nvp, wx1, wx2, wv1, wv2);
            const double cap = smax[a1 * sm1 + a2 * sm2 + static_cast<std::size_t>(b1) * nv + b2];
            const double kept = std::clamp(sum, 0.0, cap);
            const double w = vw[j1] * vw[j2];
            dstp[dst] = kept;
            capp[dst] = cap;
            budget.before += w * sum;
            budget.after += w * kept;
            budget.room_up += w * (cap - kept);
            budget.room_down += w * kept;
          }
        }
      }
    }
    return budget;
  }

  // Hands the mass changed by clipping back to the nodes that still have
  // room inside their bounds, proportionally to that room, so the result
  // stays in [0, cap] and carries the interpolated (pre-clip) mass.
  static void restore_mass(const ClipBudget& b, const std::vector<double>& caps, std::vector<double>& out) {
    const double deficit = b.before - b.after;
    if (deficit > 0.0 && b.room_up > 0.0) {
      const double theta = std::min(1.0, deficit / b.room_up);
      for (std::size_t i = 0; i < out.size(); ++i) out[i] += theta * (caps[i] - out[i]);
    } else if (deficit < 0.0 && b.room_down > 0.0) {
      const double theta = std::min(1.0, -deficit / b.room_down);
      for (double& x : out) x -= theta * x;
    }
  }
};

KineticTransport::KineticTransport(const DistributionFunction& source) : impl_(std::make_unique<Impl>(source)) {
  require(source.grid != nullptr && source.values.size() == source.grid->size(), "distribution does not match its grid");
}
KineticTransport::~KineticTransport() = default;
KineticTransport::KineticTransport(KineticTransport&&) noexcept = default;
KineticTransport& KineticTransport::operator=(KineticTransport&&) noexcept = default;

const DistributionFunction& KineticTransport::source() const { return impl_->source; }

DistributionFunction KineticTransport::trace(const VelocitySampler& u, double tau, const KineticOptions& opt) const {
  require(tau >= 0.0, "transport duration must be non-negative");
  require(opt.max_substep > 0.0, "characteristic substep must be positive");
  const DistributionFunction& f = impl_->source;
  const double t0 = f.time, t1 = f.time + tau;
  u.check_time(t0);
  u.check_time(t1);
  DistributionFunction out{f.grid, {}, t1};
  if (tau == 0.0) {
    out.values = f.values;
    return out;
  }
  out.values.assign(f.values.size(), 0.0);
  if (impl_->zero) return out;

  const int m = std::max(1, static_cast<int>(std::ceil(tau / opt.max_substep - 1e-12)));
  const double h = tau / m;
  std::vector<std::unique_ptr<SpatialVelocity>> stages;
  stages.reserve(2 * m + 1);
  for (int i = 0; i <= 2 * m; ++i) stages.push_back(u.at(i == 2 * m ? t0 : t1 - 0.5 * h * i));

  std::vector<const SplineSpatial*> fast;
  for (const auto& s : stages) {
    auto* p = dynamic_cast<const SplineSpatial*>(s.get());
    if (!p) break;
    fast.push_back(p);
  }
  std::vector<double> caps(out.values.size());
  Impl::ClipBudget budget;
  if (fast.size() == stages.size()) {
    struct Direct {
      const SplineSpatial* s;
      Vec2 operator()(Vec2 x) const { return s->eval(x); }
    };
    std::vector<Direct> direct;
    for (auto* p : fast) direct.push_back({p});
    std::vector<const Direct*> ptrs;
    for (auto& d : direct) ptrs.push_back(&d);
    budget = impl_->kernel(ptrs, m, tau, out.values, caps);
  } else {
    struct Virtual {
      const SpatialVelocity* s;
      Vec2 operator()(Vec2 x) const { return (*s)(x); }
    };
    std::vector<Virtual> virt;
    for (auto& s : stages) virt.push_back({s.get()});
    std::vector<const Virtual*> ptrs;
    for (auto& d : virt) ptrs.push_back(&d);
    budget = impl_->kernel(ptrs, m, tau, out.values, caps);
  }
  if (opt.restore_mass) Impl::restore_mass(budget, caps, out.values);
  const double growth = std::exp(2.0 * tau);
  for (double& x : out.values) x *= growth;
  return out;
}

DistributionFunction semi_lagrangian_step(const DistributionFunction& f, const VelocitySampler& u, double dt,
                                          const KineticOptions& opt) {
  require(dt > 0.0, "semi-Lagrangian step needs dt > 0");
  return KineticTransport(f).trace(u, dt, opt);
}

double exact_free_solution(const PhaseDensity& f0, double t, Vec2 x, Vec2 v) {
  const double et = std::exp(t);
  return std::exp(2.0 * t) * f0(x - (et - 1.0) * v, et * v);
}

// ---------------------------------------------------------------------------
// Moments

MomentSet compute_moments(const DistributionFunction& f) {
  const PhaseGrid& g = *f.grid;
  const GridPtr& sg = g.space;
  const std::size_t nx = sg->size();
  const int nv = g.n_v;
  const std::size_t nvv = g.velocity_size();

  std::vector<double> w(nvv), v1(nvv), v2(nvv), s2(nvv), s6(nvv);
  for (int j1 = 0; j1 < nv; ++j1) {
    for (int j2 = 0; j2 < nv; ++j2) {
      const std::size_t k = static_cast<std::size_t>(j1) * nv + j2;
      w[k] = g.velocity_weight(j1) * g.velocity_weight(j2);
      v1[k] = g.velocity(j1);
      v2[k] = g.velocity(j2);
      s2[k] = v1[k] * v1[k] + v2[k] * v2[k];
      s6[k] = s2[k] * s2[k] * s2[k];
    }
  }

  MomentSet m;
  m.grid = sg;
  m.rho.assign(nx, 0.0);
  m.j1.assign(nx, 0.0);
  m.j2.assign(nx, 0.0);
  m.m2.assign(nx, 0.0);
  m.m6.assign(nx, 0.0);
  for (std::size_t x = 0; x < nx; ++x) {
    const double* fx = f.values.data() + x * nvv;
    double r = 0, a = 0, b = 0, e2 = 0, e6 = 0;
    for (std::size_t k = 0; k < nvv; ++k) {
      const double wf = w[k] * fx[k];
      r += wf;
      a += v1[k] * wf;
      b += v2[k] * wf;
      e2 += s2[k] * wf;
      e6 += s6[k] * wf;
    }
    m.rho[x] = r;
    m.j1[x] = a;
    m.j2[x] = b;
    m.m2[x] = e2;
    m.m6[x] = e6;
  }
  const double area = sg->cell_area();
  for (std::size_t x = 0; x < nx; ++x) {
    m.mass += m.rho[x];
    m.momentum.x1 += m.j1[x];
    m.momentum.x2 += m.j2[x];
    m.second += m.m2[x];
    m.sixth += m.m6[x];
  }
  m.mass *= area;
  m.momentum = area * m.momentum;
  m.second *= area;
  m.sixth *= area;
  return m;
}

double boundary_mass(const DistributionFunction& f) {
  const PhaseGrid& g = *f.grid;
  const int nv = g.n_v;
  double sum = 0.0;
  for (std::size_t x = 0; x < g.space->size(); ++x) {
    const double* fx = f.values.data() + x * g.velocity_size();
    for (int j1 = 0; j1 < nv; ++j1)
      for (int j2 = 0; j2 < nv; ++j2)
        if (j1 == 0 || j2 == 0 || j1 == nv - 1 || j2 == nv - 1)
          sum += g.velocity_weight(j1) * g.velocity_weight(j2) * fx[j1 * nv + j2];
  }
  return sum * g.space->cell_area();
}

// ---------------------------------------------------------------------------

double lipschitz_dependence_probe(const VelocitySampler& u1, const VelocitySampler& u2,
                                  std::span<const CharacteristicState> samples, double t,
                                  const SpectralGrid& sup_grid, const LipschitzProbeOptions& opt) {
  require(t > 0.0, "probe time must be positive");
  require(opt.time_intervals >= 1, "probe needs at least one time interval");
  const double L = sup_grid.length();
  const int n = sup_grid.n();

  double denom = 0.0;
  for (int k = 0; k <= opt.time_intervals; ++k) {
    const double s = t * k / opt.time_intervals;
    double sup = 0.0;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        const Vec2 x{sup_grid.coordinate(i), sup_grid.coordinate(j)};
        const Vec2 d = u1.sample(s, x) - u2.sample(s, x);
        sup = std::max(sup, std::hypot(d.x1, d.x2));
      }
    const double w = (k == 0 || k == opt.time_intervals) ? 0.5 : 1.0;
    denom += w * sup * t / opt.time_intervals;
  }
  if (denom == 0.0) return 0.0;

  double worst = 0.0;
  for (const auto& s : samples) {
    const auto a = integrate_characteristic(u1, s, 0.0, t, L, opt.max_substep);
    const auto b = integrate_characteristic(u2, s, 0.0, t, L, opt.max_substep);
    const Vec2 dv = a.v - b.v;
    worst = std::max(worst, std::max(torus_distance(a.x, b.x, L), std::hypot(dv.x1, dv.x2)));
  }
  return worst / denom;
}

}  // namespace nsv
