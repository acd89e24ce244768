#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>

#include "nsv/coupling.hpp"
#include "nsv/diagnostics.hpp"
#include "nsv/error.hpp"
#include "support.hpp"

using namespace nsv;
using nsv::test::kTwoPi;

namespace {

DistributionFunction maxwellian(const PhaseGridPtr& g, Vec2 vbar, double sigma, double amp) {
  DistributionFunction f = DistributionFunction::zeros(g);
  const auto& s = *g->space;
  for (int i1 = 0; i1 < s.n(); ++i1)
    for (int i2 = 0; i2 < s.n(); ++i2) {
      const double rho = amp * (1.0 + 0.5 * std::cos(s.coordinate(i1)) * std::sin(s.coordinate(i2)));
      for (int j1 = 0; j1 < g->n_v; ++j1)
        for (int j2 = 0; j2 < g->n_v; ++j2) {
          const double w1 = g->velocity(j1) - vbar.x1, w2 = g->velocity(j2) - vbar.x2;
          f.values[g->index(i1, i2, j1, j2)] =
              rho * std::exp(-(w1 * w1 + w2 * w2) / (2 * sigma * sigma)) / (kTwoPi * sigma * sigma);
        }
    }
  return f;
}

SimState tg_only(int n, double t = 0.0) {
  const auto g = SpectralGrid::create(n, kTwoPi);
  return SimState::make(taylor_green(t, g), DistributionFunction::zeros(PhaseGrid::create(g, 4, 1.0)), t);
}

SimState coupled(int n, int nv) {
  const auto g = SpectralGrid::create(n, kTwoPi);
  return SimState::make(taylor_green(0.0, g), maxwellian(PhaseGrid::create(g, nv, 5.0), {0.3, -0.2}, 1.0, 0.5), 0.0);
}

double max_state_diff(const VelocityField& a, const VelocityField& b) { return test::max_diff(a.field(), b.field()); }

}  // namespace

TEST_SUITE("Gauss-Lobatto rule") {
  TEST_CASE("known nodes and polynomial exactness") {
    std::vector<double> x, w;
    gauss_lobatto(5, x, w);
    CHECK(x[0] == -1.0);
    CHECK(x[4] == 1.0);
    CHECK(x[1] == doctest::Approx(-std::sqrt(3.0 / 7.0)).epsilon(1e-14));
    CHECK(x[2] == doctest::Approx(0.0));
    CHECK(w[0] == doctest::Approx(0.1).epsilon(1e-14));
    CHECK(w[2] == doctest::Approx(32.0 / 45.0).epsilon(1e-14));
    for (int q = 2; q <= 9; ++q) {
      gauss_lobatto(q, x, w);
      // Exact up to degree 2q - 3.
      for (int d = 0; d <= 2 * q - 3; ++d) {
        double s = 0.0;
        for (int i = 0; i < q; ++i) s += w[i] * std::pow(x[i], d);
        const double exact = (d % 2) ? 0.0 : 2.0 / (d + 1);
        CHECK(s == doctest::Approx(exact).epsilon(1e-12));
      }
    }
    CHECK_THROWS_AS(gauss_lobatto(1, x, w), Error);
  }
}

TEST_SUITE("Duhamel quadrature") {
  const auto g = SpectralGrid::create(16, kTwoPi);

  TEST_CASE("offsets and weights on [0, span]") {
    const DuhamelQuadrature q(g, 0.3, 4);
    CHECK(q.offsets().front() == 0.0);
    CHECK(q.offsets().back() == doctest::Approx(0.3));
    double s = 0.0;
    for (double w : q.weights()) s += w;
    CHECK(s == doctest::Approx(0.3).epsilon(1e-14));
    CHECK_THROWS_AS(DuhamelQuadrature(g, 0.0, 4), Error);
    CHECK_THROWS_AS(DuhamelQuadrature(g, 0.1, 1), Error);
  }

  TEST_CASE("free part is the heat semigroup") {
    const VelocityField u = leray_project(test::random_field(g, 4, 4));
    const DuhamelQuadrature q(g, 0.2, 5);
    const auto zero = SpectralVector::zeros(g);
    const auto out = q.apply(u.spectral(), std::vector<SpectralVector>(5, zero));
    for (int k = 0; k < 5; ++k) {
      const VelocityField h = heat_propagate(u, q.offsets()[k]);
      CHECK(test::max_diff(to_physical(out[k]), h.field()) < 1e-13);
    }
  }

  TEST_CASE("forcing polynomial in time is integrated exactly, also for stiff modes") {
    // Single Fourier mode with |k|^2 = lam, forcing a + b s + c s^2.
    const double L = kTwoPi;
    const auto g32 = SpectralGrid::create(32, L);
    for (int kk : {1, 10}) {
      const double lam = 2.0 * kk * kk;
      VectorField shape = VectorField::zeros(g32);
      for (int i = 0; i < 32; ++i)
        for (int j = 0; j < 32; ++j) {
          const double x = g32->coordinate(i), y = g32->coordinate(j);
          shape.comp[0][i * 32 + j] = std::sin(kk * x) * std::cos(kk * y);
          shape.comp[1][i * 32 + j] = -std::cos(kk * x) * std::sin(kk * y);
        }
      const SpectralVector base = leray_project(shape).spectral();
      const double span = 0.5, a = 1.0, b = -2.0, c = 3.0;
      const DuhamelQuadrature q(g32, span, 4);
      std::vector<SpectralVector> forcing;
      for (double s : q.offsets()) {
        SpectralVector f = base;
        for (auto& comp : f.comp)
          for (auto& z : comp) z *= a + b * s + c * s * s;
        forcing.push_back(f);
      }
      const auto out = q.apply(SpectralVector::zeros(g32), forcing);
      // int_0^s e^{-lam (s - r)} (a + b r + c r^2) dr
      auto exact = [&](double s) {
        const double e = std::exp(-lam * s);
        const double i0 = (1 - e) / lam;
        const double i1 = s / lam - (1 - e) / (lam * lam);
        const double i2 = s * s / lam - 2 * s / (lam * lam) + 2 * (1 - e) / (lam * lam * lam);
        return a * i0 + b * i1 + c * i2;
      };
      const VectorField shape_p = to_physical(base);
      for (int k = 0; k < 4; ++k) {
        const double want = exact(q.offsets()[k]);
        VectorField ref = shape_p;
        for (auto& comp : ref.comp)
          for (auto& z : comp) z *= want;
        CHECK(test::max_diff(to_physical(out[k]), ref) < 1e-12);
      }
    }
  }
}

TEST_SUITE("forcing") {
  TEST_CASE("drag force closed form and zero density") {
    const auto s = coupled(8, 9);
    const VectorField d = drag_force(s.moments, s.u);
    for (std::size_t p = 0; p < d.comp[0].size(); p += 7) {
      CHECK(d.comp[0][p] == doctest::Approx(-s.moments.rho[p] * s.u.u1()[p] + s.moments.j1[p]));
      CHECK(d.comp[1][p] == doctest::Approx(-s.moments.rho[p] * s.u.u2()[p] + s.moments.j2[p]));
    }
    const auto z = tg_only(8);
    CHECK(max_abs(drag_force(z.moments, z.u)) == 0.0);
  }

  TEST_CASE("without particles the forcing is minus the projected advection") {
    const auto g = SpectralGrid::create(16, kTwoPi);
    const VelocityField u = leray_project(test::random_field(g, 3, 3));
    const VectorField got = to_physical(coupled_forcing(u, nullptr));
    VectorField want = nonlinear_term(u).field();
    for (auto& c : want.comp)
      for (auto& x : c) x = -x;
    CHECK(test::max_diff(got, want) < 1e-12);
    CHECK(max_divergence(coupled_forcing(u, nullptr)) < 1e-12);
  }
}

TEST_SUITE("Picard window") {
  TEST_CASE("config validation") {
    PicardConfig c;
    CHECK_NOTHROW(c.validate());
    c.window = 0.0;
    CHECK_THROWS_AS(c.validate(), Error);
    c = {};
    c.max_iter = 1;
    CHECK_THROWS_AS(c.validate(), Error);
  }

  TEST_CASE("Taylor-Green without particles is reproduced exactly") {
    PicardConfig cfg;
    cfg.window = 0.05;
    const auto [s, rep] = picard_solve(tg_only(16), cfg);
    CHECK(rep.converged);
    CHECK(rep.iterations <= 3);
    CHECK(s.t == doctest::Approx(0.05));
    CHECK(max_state_diff(s.u, taylor_green(0.05, s.u.grid())) < 1e-12);
  }

  TEST_CASE("X-norm of an exact heat path") {
    const auto g = SpectralGrid::create(16, kTwoPi);
    const DuhamelQuadrature q(g, 0.1, 5);
    std::vector<SpectralVector> path;
    for (double s : q.offsets()) path.push_back(taylor_green(s, g).spectral());
    const double pi = std::numbers::pi;
    double lap = 0.0;
    for (int k = 0; k < 5; ++k) lap += q.weights()[k] * 8 * pi * pi * std::exp(-4 * q.offsets()[k]);
    CHECK(path_x_norm(path, q) == doctest::Approx(std::sqrt(6.0) * pi + std::sqrt(lap)).epsilon(1e-12));
  }

  TEST_CASE("coupled window contracts and both sweeps agree") {
    const auto s0 = coupled(8, 9);
    PicardConfig cfg;
    cfg.window = 0.05;
    cfg.tol = 1e-11;
    const auto [sj, rj] = picard_solve(s0, cfg);
    CHECK(rj.converged);
    CHECK(rj.iterations <= 10);
    for (std::size_t i = 1; i < rj.contraction_factors.size(); ++i) CHECK(rj.contraction_factors[i] < 1.0);
    // Past the transient the factors settle geometrically, until round-off sets in.
    const auto& cf = rj.contraction_factors;
    for (std::size_t n = 2; n + 1 < cf.size() && rj.increments[n + 1] > 1e-13; ++n) CHECK(cf[n + 1] <= cf[n] * 1.1);
    CHECK(rj.y_norm > 0.0);
    cfg.sweep = SweepMode::gauss_seidel;
    const auto [sg, rg] = picard_solve(s0, cfg);
    CHECK(rg.converged);
    CHECK(max_state_diff(sj.u, sg.u) < 1e-9);
    CHECK(max_divergence(sj.u.spectral()) < 1e-12);
  }

  TEST_CASE("non-finite or stalled iterations report failure") {
    PicardConfig cfg;
    cfg.window = 0.05;
    cfg.tol = 1e-300;
    cfg.max_iter = 2;
    const auto [s, rep] = picard_solve(coupled(8, 9), cfg);
    CHECK_FALSE(rep.converged);
    CHECK(rep.iterations == 2);
  }
}

TEST_SUITE("advance") {
  TEST_CASE("chains windows up to t_end with a shorter final window") {
    PicardConfig cfg;
    cfg.window = 0.04;
    std::vector<double> times;
    const SimState s = advance(tg_only(16), 0.1, cfg, [&](const SimState& st, const StepReport&) { times.push_back(st.t); });
    REQUIRE(times.size() == 3);
    CHECK(times[0] == doctest::Approx(0.04));
    CHECK(times[2] == doctest::Approx(0.1));
    CHECK(s.t == doctest::Approx(0.1));
    CHECK(max_state_diff(s.u, taylor_green(0.1, s.u.grid())) < 1e-11);
  }

  TEST_CASE("failed windows are halved, then reported") {
    PicardConfig cfg;
    cfg.window = 0.4;
    cfg.tol = 1e-8;
    cfg.max_iter = 4;
    std::vector<double> spans;
    const auto s0 = coupled(8, 9);
    const SimState s = advance(s0, 0.4, cfg, [&](const SimState&, const StepReport& r) { spans.push_back(r.span); }, 6);
    CHECK(s.t == doctest::Approx(0.4));
    REQUIRE_FALSE(spans.empty());
    CHECK(*std::min_element(spans.begin(), spans.end()) < 0.4);

    cfg.tol = 1e-300;
    cfg.window = 0.05;
    int seen = 0;
    try {
      advance(s0, 0.1, cfg, [&](const SimState&, const StepReport&) { ++seen; }, 1);
      FAIL("expected non-convergence");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::not_converged);
    }
    CHECK(seen == 0);
  }

  TEST_CASE("zero data stays zero; f = 0 gives decaying fluid energy") {
    const auto g = SpectralGrid::create(8, kTwoPi);
    const auto pg = PhaseGrid::create(g, 4, 1.0);
    const SimState z = advance(SimState::make(VelocityField::zeros(g), DistributionFunction::zeros(pg), 0.0), 0.1, {});
    CHECK(max_abs(z.u.field()) == 0.0);
    CHECK(z.f.is_zero());
    const auto r = leray_project(test::random_field(g, 6, 2, false));
    double e = fluid_energy(r);
    SimState s = SimState::make(r, DistributionFunction::zeros(pg), 0.0);
    for (int k = 0; k < 4; ++k) {
      s = advance(s, s.t + 0.05, {});
      const double en = fluid_energy(s.u);
      CHECK(en < e);
      e = en;
    }
  }

  TEST_CASE("total momentum is conserved and the kinetic bounds hold") {
    const auto s0 = coupled(8, 17);
    PicardConfig cfg;
    cfg.window = 0.05;
    const SimState s = advance(s0, 0.2, cfg);
    const auto ref = ConservationReference::of(s0);
    const auto rep = conservation_report(s, ref);
    CHECK(rep.mass_drift < 1e-3);  // coarse 8^2 x 17^2 grid
    CHECK(rep.momentum_drift < 1e-2 * std::hypot(ref.momentum.x1, ref.momentum.x2));
    CHECK(rep.linf_f <= rep.linf_bound * (1 + 1e-9));
    CHECK(!rep.bound_violated);
  }
}
