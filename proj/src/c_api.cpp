#include "nsv/nsv.h"

#include <spdlog/spdlog.h>

#include <cstring>
#include <exception>
#include <memory>
#include <new>
#include <string>

#include "nsv/config.hpp"
#include "nsv/error.hpp"
#include "nsv/initial_data.hpp"
#include "nsv/runner.hpp"
#include "nsv/snapshot.hpp"

struct nsv_config {
  nsv::RunConfig cfg;
};

struct nsv_sim {
  nsv::RunConfig cfg;
  nsv::SimState state;
  nsv::RunLedger ledger;
  int last_iters = 0;
  double last_contraction = 0.0;
};

namespace {

thread_local std::string g_last_error;

nsv_status status_of(nsv::ErrorCode c) { return static_cast<nsv_status>(static_cast<int>(c)); }

template <class F>
nsv_status guarded(F&& body) {
  try {
    g_last_error.clear();
    body();
    return NSV_OK;
  } catch (const nsv::Error& e) {
    g_last_error = e.what();
    return status_of(e.code());
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
    return NSV_ERR_INTERNAL;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return NSV_ERR_INTERNAL;
  } catch (...) {
    g_last_error = "unknown error";
    return NSV_ERR_INTERNAL;
  }
}

void need(const void* p, const char* name) {
  if (!p) nsv::fail(nsv::ErrorCode::invalid_argument, std::string(name) + " must not be null");
}

char* dup_string(const std::string& s) {
  char* out = new char[s.size() + 1];
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

nsv::RunConfig with_dir(const nsv::RunConfig& cfg, const char* dir) {
  nsv::RunConfig c = cfg;
  if (dir && *dir) c.output.directory = dir;
  return c;
}

}  // namespace

extern "C" {

NSV_API const char* nsv_last_error(void) { return g_last_error.c_str(); }

NSV_API const char* nsv_version(void) { return "1.0.0"; }

NSV_API void nsv_string_free(char* s) { delete[] s; }

NSV_API nsv_status nsv_set_log_level(nsv_log_level level) {
  return guarded([&] {
    if (level < NSV_LOG_TRACE || level > NSV_LOG_OFF || level == 5)
      nsv::fail(nsv::ErrorCode::invalid_argument, "unknown log level");
    spdlog::set_level(static_cast<spdlog::level::level_enum>(level));
  });
}

NSV_API nsv_status nsv_config_parse(const char* text, nsv_config** out) {
  return guarded([&] {
    need(text, "text");
    need(out, "out");
    *out = new nsv_config{nsv::parse_config(text)};
  });
}

NSV_API nsv_status nsv_config_load(const char* path, nsv_config** out) {
  return guarded([&] {
    need(path, "path");
    need(out, "out");
    *out = new nsv_config{nsv::load_config(path)};
  });
}

NSV_API nsv_status nsv_config_set(nsv_config* cfg, const char* key, const char* value) {
  return guarded([&] {
    need(cfg, "cfg");
    need(key, "key");
    need(value, "value");
    nsv::set_config_value(cfg->cfg, key, value);
  });
}

NSV_API nsv_status nsv_config_render(const nsv_config* cfg, char** out) {
  return guarded([&] {
    need(cfg, "cfg");
    need(out, "out");
    *out = dup_string(nsv::render_config(cfg->cfg));
  });
}

NSV_API void nsv_config_free(nsv_config* cfg) { delete cfg; }

NSV_API nsv_status nsv_sim_create(const nsv_config* cfg, nsv_sim** out) {
  return guarded([&] {
    need(cfg, "cfg");
    need(out, "out");
    auto sim = std::make_unique<nsv_sim>();
    sim->cfg = cfg->cfg;
    sim->state = nsv::make_initial_data(cfg->cfg);
    sim->ledger.reference = nsv::ConservationReference::of(sim->state);
    sim->ledger.energy.record(sim->state);
    *out = sim.release();
  });
}

NSV_API nsv_status nsv_sim_load_snapshot(const char* path, nsv_sim** out) {
  return guarded([&] {
    need(path, "path");
    need(out, "out");
    nsv::Snapshot snap = nsv::read_snapshot(path);
    auto sim = std::make_unique<nsv_sim>();
    if (!snap.config_text.empty()) sim->cfg = nsv::parse_config(snap.config_text);
    sim->state = std::move(snap.state);
    sim->ledger = snap.ledger;
    *out = sim.release();
  });
}

NSV_API nsv_status nsv_sim_advance(nsv_sim* sim, double t_end) {
  return guarded([&] {
    need(sim, "sim");
    auto observer = [sim](const nsv::SimState& s, const nsv::StepReport& r) {
      sim->state = s;
      ++sim->ledger.windows;
      sim->ledger.energy.record(s);
      sim->last_iters = r.iterations;
      sim->last_contraction = r.contraction_factors.empty() ? 0.0 : r.contraction_factors.back();
    };
    nsv::advance(sim->state, t_end, sim->cfg.picard_config(), observer, sim->cfg.picard.max_halvings);
  });
}

NSV_API nsv_status nsv_sim_save_snapshot(const nsv_sim* sim, const char* path) {
  return guarded([&] {
    need(sim, "sim");
    need(path, "path");
    nsv::write_snapshot(path, nsv::Snapshot{sim->state, nsv::render_config(sim->cfg), sim->ledger});
  });
}

NSV_API nsv_status nsv_sim_time(const nsv_sim* sim, double* t) {
  return guarded([&] {
    need(sim, "sim");
    need(t, "t");
    *t = sim->state.t;
  });
}

NSV_API nsv_status nsv_sim_diagnostics(const nsv_sim* sim, nsv_diagnostics* out) {
  return guarded([&] {
    need(sim, "sim");
    need(out, "out");
    const auto& s = sim->state;
    const auto& e = sim->ledger.energy;
    const auto c = nsv::conservation_report(s, sim->ledger.reference, sim->cfg.time.mass_tol);
    out->t = s.t;
    out->fluid_energy = nsv::fluid_energy(s.u);
    out->particle_functional = nsv::particle_functional(s.moments);
    out->visc_dissipation = e.visc;
    out->drag_dissipation = e.drag;
    out->energy_residual = out->fluid_energy + out->particle_functional - e.e0 + e.visc + e.drag;
    out->mass = c.mass;
    out->mass_drift = c.mass_drift;
    out->linf_f = c.linf_f;
    out->linf_bound = c.linf_bound;
    out->m6 = c.m6;
    out->momentum[0] = c.momentum_total.x1;
    out->momentum[1] = c.momentum_total.x2;
    out->picard_iters = sim->last_iters;
    out->contraction_last = sim->last_contraction;
  });
}

NSV_API nsv_status nsv_sim_velocity(const nsv_sim* sim, double* u1, double* u2, size_t count) {
  return guarded([&] {
    need(sim, "sim");
    const auto& a = sim->state.u.u1();
    const auto& b = sim->state.u.u2();
    if (count != a.size())
      nsv::fail(nsv::ErrorCode::invalid_argument, "count must be n_x * n_x = " + std::to_string(a.size()));
    if (u1) std::memcpy(u1, a.data(), count * sizeof(double));
    if (u2) std::memcpy(u2, b.data(), count * sizeof(double));
  });
}

NSV_API void nsv_sim_free(nsv_sim* sim) { delete sim; }

NSV_API nsv_status nsv_run(const nsv_config* cfg, const char* output_dir) {
  return guarded([&] {
    need(cfg, "cfg");
    nsv::run(with_dir(cfg->cfg, output_dir));
  });
}

NSV_API nsv_status nsv_resume(const char* snapshot_path, double until, const char* output_dir) {
  return guarded([&] {
    need(snapshot_path, "snapshot_path");
    nsv::resume(snapshot_path, until, output_dir ? output_dir : "");
  });
}

NSV_API nsv_status nsv_verify(const nsv_config* cfg, const char* output_dir, int* passed) {
  return guarded([&] {
    need(cfg, "cfg");
    const nsv::VerifyReport rep = nsv::verify(with_dir(cfg->cfg, output_dir));
    for (const auto& [name, ok] : rep.checks()) spdlog::info("verify check {:<28} {}", name, ok ? "ok" : "FAILED");
    if (passed) *passed = rep.passed() ? 1 : 0;
  });
}

}  // extern "C"
