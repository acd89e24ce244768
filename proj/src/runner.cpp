#include "nsv/runner.hpp"

#include <spdlog/spdlog.h>

#include <chrono>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <sstream>

#include "nsv/error.hpp"
#include "nsv/initial_data.hpp"

namespace nsv {

namespace fs = std::filesystem;

namespace {

void write_atomic(const fs::path& path, const std::string& text) {
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorCode::io, "cannot open " + tmp.string() + " for writing");
    out << text;
    if (!out) fail(ErrorCode::io, "write failed: " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) fail(ErrorCode::io, "cannot move " + tmp.string() + " to " + path.string() + ": " + ec.message());
}

void append_real(std::string& row, double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  if (!row.empty()) row += ',';
  row += buf;
}

struct Session {
  RunConfig cfg;
  fs::path dir;
  std::string csv;
  RunLedger ledger;
  SimState state;
  double last_row_t = -1.0;
  int max_iterations = 0;

  void add_row(const EnergyLedger& e, int iters, double contraction) {
    const ConservationReport c = conservation_report(state, ledger.reference, cfg.time.mass_tol);
    std::string row;
    for (double v : {state.t, e.fluid_energy, e.particle_functional, e.visc_dissipation, e.drag_dissipation,
                     e.identity_residual, c.mass, c.mass_drift, c.linf_f, c.linf_bound, c.m6})
      append_real(row, v);
    row += ',' + std::to_string(iters);
    append_real(row, contraction);
    csv += row;
    csv += '\n';
    last_row_t = state.t;
    if (c.bound_violated)
      spdlog::warn("t={:.6g}: max f = {:.6g} exceeds e^(2t) max f0 = {:.6g}", state.t, c.linf_f, c.linf_bound);
    if (c.mass_violated) spdlog::warn("t={:.6g}: relative mass drift {:.3e} above {:.1e}", state.t, c.mass_drift,
                                      cfg.time.mass_tol);
    if (!state.f.is_zero()) {
      const double edge = boundary_mass(state.f);
      if (edge > 1e-8 * std::max(state.moments.mass, 1e-300))
        spdlog::warn("t={:.6g}: mass on the velocity boundary {:.3e} (v_max may be too small)", state.t, edge);
    }
  }

  void flush_csv() const { write_atomic(dir / "diagnostics.csv", csv); }

  void save(const std::string& name) const {
    write_snapshot((dir / name).string(), Snapshot{state, render_config(cfg), ledger});
    spdlog::info("snapshot {} at t={:.6g}", (dir / name).string(), state.t);
  }

  void execute(double until) {
    const PicardConfig pc = cfg.picard_config();
    const int cadence = cfg.output.cadence;
    const int every = cfg.output.snapshot_every;
    auto observer = [&](const SimState& s, const StepReport& r) {
      state = s;
      ++ledger.windows;
      max_iterations = std::max(max_iterations, r.iterations);
      const EnergyLedger e = ledger.energy.record(state);
      spdlog::debug("t={:.6g} window={:.3g} iterations={} increment={:.3e}", s.t, r.span, r.iterations,
                    r.increments.empty() ? 0.0 : r.increments.back());
      if (ledger.windows % static_cast<std::uint64_t>(cadence) == 0)
        add_row(e, r.iterations, r.contraction_factors.empty() ? 0.0 : r.contraction_factors.back());
      if (every > 0 && ledger.windows % static_cast<std::uint64_t>(every) == 0) {
        char name[40];
        std::snprintf(name, sizeof name, "snapshot_%06" PRIu64 ".nsv", ledger.windows);
        save(name);
        flush_csv();
      }
    };
    try {
      advance(state, until, pc, observer, cfg.picard.max_halvings);
    } catch (const Error& e) {
      if (e.code() == ErrorCode::not_converged) {
        spdlog::error("{}; writing last accepted state (t={:.6g})", e.what(), state.t);
        save("last_good.nsv");
        flush_csv();
      }
      throw;
    }
    if (last_row_t != state.t) {
      // Off-cadence final row; the tracker already holds this state.
      EnergyLedger e;
      e.fluid_energy = fluid_energy(state.u);
      e.particle_functional = particle_functional(state.moments);
      e.visc_dissipation = ledger.energy.visc;
      e.drag_dissipation = ledger.energy.drag;
      e.identity_residual = e.fluid_energy + e.particle_functional - ledger.energy.e0 + e.visc_dissipation +
                            e.drag_dissipation;
      add_row(e, 0, 0.0);
    }
    flush_csv();
    if (cfg.output.snapshot) save("final.nsv");
  }
};

fs::path prepare_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) fail(ErrorCode::io, "cannot create output directory " + dir + ": " + ec.message());
  return fs::path(dir);
}

std::string keep_rows_until(const std::string& csv, double t) {
  std::istringstream in(csv);
  std::string line, out;
  bool header = true;
  while (std::getline(in, line)) {
    if (header) {
      if (line != kDiagnosticsHeader) fail(ErrorCode::format, "diagnostics.csv has an unexpected header");
      header = false;
      out += line + '\n';
      continue;
    }
    if (line.empty()) continue;
    const double row_t = std::strtod(line.c_str(), nullptr);
    if (row_t <= t) out += line + '\n';
  }
  if (header) out = std::string(kDiagnosticsHeader) + '\n';
  return out;
}

}  // namespace

RunResult run(const RunConfig& cfg) {
  validate(cfg);
  Session s;
  s.cfg = cfg;
  s.dir = prepare_dir(cfg.output.directory);
  s.state = make_initial_data(cfg);
  s.ledger.reference = ConservationReference::of(s.state);
  s.csv = std::string(kDiagnosticsHeader) + '\n';
  s.add_row(s.ledger.energy.record(s.state), 0, 0.0);
  spdlog::info("run: n_x={} n_v={} window={} t_end={} -> {}", cfg.grid.n_x, cfg.kinetic.n_v, cfg.time.window,
               cfg.time.t_end, s.dir.string());
  s.execute(cfg.time.t_end);
  return {s.state, s.ledger.windows, s.max_iterations, s.dir.string()};
}

RunResult resume(const std::string& snapshot_path, double until, const std::string& output_dir) {
  Snapshot snap = read_snapshot(snapshot_path);
  if (snap.config_text.empty()) fail(ErrorCode::format, snapshot_path + ": snapshot carries no run configuration");
  Session s;
  s.cfg = parse_config(snap.config_text);
  if (!output_dir.empty()) s.cfg.output.directory = output_dir;
  if (!(until >= snap.state.t))
    fail(ErrorCode::invalid_argument, "--until " + std::to_string(until) + " precedes the snapshot time " +
                                          std::to_string(snap.state.t));
  s.cfg.time.t_end = until;
  s.dir = prepare_dir(s.cfg.output.directory);
  s.state = std::move(snap.state);
  s.ledger = snap.ledger;
  s.last_row_t = s.state.t;

  std::string existing;
  if (std::ifstream in(s.dir / "diagnostics.csv", std::ios::binary); in) {
    std::ostringstream ss;
    ss << in.rdbuf();
    existing = ss.str();
  }
  s.csv = keep_rows_until(existing, s.state.t);
  spdlog::info("resume: t={:.6g} -> {:.6g}, window count {}", s.state.t, until, s.ledger.windows);
  s.execute(until);
  return {s.state, s.ledger.windows, s.max_iterations, s.dir.string()};
}

ThresholdSearch find_window_threshold(const SimState& state, const PicardConfig& cfg, double lo, double cap,
                                      double rel_tol) {
  require(lo > 0.0 && cap > lo, "threshold search needs 0 < lo < cap");
  ThresholdSearch out;
  auto converges = [&](double span) {
    ++out.solves;
    const bool ok = picard_solve(state, cfg, span).second.converged;
    spdlog::debug("threshold search: window {:.6g} {}", span, ok ? "converged" : "failed");
    return ok;
  };
  require(converges(lo), "threshold search: the lower window does not converge");
  double hi = lo;
  for (;;) {
    hi = std::min(2.0 * lo, cap);
    if (!converges(hi)) break;
    lo = hi;
    if (hi >= cap) {
      out.lo = out.hi = cap;
      return out;
    }
  }
  while (hi - lo > rel_tol * lo) {
    const double mid = 0.5 * (lo + hi);
    (converges(mid) ? lo : hi) = mid;
  }
  out.found = true;
  out.lo = lo;
  out.hi = hi;
  return out;
}

std::vector<std::pair<std::string, bool>> VerifyReport::checks() const {
  return {
      {"picard_iterations<=10", max_iterations <= 10},
      {"last_three_contraction<1", worst_contraction < 1.0},
      {"energy_residual<1e-2", energy_residual_rel < 1e-2},
      {"energy_monotone_1e-3", energy_increase_rel <= 1e-3},
      {"mass_drift<1e-4", mass_drift < 1e-4},
      {"momentum_drift<1e-4", momentum_drift_rel < 1e-4},
      {"max_principle", linf_ratio <= 1.0 + 1e-6},
      {"m6<10x", m6_ratio < 10.0},
      {"l2_bound", l2_ratio <= 1.0 + 1e-3},
      {"epsilon0_found", threshold.found},
  };
}

bool VerifyReport::passed() const {
  for (const auto& c : checks())
    if (!c.second) return false;
  return true;
}

std::string VerifyReport::to_json() const {
  nlohmann::json j;
  for (const auto& [name, ok] : checks()) j["checks"][name] = ok;
  j["passed"] = passed();
  j["t_end"] = t_end;
  j["window"] = window;
  j["windows"] = windows;
  j["max_iterations"] = max_iterations;
  j["worst_last_three_contraction"] = worst_contraction;
  j["energy_residual_relative"] = energy_residual_rel;
  j["energy_increase_relative"] = energy_increase_rel;
  j["mass_drift"] = mass_drift;
  j["momentum_drift_relative"] = momentum_drift_rel;
  j["linf_over_bound"] = linf_ratio;
  j["m6_over_initial"] = m6_ratio;
  j["l2_over_bound"] = l2_ratio;
  j["vorticity_residual"] = vorticity_residual;
  j["elapsed_seconds"] = elapsed_seconds;
  j["epsilon0"] = {{"found", threshold.found},
                   {"converges_at", threshold.lo},
                   {"fails_at", threshold.found ? nlohmann::json(threshold.hi) : nlohmann::json(nullptr)},
                   {"picard_solves", threshold.solves}};
  return j.dump(2) + '\n';
}

VerifyReport verify(const RunConfig& cfg, bool search_threshold) {
  validate(cfg);
  const fs::path dir = prepare_dir(cfg.output.directory);
  const SimState s0 = make_initial_data(cfg);
  const PicardConfig pc = cfg.picard_config();
  const ConservationReference ref = ConservationReference::of(s0);
  const double p0 = std::hypot(ref.momentum.x1, ref.momentum.x2);

  VerifyReport rep;
  rep.t_end = cfg.time.t_end;
  rep.window = cfg.time.window;
  EnergyTracker tracker;
  tracker.record(s0);
  double e_prev = total_energy(s0), residual = 0.0;
  SimState prev = s0;
  auto observer = [&](const SimState& s, const StepReport& r) {
    ++rep.windows;
    rep.max_iterations = std::max(rep.max_iterations, r.iterations);
    const auto& cf = r.contraction_factors;
    for (std::size_t i = cf.size() >= 3 ? cf.size() - 3 : 0; i < cf.size(); ++i)
      rep.worst_contraction = std::max(rep.worst_contraction, cf[i]);
    const EnergyLedger e = tracker.record(s);
    residual = std::max(residual, std::abs(e.identity_residual));
    const double e_now = e.fluid_energy + e.particle_functional;
    rep.energy_increase_rel = std::max(rep.energy_increase_rel, (e_now - e_prev) / tracker.e0);
    e_prev = e_now;
    const ConservationReport c = conservation_report(s, ref, cfg.time.mass_tol);
    rep.mass_drift = std::max(rep.mass_drift, c.mass_drift);
    rep.momentum_drift_rel = std::max(rep.momentum_drift_rel, p0 > 0.0 ? c.momentum_drift / p0 : c.momentum_drift);
    if (c.linf_bound > 0.0) rep.linf_ratio = std::max(rep.linf_ratio, c.linf_f / c.linf_bound);
    if (ref.m6 > 0.0) rep.m6_ratio = std::max(rep.m6_ratio, c.m6 / ref.m6);
    if (c.l2_bound > 0.0) rep.l2_ratio = std::max(rep.l2_ratio, c.l2_f / c.l2_bound);
    rep.vorticity_residual = std::max(rep.vorticity_residual, vorticity_residual(prev, s));
    prev = s;
    spdlog::info("verify: t={:.4f} iterations={} mass_drift={:.3e}", s.t, r.iterations, c.mass_drift);
  };
  const auto start = std::chrono::steady_clock::now();
  advance(s0, cfg.time.t_end, pc, observer, cfg.picard.max_halvings);
  rep.elapsed_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  const double dissipated = tracker.visc + tracker.drag;
  rep.energy_residual_rel = dissipated > 0.0 ? residual / dissipated : residual;

  if (search_threshold) {
    spdlog::info("verify: bisecting the window for Picard convergence");
    rep.threshold = find_window_threshold(s0, pc, cfg.time.window, 4.0, 0.1);
  }
  write_atomic(dir / "verify_report.json", rep.to_json());
  return rep;
}

}  // namespace nsv
