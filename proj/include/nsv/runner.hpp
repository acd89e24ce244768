#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "nsv/config.hpp"
#include "nsv/snapshot.hpp"

namespace nsv {

/// Column order of diagnostics.csv.
inline constexpr const char* kDiagnosticsHeader =
    "t,fluid_energy,particle_functional,visc_dissipation,drag_dissipation,energy_residual,mass,mass_drift,"
    "linf_f,linf_bound,m6,picard_iters,contraction_last";

struct RunResult {
  SimState state;
  std::uint64_t windows = 0;
  int max_iterations = 0;
  std::string output_dir;
};

/// Runs `cfg` from its initial data to time.t_end. Writes diagnostics.csv,
/// optional periodic snapshots and final.nsv into `cfg.output.directory`.
/// On non-convergence the last accepted state is flushed to last_good.nsv
/// together with the CSV, then the Error is rethrown.
RunResult run(const RunConfig& cfg);

/// Continues a snapshot up to `until`. Output goes to `output_dir`, or to the
/// directory recorded in the snapshot's config when empty. Rows of an
/// existing diagnostics.csv past the snapshot time are dropped.
RunResult resume(const std::string& snapshot_path, double until, const std::string& output_dir = {});

/// Largest window for which one Picard solve from `state` still converges
/// within cfg.max_iter, bracketed by bisection. `lo` must converge.
struct ThresholdSearch {
  bool found = false;  ///< false when even `cap` converged
  double lo = 0.0;     ///< converges
  double hi = 0.0;     ///< fails (or cap when !found)
  int solves = 0;
};
ThresholdSearch find_window_threshold(const SimState& state, const PicardConfig& cfg, double lo, double cap,
                                      double rel_tol = 0.02);

/// Summary of the coupled-run checks behind `nsv-sim verify`.
struct VerifyReport {
  double t_end = 0.0;
  double window = 0.0;
  std::uint64_t windows = 0;
  int max_iterations = 0;
  double worst_contraction = 0.0;       ///< max over windows of the last three factors
  double energy_residual_rel = 0.0;     ///< max |identity residual| / dissipated energy
  double energy_increase_rel = 0.0;     ///< max E(t_k+1) - E(t_k), relative to E(0)
  double mass_drift = 0.0;
  double momentum_drift_rel = 0.0;      ///< |P(t) - P(0)| / |P(0)|
  double linf_ratio = 0.0;              ///< max ||f||_inf / (e^{2t} ||f0||_inf)
  double m6_ratio = 0.0;                ///< max M6(t) / M6(0)
  double l2_ratio = 0.0;                ///< max ||f||_2 / (e^t ||f0||_2)
  double vorticity_residual = 0.0;      ///< max over windows of the L2 vorticity residual
  double elapsed_seconds = 0.0;         ///< wall time of the coupled run alone
  ThresholdSearch threshold;

  /// Named pass/fail checks with their pinned tolerances.
  std::vector<std::pair<std::string, bool>> checks() const;
  bool passed() const;
  std::string to_json() const;
};

/// Runs the configured scenario, evaluates the invariants above, bisects
/// for the convergence threshold and writes verify_report.json. Without
/// `search_threshold` the bisection is skipped and `threshold` stays empty.
VerifyReport verify(const RunConfig& cfg, bool search_threshold = true);

}  // namespace nsv
