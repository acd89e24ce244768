#pragma once

// Run configuration. Text form is a line-oriented key-value document:
//
//   # comment
//   [grid]
//   n_x = 32
//   time.t_end = 1.0        # dotted keys work inside or outside sections
//
// Every key has a documented default except grid.n_x and time.t_end.
// Unknown keys, malformed lines and out-of-range values are rejected with
// the offending key path in the message. See docs/config.md.

#include <cstdint>
#include <string>

#include "nsv/coupling.hpp"

namespace nsv {

struct GridConfig {
  int n_x = 0;
  double length = 6.283185307179586;  // 2 pi

  bool operator==(const GridConfig&) const = default;
};

struct KineticConfig {
  int n_v = 32;
  double v_max = 6.0;
  double char_substep = 0.05;
  bool restore_mass = true;

  bool operator==(const KineticConfig&) const = default;
};

struct TimeConfig {
  double t_end = 0.0;
  double window = 0.01;
  double mass_tol = 1e-4;  ///< flagged in the conservation report

  bool operator==(const TimeConfig&) const = default;
};

struct PicardSettings {
  double tol = 1e-10;
  int max_iter = 20;
  int quadrature_nodes = 5;
  SweepMode sweep = SweepMode::jacobi;
  int max_halvings = 5;

  bool operator==(const PicardSettings&) const = default;
};

/// Named generators: taylor_green_fluid, zero_fluid, maxwellian_bump,
/// zero_kinetic, composite (fluid + kinetic generator).
struct InitialDataConfig {
  std::string generator = "composite";
  std::string fluid = "taylor_green_fluid";
  std::string kinetic = "maxwellian_bump";
  double fluid_amplitude = 1.0;
  double fluid_noise = 0.0;  ///< amplitude of a seeded random low-mode perturbation
  double bump_mass = 1.0;    ///< analytic mass of the untruncated bump
  double sigma_x = 0.5;
  double sigma_v = 1.0;
  double center_x1 = -1.0;   ///< negative means L / 2
  double center_x2 = -1.0;
  double drift_v1 = 1.0;
  double drift_v2 = 0.0;
  /// Distance used by the x-profile: "periodic" takes the smooth chord
  /// distance r^2 = 2 (2 - cos k d1 - cos k d2) / k^2 with k = 2 pi / L,
  /// "minimal_image" the Euclidean distance to the nearest copy of the centre.
  std::string x_profile = "periodic";
  /// Exponents of the super-Gaussian profile exp(-(r^2 / 2 sigma^2)^p);
  /// p = 1 is the Gaussian (Maxwellian) case.
  double x_exponent = 1.0;
  double v_exponent = 1.0;

  bool operator==(const InitialDataConfig&) const = default;
};

struct OutputConfig {
  std::string directory = "nsv_out";
  int cadence = 1;         ///< CSV row every `cadence` accepted windows
  bool snapshot = true;    ///< write final.nsv at the end of a run
  int snapshot_every = 0;  ///< additional snapshot every k windows (0 = off)

  bool operator==(const OutputConfig&) const = default;
};

struct RunConfig {
  GridConfig grid;
  KineticConfig kinetic;
  TimeConfig time;
  PicardSettings picard;
  InitialDataConfig initial_data;
  OutputConfig output;
  std::uint64_t seed = 0;

  PicardConfig picard_config() const;
  bool operator==(const RunConfig&) const = default;
};

RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::string& path);
/// Canonical text: every key, fixed order, shortest round-tripping numbers.
std::string render_config(const RunConfig& cfg);
/// Applies one `key = value` override (dotted key path) and revalidates.
void set_config_value(RunConfig& cfg, const std::string& key, const std::string& value);
void validate(const RunConfig& cfg);

}  // namespace nsv
