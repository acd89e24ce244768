#include "nsv/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>
#include <vector>

#include "nsv/error.hpp"

namespace nsv {

namespace {

[[noreturn]] void config_error(const std::string& key, const std::string& what) {
  fail(ErrorCode::config, key.empty() ? what : key + ": " + what);
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double to_double(const std::string& key, const std::string& v) {
  double out = 0.0;
  const auto r = std::from_chars(v.data(), v.data() + v.size(), out);
  if (r.ec != std::errc() || r.ptr != v.data() + v.size() || v.empty()) config_error(key, "expected a number, got '" + v + "'");
  return out;
}

long long to_integer(const std::string& key, const std::string& v) {
  long long out = 0;
  const auto r = std::from_chars(v.data(), v.data() + v.size(), out);
  if (r.ec != std::errc() || r.ptr != v.data() + v.size() || v.empty())
    config_error(key, "expected an integer, got '" + v + "'");
  return out;
}

int to_int(const std::string& key, const std::string& v) {
  const long long x = to_integer(key, v);
  if (x < -2147483647LL || x > 2147483647LL) config_error(key, "integer out of range");
  return static_cast<int>(x);
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true") return true;
  if (v == "false") return false;
  config_error(key, "expected true or false, got '" + v + "'");
}

std::string fmt_double(double x) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, x);
  std::string s(buf, r.ptr);
  // Keep numbers recognisable as reals.
  if (s.find_first_of(".eEn") == std::string::npos) s += ".0";
  return s;
}

struct Entry {
  const char* path;
  std::function<void(RunConfig&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
};

template <class M>
Entry real(const char* path, M member) {
  return {path, [=](RunConfig& c, const std::string& v) { member(c) = to_double(path, v); },
          [=](const RunConfig& c) { return fmt_double(member(const_cast<RunConfig&>(c))); }};
}

template <class M>
Entry integer(const char* path, M member) {
  return {path, [=](RunConfig& c, const std::string& v) { member(c) = to_int(path, v); },
          [=](const RunConfig& c) { return std::to_string(member(const_cast<RunConfig&>(c))); }};
}

template <class M>
Entry boolean(const char* path, M member) {
  return {path, [=](RunConfig& c, const std::string& v) { member(c) = to_bool(path, v); },
          [=](const RunConfig& c) { return std::string(member(const_cast<RunConfig&>(c)) ? "true" : "false"); }};
}

template <class M>
Entry text(const char* path, M member) {
  return {path, [=](RunConfig& c, const std::string& v) { member(c) = v; },
          [=](const RunConfig& c) { return member(const_cast<RunConfig&>(c)); }};
}

const std::vector<Entry>& entries() {
  static const std::vector<Entry> table = {
      integer("grid.n_x", [](RunConfig& c) -> int& { return c.grid.n_x; }),
      real("grid.length", [](RunConfig& c) -> double& { return c.grid.length; }),
      integer("kinetic.n_v", [](RunConfig& c) -> int& { return c.kinetic.n_v; }),
      real("kinetic.v_max", [](RunConfig& c) -> double& { return c.kinetic.v_max; }),
      real("kinetic.char_substep", [](RunConfig& c) -> double& { return c.kinetic.char_substep; }),
      boolean("kinetic.restore_mass", [](RunConfig& c) -> bool& { return c.kinetic.restore_mass; }),
      real("time.t_end", [](RunConfig& c) -> double& { return c.time.t_end; }),
      real("time.window", [](RunConfig& c) -> double& { return c.time.window; }),
      real("time.mass_tol", [](RunConfig& c) -> double& { return c.time.mass_tol; }),
      real("picard.tol", [](RunConfig& c) -> double& { return c.picard.tol; }),
      integer("picard.max_iter", [](RunConfig& c) -> int& { return c.picard.max_iter; }),
      integer("picard.quadrature_nodes", [](RunConfig& c) -> int& { return c.picard.quadrature_nodes; }),
      {"picard.sweep",
       [](RunConfig& c, const std::string& v) {
         if (v == "jacobi") c.picard.sweep = SweepMode::jacobi;
         else if (v == "gauss_seidel") c.picard.sweep = SweepMode::gauss_seidel;
         else config_error("picard.sweep", "expected jacobi or gauss_seidel, got '" + v + "'");
       },
       [](const RunConfig& c) { return std::string(c.picard.sweep == SweepMode::jacobi ? "jacobi" : "gauss_seidel"); }},
      integer("picard.max_halvings", [](RunConfig& c) -> int& { return c.picard.max_halvings; }),
      text("initial_data.generator", [](RunConfig& c) -> std::string& { return c.initial_data.generator; }),
      text("initial_data.fluid", [](RunConfig& c) -> std::string& { return c.initial_data.fluid; }),
      text("initial_data.kinetic", [](RunConfig& c) -> std::string& { return c.initial_data.kinetic; }),
      real("initial_data.fluid_amplitude", [](RunConfig& c) -> double& { return c.initial_data.fluid_amplitude; }),
      real("initial_data.fluid_noise", [](RunConfig& c) -> double& { return c.initial_data.fluid_noise; }),
      real("initial_data.bump_mass", [](RunConfig& c) -> double& { return c.initial_data.bump_mass; }),
      real("initial_data.sigma_x", [](RunConfig& c) -> double& { return c.initial_data.sigma_x; }),
      real("initial_data.sigma_v", [](RunConfig& c) -> double& { return c.initial_data.sigma_v; }),
      real("initial_data.center_x1", [](RunConfig& c) -> double& { return c.initial_data.center_x1; }),
      real("initial_data.center_x2", [](RunConfig& c) -> double& { return c.initial_data.center_x2; }),
      real("initial_data.drift_v1", [](RunConfig& c) -> double& { return c.initial_data.drift_v1; }),
      real("initial_data.drift_v2", [](RunConfig& c) -> double& { return c.initial_data.drift_v2; }),
      text("initial_data.x_profile", [](RunConfig& c) -> std::string& { return c.initial_data.x_profile; }),
      real("initial_data.x_exponent", [](RunConfig& c) -> double& { return c.initial_data.x_exponent; }),
      real("initial_data.v_exponent", [](RunConfig& c) -> double& { return c.initial_data.v_exponent; }),
      text("output.directory", [](RunConfig& c) -> std::string& { return c.output.directory; }),
      integer("output.cadence", [](RunConfig& c) -> int& { return c.output.cadence; }),
      boolean("output.snapshot", [](RunConfig& c) -> bool& { return c.output.snapshot; }),
      integer("output.snapshot_every", [](RunConfig& c) -> int& { return c.output.snapshot_every; }),
      {"seed",
       [](RunConfig& c, const std::string& v) {
         std::uint64_t x = 0;
         const auto r = std::from_chars(v.data(), v.data() + v.size(), x);
         if (v.empty() || r.ec != std::errc() || r.ptr != v.data() + v.size())
           config_error("seed", "expected a non-negative 64-bit integer, got '" + v + "'");
         c.seed = x;
       },
       [](const RunConfig& c) { return std::to_string(c.seed); }},
  };
  return table;
}

const Entry* find_entry(const std::string& path) {
  for (const auto& e : entries())
    if (path == e.path) return &e;
  return nullptr;
}

std::string unquote(const std::string& key, const std::string& v) {
  if (v.size() >= 2 && v.front() == '"') {
    if (v.back() != '"') config_error(key, "unterminated string");
    return v.substr(1, v.size() - 2);
  }
  return v;
}

// Strips a trailing comment that is not inside quotes.
std::string strip_comment(const std::string& line) {
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    if (line[i] == '"') quoted = !quoted;
    if (!quoted && line[i] == '#') return line.substr(0, i);
  }
  return line;
}

void check(bool ok, const char* key, const std::string& what) {
  if (!ok) config_error(key, what);
}

bool known_generator(const std::string& g) {
  static const std::set<std::string> names = {"taylor_green_fluid", "zero_fluid", "maxwellian_bump", "zero_kinetic",
                                              "composite"};
  return names.count(g) > 0;
}

}  // namespace

PicardConfig RunConfig::picard_config() const {
  PicardConfig p;
  p.window = time.window;
  p.tol = picard.tol;
  p.max_iter = picard.max_iter;
  p.quadrature_nodes = picard.quadrature_nodes;
  p.sweep = picard.sweep;
  p.kinetic.max_substep = kinetic.char_substep;
  p.kinetic.restore_mass = kinetic.restore_mass;
  return p;
}

void validate(const RunConfig& c) {
  check(c.grid.n_x >= 8 && c.grid.n_x <= 1024 && c.grid.n_x % 2 == 0, "grid.n_x", "must be even and in [8, 1024]");
  check(std::isfinite(c.grid.length) && c.grid.length > 0.0, "grid.length", "must be positive");
  check(c.kinetic.n_v >= 4 && c.kinetic.n_v <= 256, "kinetic.n_v", "must be in [4, 256]");
  check(std::isfinite(c.kinetic.v_max) && c.kinetic.v_max > 0.0, "kinetic.v_max", "must be positive");
  check(std::isfinite(c.kinetic.char_substep) && c.kinetic.char_substep > 0.0, "kinetic.char_substep",
        "must be positive");
  const double nodes = static_cast<double>(c.grid.n_x) * c.grid.n_x * c.kinetic.n_v * c.kinetic.n_v;
  check(nodes <= 6.7e7, "kinetic.n_v", "phase grid exceeds 6.7e7 nodes");
  check(std::isfinite(c.time.t_end) && c.time.t_end >= 0.0, "time.t_end", "must be non-negative");
  check(std::isfinite(c.time.window) && c.time.window > 0.0 && c.time.window <= 1.0, "time.window",
        "must be in (0, 1]");
  check(std::isfinite(c.time.mass_tol) && c.time.mass_tol > 0.0, "time.mass_tol", "must be positive");
  check(std::isfinite(c.picard.tol) && c.picard.tol > 0.0, "picard.tol", "must be positive");
  check(c.picard.max_iter >= 2 && c.picard.max_iter <= 1000, "picard.max_iter", "must be in [2, 1000]");
  check(c.picard.quadrature_nodes >= 2 && c.picard.quadrature_nodes <= 16, "picard.quadrature_nodes",
        "must be in [2, 16]");
  check(c.picard.max_halvings >= 0 && c.picard.max_halvings <= 20, "picard.max_halvings", "must be in [0, 20]");
  const auto& d = c.initial_data;
  check(known_generator(d.generator), "initial_data.generator", "unknown generator '" + d.generator + "'");
  check(d.fluid == "taylor_green_fluid" || d.fluid == "zero_fluid", "initial_data.fluid",
        "must be taylor_green_fluid or zero_fluid");
  check(d.kinetic == "maxwellian_bump" || d.kinetic == "zero_kinetic", "initial_data.kinetic",
        "must be maxwellian_bump or zero_kinetic");
  check(std::isfinite(d.fluid_amplitude), "initial_data.fluid_amplitude", "must be finite");
  check(std::isfinite(d.fluid_noise) && d.fluid_noise >= 0.0, "initial_data.fluid_noise", "must be non-negative");
  check(std::isfinite(d.bump_mass) && d.bump_mass >= 0.0, "initial_data.bump_mass", "must be non-negative");
  check(std::isfinite(d.sigma_x) && d.sigma_x > 0.0, "initial_data.sigma_x", "must be positive");
  check(std::isfinite(d.sigma_v) && d.sigma_v > 0.0, "initial_data.sigma_v", "must be positive");
  check(std::isfinite(d.center_x1), "initial_data.center_x1", "must be finite");
  check(std::isfinite(d.center_x2), "initial_data.center_x2", "must be finite");
  check(std::isfinite(d.drift_v1), "initial_data.drift_v1", "must be finite");
  check(std::isfinite(d.drift_v2), "initial_data.drift_v2", "must be finite");
  check(d.x_profile == "periodic" || d.x_profile == "minimal_image", "initial_data.x_profile",
        "must be periodic or minimal_image");
  check(std::isfinite(d.x_exponent) && d.x_exponent >= 1.0, "initial_data.x_exponent", "must be >= 1");
  check(std::isfinite(d.v_exponent) && d.v_exponent >= 1.0, "initial_data.v_exponent", "must be >= 1");
  check(!c.output.directory.empty() && c.output.directory.find_first_of("\"\n") == std::string::npos,
        "output.directory", "must be non-empty and free of quotes and newlines");
  check(c.output.cadence >= 1, "output.cadence", "must be >= 1");
  check(c.output.snapshot_every >= 0, "output.snapshot_every", "must be >= 0");
}

RunConfig parse_config(const std::string& input) {
  RunConfig cfg;
  std::set<std::string> seen;
  std::istringstream in(input);
  std::string raw, section;
  int lineno = 0;
  while (std::getline(in, raw)) {
    ++lineno;
    const std::string line = trim(strip_comment(raw));
    if (line.empty()) continue;
    const std::string where = "line " + std::to_string(lineno);
    if (line.front() == '[') {
      if (line.back() != ']') config_error("", where + ": malformed section header '" + line + "'");
      section = trim(line.substr(1, line.size() - 2));
      if (section.empty() || section.find_first_of(" \t=") != std::string::npos)
        config_error("", where + ": malformed section header '" + line + "'");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) config_error("", where + ": expected 'key = value', got '" + line + "'");
    const std::string key = trim(line.substr(0, eq));
    if (key.empty() || key.find_first_of(" \t") != std::string::npos)
      config_error("", where + ": malformed key '" + key + "'");
    std::string path = section.empty() ? key : section + "." + key;
    // A full dotted path is also accepted inside a section.
    if (!find_entry(path) && !section.empty() && key.find('.') != std::string::npos && find_entry(key)) path = key;
    const std::string value = unquote(path, trim(line.substr(eq + 1)));
    const Entry* e = find_entry(path);
    if (!e) config_error(path, "unknown key (" + where + ")");
    if (!seen.insert(path).second) config_error(path, "duplicate key (" + where + ")");
    e->set(cfg, value);
  }
  if (!seen.count("grid.n_x")) config_error("grid.n_x", "required key missing");
  if (!seen.count("time.t_end")) config_error("time.t_end", "required key missing");
  validate(cfg);
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) fail(ErrorCode::io, "cannot open config file '" + path + "'");
  std::ostringstream ss;
  ss << f.rdbuf();
  return parse_config(ss.str());
}

std::string render_config(const RunConfig& cfg) {
  std::string out, current;
  for (const auto& e : entries()) {
    const std::string path = e.path;
    const auto dot = path.find('.');
    const std::string section = dot == std::string::npos ? "" : path.substr(0, dot);
    const std::string key = dot == std::string::npos ? path : path.substr(dot + 1);
    if (section.empty()) {
      // Section-less keys go first so they are not swallowed by a header.
      continue;
    }
    if (section != current) {
      if (!out.empty()) out += "\n";
      out += "[" + section + "]\n";
      current = section;
    }
    std::string value = e.get(cfg);
    if (value.empty() || value.find_first_of("#\" \t") != std::string::npos) value = "\"" + value + "\"";
    out += key + " = " + value + "\n";
  }
  std::string top;
  for (const auto& e : entries())
    if (std::string(e.path).find('.') == std::string::npos) top += std::string(e.path) + " = " + e.get(cfg) + "\n";
  return top + "\n" + out;
}

void set_config_value(RunConfig& cfg, const std::string& key, const std::string& value) {
  const Entry* e = find_entry(key);
  if (!e) config_error(key, "unknown key");
  RunConfig next = cfg;
  e->set(next, unquote(key, trim(value)));
  validate(next);
  cfg = std::move(next);
}

}  // namespace nsv
