#include <CLI11.hpp>

#include <cstdio>
#include <map>
#include <string>
#include <vector>

#include "nsv/nsv.h"

namespace {

constexpr int kChecksFailed = 8;

int report(nsv_status st) {
  if (st != NSV_OK) std::fprintf(stderr, "nsv-sim: %s\n", nsv_last_error());
  return static_cast<int>(st);
}

// Loads the config and applies --set key=value overrides in order.
nsv_status load(const std::string& path, const std::vector<std::string>& overrides, nsv_config** cfg) {
  nsv_status st = nsv_config_load(path.c_str(), cfg);
  if (st != NSV_OK) return st;
  for (const auto& kv : overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) {
      std::fprintf(stderr, "nsv-sim: --set expects key=value, got '%s'\n", kv.c_str());
      nsv_config_free(*cfg);
      *cfg = nullptr;
      return NSV_ERR_INVALID_ARGUMENT;
    }
    st = nsv_config_set(*cfg, kv.substr(0, eq).c_str(), kv.substr(eq + 1).c_str());
    if (st != NSV_OK) {
      nsv_config_free(*cfg);
      *cfg = nullptr;
      return st;
    }
  }
  return NSV_OK;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Navier-Stokes-Vlasov simulator"};
  app.require_subcommand(1);
  std::string output_dir;
  std::string log_level = "info";
  std::vector<std::string> overrides;
  app.add_option("--output-dir", output_dir, "Directory for diagnostics and snapshots (overrides output.directory)");
  const std::map<std::string, nsv_log_level> levels{{"trace", NSV_LOG_TRACE}, {"debug", NSV_LOG_DEBUG},
                                                     {"info", NSV_LOG_INFO},   {"warn", NSV_LOG_WARN},
                                                     {"error", NSV_LOG_ERROR}, {"off", NSV_LOG_OFF}};
  app.add_option("--log-level", log_level, "trace|debug|info|warn|error|off")
      ->check(CLI::IsMember({"trace", "debug", "info", "warn", "error", "off"}));

  std::string config_path, snapshot_path;
  double until = 0.0;

  auto* run = app.add_subcommand("run", "Run a configuration to time.t_end");
  run->add_option("config", config_path, "Config file")->required()->check(CLI::ExistingFile);
  run->add_option("--set", overrides, "Override a config key (key=value), repeatable");

  auto* resume = app.add_subcommand("resume", "Continue from a snapshot");
  resume->add_option("snapshot", snapshot_path, "Snapshot file (.nsv)")->required()->check(CLI::ExistingFile);
  resume->add_option("--until", until, "Target time")->required();

  auto* verify = app.add_subcommand("verify", "Run the coupled invariant checks and the window bisection");
  verify->add_option("config", config_path, "Config file")->required()->check(CLI::ExistingFile);
  verify->add_option("--set", overrides, "Override a config key (key=value), repeatable");

  CLI11_PARSE(app, argc, argv);
  nsv_set_log_level(levels.at(log_level));
  const char* dir = output_dir.empty() ? nullptr : output_dir.c_str();

  if (*resume) return report(nsv_resume(snapshot_path.c_str(), until, dir));

  nsv_config* cfg = nullptr;
  if (const nsv_status st = load(config_path, overrides, &cfg); st != NSV_OK) return report(st);
  int code = 0;
  if (*run) {
    code = report(nsv_run(cfg, dir));
  } else {
    int passed = 0;
    code = report(nsv_verify(cfg, dir, &passed));
    if (code == 0 && !passed) {
      std::fprintf(stderr, "nsv-sim: verify checks failed, see verify_report.json\n");
      code = kChecksFailed;
    }
  }
  nsv_config_free(cfg);
  return code;
}
