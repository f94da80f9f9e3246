#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace pqos {

/// Bad flags, bad config keys, or values that do not parse. Exit code 2.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Command { Synth, Train, Ablate, NoiseSweep, SurvivalDemo, PqosRun, Serve };

/// Everything a subcommand needs. Defaults are the built-in values; a JSON
/// config file (`--config`) overrides them and explicit flags override both.
struct RunConfig {
  Command command = Command::Synth;
  std::optional<std::string> help;  // set when --help was requested

  std::string scenario_path;  // empty: built-in world
  std::string route_path;
  std::string scenario_json;  // inline "scenario" object from a config file
  std::string route_json;
  std::uint64_t seed = 1;
  std::size_t n = 0;  // 0: 3100, or the demo world's own length
  std::string out = "-";
  std::string trace_path;  // empty: synthesize
  std::string out_dir = "reports";

  // train / ablate / noise-sweep
  std::string model = "mlp";
  std::string features;  // empty: sinr_location (train), sinr (noise-sweep)
  std::optional<int> epochs;  // unset: per-model default
  int batch_size = 32;
  std::optional<double> lr;
  bool closed_form = false;
  double train_fraction = 0.9;
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
  std::vector<double> rmse{0.0, 4.0, 10.0};

  // survival-demo
  std::string ns;  // empty: replay both reference cases
  int survival = 2;
  int required = 3;

  // pqos-run / serve
  std::string world = "demo";      // demo | default
  std::string model_path = "map";  // "map" or a model JSON file
  std::string profile = "teleoperated_driving";
  int lead = 2;
  double requirement = 20.0;  // Mbps
  std::string host = "127.0.0.1";
  int port = 7878;
};

/// `args` excludes the program name. Throws UsageError.
RunConfig parse_config(const std::vector<std::string>& args);

/// Runs the command; returns the process exit status.
int dispatch(const RunConfig& config, std::ostream& out, std::ostream& err);

/// parse_config + dispatch with the documented exit codes (0 / 1 / 2).
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace pqos
