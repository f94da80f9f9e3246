#include "pqos/cli.hpp"

#include <fstream>
#include <iostream>
#include <sstream>

#include <fmt/format.h>

#include "CLI11.hpp"
#include "json.hpp"
#include "pqos/analytics.hpp"
#include "pqos/dataset.hpp"
#include "pqos/error.hpp"
#include "pqos/eval.hpp"
#include "pqos/service.hpp"
#include "pqos/survival.hpp"

namespace pqos {

namespace {

constexpr std::size_t kDefaultSamples = 3100;

struct Commands {
  CLI::App app{"Predictive QoS laboratory: synthetic drive tests, throughput predictors, survival-time adaptation.",
               "pqos"};
  std::vector<std::pair<CLI::App*, Command>> subs;
};

void add_world(CLI::App* sub, RunConfig& c) {
  sub->add_option("--scenario", c.scenario_path, "Scenario JSON file (default: built-in world)")->check(CLI::ExistingFile);
  sub->add_option("--route", c.route_path, "Route JSON file (default: built-in loop)")->check(CLI::ExistingFile);
  sub->add_option("--seed", c.seed, "Random seed");
}

void add_trace_source(CLI::App* sub, RunConfig& c) {
  add_world(sub, c);
  sub->add_option("--trace", c.trace_path, "Trace CSV to use instead of synthesizing one")->check(CLI::ExistingFile);
  sub->add_option("--n", c.n, "Samples to synthesize (default 3100)");
}

void add_training(CLI::App* sub, RunConfig& c) {
  sub->add_option("--epochs", c.epochs, "Training epochs (default: 200 linear, 150 mlp)");
  sub->add_option("--batch-size", c.batch_size, "Mini-batch size");
  sub->add_option("--lr", c.lr, "Learning rate (default: 0.05 linear, 0.001 mlp)");
  sub->add_option("--train-fraction", c.train_fraction, "Share of samples in the training split");
}

void add_loop(CLI::App* sub, RunConfig& c) {
  add_world(sub, c);
  sub->add_option("--world", c.world, "demo (one 3-interval outage) or default (calibrated drive test)");
  sub->add_option("--model-path", c.model_path, "'map' for the radio-map predictor, or a model JSON file");
  sub->add_option("--n", c.n, "Transfer intervals to simulate (default: world length)");
  sub->add_option("--requirement", c.requirement, "Uplink throughput requirement, Mbps");
  sub->add_option("--survival", c.survival, "Application survival time, intervals");
}

void build(Commands& cmds, RunConfig& c, std::string& config_path) {
  auto& app = cmds.app;
  app.require_subcommand(1);
  app.fallthrough(false);
  const auto add = [&](const char* name, const char* desc, Command cmd) {
    CLI::App* sub = app.add_subcommand(name, desc);
    sub->add_option("--config", config_path, "JSON config file; flags override its values")->check(CLI::ExistingFile);
    cmds.subs.emplace_back(sub, cmd);
    return sub;
  };

  auto* synth = add("synth", "Synthesize a drive-test trace as CSV", Command::Synth);
  add_world(synth, c);
  synth->add_option("--n", c.n, "Samples (default 3100)");
  synth->add_option("--out", c.out, "Output CSV path, '-' for stdout");

  auto* train = add("train", "Train one predictor and save it as JSON", Command::Train);
  add_trace_source(train, c);
  add_training(train, c);
  train->add_option("--model", c.model, "linear or mlp");
  train->add_option("--features", c.features, "location, sinr or sinr_location (default sinr_location)");
  train->add_flag("--closed-form", c.closed_form, "Fit the linear model by least squares instead of descent");
  train->add_option("--out", c.out, "Model JSON path, '-' for stdout");

  auto* ablate = add("ablate", "Train all six model/feature configurations and write reports", Command::Ablate);
  add_trace_source(ablate, c);
  add_training(ablate, c);
  ablate->add_option("--out-dir", c.out_dir, "Report directory");

  auto* sweep = add("noise-sweep", "Test MAE versus SINR measurement error", Command::NoiseSweep);
  add_trace_source(sweep, c);
  add_training(sweep, c);
  sweep->add_option("--model", c.model, "linear or mlp");
  sweep->add_option("--features", c.features, "sinr or sinr_location (default sinr)");
  sweep->add_option("--seeds", c.seeds, "Comma-separated split/training seeds")->delimiter(',');
  sweep->add_option("--rmse", c.rmse, "Comma-separated SINR error levels, dB, increasing")->delimiter(',');
  sweep->add_option("--out-dir", c.out_dir, "Report directory");

  auto* demo = add("survival-demo", "Replay failure runs with and without an advance notification", Command::SurvivalDemo);
  demo->add_option("--ns", c.ns, "NS trace of 0/1 characters (default: both reference cases)");
  demo->add_option("--survival", c.survival, "Application survival time, intervals");
  demo->add_option("--required", c.required, "Survival time granted by the notification");

  auto* run = add("pqos-run", "Closed loop: forecasts, notifications, PQoS off/on comparison", Command::PqosRun);
  add_loop(run, c);
  run->add_option("--profile", c.profile, "Use-case profile");
  run->add_option("--lead", c.lead, "Notification lead, intervals");
  run->add_option("--out", c.out, "Log path, '-' for stdout");

  auto* serve = add("serve", "Serve forecasts and notifications over TCP", Command::Serve);
  add_loop(serve, c);
  serve->add_option("--host", c.host, "Listen address (IPv4)");
  serve->add_option("--port", c.port, "Listen port, 0 for any free port");
}

// Feeds config-file values to options that were not given on the command line.
void apply_config_file(CLI::App* sub, const std::string& path, RunConfig& c) {
  std::ifstream in(path);
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw UsageError(fmt::format("--config: '{}' is not valid JSON: {}", path, e.what()));
  }
  if (!doc.is_object()) throw UsageError("--config: top level must be an object");

  for (const auto& [raw_key, value] : doc.items()) {
    std::string key = raw_key;
    std::replace(key.begin(), key.end(), '_', '-');
    if ((key == "scenario" || key == "route") && value.is_object()) {
      if (sub->get_option("--" + key)->count() == 0) (key == "scenario" ? c.scenario_json : c.route_json) = value.dump();
      continue;
    }
    CLI::Option* opt = key == "config" ? nullptr : sub->get_option_no_throw("--" + key);
    if (!opt) throw UsageError(fmt::format("--config: unknown key '{}' for '{}'", raw_key, sub->get_name()));
    if (opt->count() > 0) continue;

    std::vector<std::string> results;
    const auto text = [](const nlohmann::json& v) { return v.is_string() ? v.get<std::string>() : v.dump(); };
    if (value.is_array())
      for (const auto& v : value) results.push_back(text(v));
    else
      results.push_back(text(value));
    try {
      opt->add_result(results);
      opt->run_callback();
    } catch (const CLI::Error& e) {
      throw UsageError(fmt::format("--config: bad value for '{}': {}", raw_key, e.what()));
    }
  }
}

void validate(const RunConfig& c) {
  const auto bad = [](const char* flag, const std::string& why) { throw UsageError(fmt::format("{}: {}", flag, why)); };
  if (c.model != "linear" && c.model != "mlp") bad("--model", "expected 'linear' or 'mlp', got '" + c.model + "'");
  if (!c.features.empty()) {
    try {
      feature_set_from_string(c.features);
    } catch (const std::exception&) {
      bad("--features", "expected location, sinr or sinr_location, got '" + c.features + "'");
    }
  }
  if (c.epochs && *c.epochs < 1) bad("--epochs", "must be at least 1");
  if (c.batch_size < 1) bad("--batch-size", "must be at least 1");
  if (c.lr && !(*c.lr >= 0.0)) bad("--lr", "must be non-negative");
  if (!(c.train_fraction > 0.0 && c.train_fraction < 1.0)) bad("--train-fraction", "must lie in (0, 1)");
  if (c.seeds.empty()) bad("--seeds", "need at least one seed");
  for (std::size_t i = 0; i < c.rmse.size(); ++i)
    if (!(c.rmse[i] >= 0.0) || (i > 0 && !(c.rmse[i] > c.rmse[i - 1]))) bad("--rmse", "values must be non-negative and increasing");
  if (c.rmse.empty()) bad("--rmse", "need at least one value");
  if (c.survival < 0) bad("--survival", "must be non-negative");
  if (c.required < 1) bad("--required", "must be at least 1");
  if (c.lead < 1) bad("--lead", "must be at least 1");
  if (!(c.requirement >= 0.0)) bad("--requirement", "must be non-negative");
  if (c.world != "demo" && c.world != "default") bad("--world", "expected 'demo' or 'default', got '" + c.world + "'");
  if (!find_profile(c.profile)) bad("--profile", "unknown profile '" + c.profile + "'");
  if (c.port < 0 || c.port > 65535) bad("--port", "must be in 0..65535");
  for (char ch : c.ns)
    if (ch != '0' && ch != '1' && !std::isspace(static_cast<unsigned char>(ch))) bad("--ns", "may only contain 0 and 1");
}

// ---- commands -------------------------------------------------------------

struct World {
  RadioScenario scenario;
  Route route;
  std::size_t n = kDefaultSamples;
};

World load_world(const RunConfig& c, bool demo_allowed) {
  World w;
  if (demo_allowed && c.world == "demo") {
    const auto d = outage_demo();
    w = {d.scenario, d.route, d.intervals};
  } else {
    w = {default_scenario(), default_route(), kDefaultSamples};
  }
  if (!c.scenario_json.empty()) w.scenario = scenario_from_json(c.scenario_json);
  if (!c.route_json.empty()) w.route = route_from_json(c.route_json);
  if (!c.scenario_path.empty()) w.scenario = load_scenario(c.scenario_path);
  if (!c.route_path.empty()) w.route = load_route(c.route_path);
  if (c.n > 0) w.n = c.n;
  return w;
}

Trace obtain_trace(const RunConfig& c) {
  if (!c.trace_path.empty()) return load_trace_csv(c.trace_path);
  const World w = load_world(c, false);
  return synthesize_trace(w.scenario, w.route, w.n, c.seed);
}

TrainConfig training_config(const RunConfig& c, bool linear) {
  TrainConfig t = linear ? TrainConfig::linear_defaults() : TrainConfig::mlp_defaults();
  if (c.epochs) t.epochs = *c.epochs;
  if (c.lr) t.learning_rate = *c.lr;
  t.batch_size = c.batch_size;
  t.seed = c.seed;
  return t;
}

void write_output(const std::string& path, const std::string& text, std::ostream& out) {
  if (path == "-") {
    out << text;
    return;
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write '" + path + "'");
  f << text;
  if (!f) throw std::runtime_error("write failed for '" + path + "'");
}

int cmd_synth(const RunConfig& c, std::ostream& out) {
  const World w = load_world(c, false);
  std::ostringstream csv;
  write_trace_csv(synthesize_trace(w.scenario, w.route, w.n, c.seed), csv);
  write_output(c.out, csv.str(), out);
  return 0;
}

int cmd_train(const RunConfig& c, std::ostream& out, std::ostream& err) {
  const FeatureSet fs = feature_set_from_string(c.features.empty() ? "sinr_location" : c.features);
  const bool linear = c.model == "linear";
  if (c.closed_form && !linear) throw UsageError("--closed-form: only applies to --model linear");
  const Split sp = split(extract_features(obtain_trace(c), fs), c.train_fraction, c.seed);

  Predictor model;
  if (linear && c.closed_form)
    model = train_linear_closed_form(sp.train);
  else if (linear)
    model = train_linear_gd(sp.train, sp.test, training_config(c, true)).model;
  else
    model = train_mlp(sp.train, sp.test, training_config(c, false)).model;

  const double m = mae(predict(model, sp.test.data.features), sp.test.data.labels);
  const std::string summary =
      fmt::format("model={} features={} test_mae_mbps={:.6f} rel_err_pct={:.2f} split_checksum={:016x}\n", c.model,
                  to_string(fs), m, relative_error(m, sp.test.data.labels.mean()), sp.checksum);
  write_output(c.out, model_to_json(model) + "\n", out);
  (c.out == "-" ? err : out) << summary;
  return 0;
}

int cmd_ablate(const RunConfig& c, std::ostream& out) {
  AblationConfig cfg;
  cfg.linear = training_config(c, true);
  cfg.mlp = training_config(c, false);
  cfg.train_fraction = c.train_fraction;
  ExperimentReport report;
  report.ablation = run_ablation(obtain_trace(c), c.seed, cfg);
  export_reports(report, c.out_dir);

  out << fmt::format("{:<8}{:<15}{:>10}{:>13}{:>8}\n", "model", "features", "mae_mbps", "rel_err_pct", "epochs");
  for (const auto& r : report.ablation->rows)
    out << fmt::format("{:<8}{:<15}{:>10.3f}{:>13.1f}{:>8}\n", to_string(r.model), to_string(r.features), r.mae_mbps,
                       r.rel_err_pct, r.epochs_to_converge);
  out << fmt::format("split_checksum={:016x} reports={}\n", report.ablation->split_checksum, c.out_dir);
  return 0;
}

int cmd_noise_sweep(const RunConfig& c, std::ostream& out) {
  SweepTarget target{c.model == "linear" ? ModelKind::Linear : ModelKind::Mlp,
                     feature_set_from_string(c.features.empty() ? "sinr" : c.features)};
  if (!has_sinr(target.features)) throw UsageError("--features: the noise sweep needs a SINR column");
  const auto result =
      noise_sweep(obtain_trace(c), c.rmse, c.seeds, training_config(c, target.model == ModelKind::Linear), {target},
                  c.train_fraction);
  std::error_code ec;
  std::filesystem::create_directories(c.out_dir, ec);
  if (ec) throw std::runtime_error("cannot create '" + c.out_dir + "': " + ec.message());
  const std::string csv = noise_sweep_csv(result);
  write_output((std::filesystem::path(c.out_dir) / "noise_sweep.csv").string(), csv, out);
  out << csv;
  return 0;
}

void replay(const std::string& title, const NsTrace& ns, const RunConfig& c, std::ostream& out) {
  const AppConfig app{c.survival};
  const AsTrace off = eval_as(ns, app);
  std::vector<Notification> notes;
  for (const auto& run : failure_runs(ns)) {
    if (run.length <= static_cast<std::size_t>(c.survival)) continue;
    // Delivered one interval ahead when possible; a run at t = 0 cannot be announced.
    if (run.start == 0) continue;
    notes.emplace_back(run.start, run.length, 1, std::max<std::size_t>(run.length, static_cast<std::size_t>(c.required)));
  }
  const AsTrace on = eval_as_with_pqos(ns, app, notes);
  out << fmt::format("{}: ns={} S={}\n", title, ns.to_string(), c.survival);
  out << fmt::format("  pqos off: {}  failures={}\n", off.to_string(), off.failure_count);
  out << fmt::format("  pqos on:  {}  failures={} adapted={} notifications={}\n", on.to_string(), on.failure_count,
                     on.adapted_interval_count, notes.size());
}

int cmd_survival_demo(const RunConfig& c, std::ostream& out) {
  if (!c.ns.empty()) {
    replay("trace", NsTrace::parse(c.ns), c, out);
    return 0;
  }
  replay("case 1", NsTrace::parse("1001"), c, out);
  replay("case 2", NsTrace::parse("10001"), c, out);
  return 0;
}

ForecastModel forecast_model(const RunConfig& c) {
  if (c.model_path == "map") return MapOracle{};
  return to_forecast_model(load_model(c.model_path));
}

int cmd_pqos_run(const RunConfig& c, std::ostream& out) {
  const World w = load_world(c, true);
  const auto profile = *find_profile(c.profile);
  const auto sub = Subscription::for_profile(profile, c.lead, w.route.sample_period, c.requirement);
  const auto r = run_closed_loop(w.scenario, w.route, forecast_model(c), sub, AppConfig{c.survival}, c.seed, w.n);

  std::string log = r.notification_log();
  for (const auto& n : r.undeliverable)
    log += fmt::format("# undeliverable effective_at={} run_length={} (lead {})\n", n.effective_at, n.run_length, c.lead);
  log += fmt::format("# profile={} horizon={} lead={} requirement_mbps={} survival={}\n", profile.name,
                     sub.horizon_intervals, sub.lead_intervals, c.requirement, c.survival);
  log += "# ns:       " + r.ns.to_string() + "\n";
  log += "# pqos off: " + r.as_off.to_string() + "\n";
  log += "# pqos on:  " + r.as_on.to_string() + "\n";
  log += fmt::format("# failures off={} on={} adapted={} notifications={}\n", r.as_off.failure_count,
                     r.as_on.failure_count, r.as_on.adapted_interval_count, r.notifications.size());
  write_output(c.out, log, out);
  return 0;
}

int cmd_serve(const RunConfig& c, std::ostream& err) {
  const World w = load_world(c, true);
  EndpointConfig ep;
  ep.host = c.host;
  ep.port = c.port;
  ep.scenario = w.scenario;
  ep.route = w.route;
  ep.intervals = w.n;
  ep.model = forecast_model(c);
  ep.app = AppConfig{c.survival};
  ep.seed = c.seed;
  ep.requirement_mbps = c.requirement;
  Server server(ep);
  err << fmt::format("listening on {}:{}", c.host, server.port()) << std::endl;
  server.run();
  return 0;
}

}  // namespace

RunConfig parse_config(const std::vector<std::string>& args) {
  RunConfig c;
  std::string config_path;
  Commands cmds;
  build(cmds, c, config_path);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    cmds.app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    c.help = cmds.app.help();
    return c;
  } catch (const CLI::CallForAllHelp&) {
    c.help = cmds.app.help("", CLI::AppFormatMode::All);
    return c;
  } catch (const CLI::ParseError& e) {
    throw UsageError(e.what());
  }

  CLI::App* selected = nullptr;
  for (const auto& [sub, cmd] : cmds.subs) {
    if (sub->parsed()) {
      selected = sub;
      c.command = cmd;
    }
  }
  if (!config_path.empty()) apply_config_file(selected, config_path, c);
  validate(c);
  return c;
}

int dispatch(const RunConfig& c, std::ostream& out, std::ostream& err) {
  if (c.help) {
    out << *c.help;
    return 0;
  }
  switch (c.command) {
    case Command::Synth: return cmd_synth(c, out);
    case Command::Train: return cmd_train(c, out, err);
    case Command::Ablate: return cmd_ablate(c, out);
    case Command::NoiseSweep: return cmd_noise_sweep(c, out);
    case Command::SurvivalDemo: return cmd_survival_demo(c, out);
    case Command::PqosRun: return cmd_pqos_run(c, out);
    case Command::Serve: return cmd_serve(c, err);
  }
  return 1;
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  try {
    return dispatch(parse_config(args), out, err);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\nRun 'pqos --help' for usage.\n";
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace pqos
