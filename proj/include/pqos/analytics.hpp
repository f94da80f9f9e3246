#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Core>

#include "pqos/predict.hpp"
#include "pqos/scenario.hpp"
#include "pqos/survival.hpp"

namespace pqos {

/// KPI requirements of one use case. Zero throughput means "not specified".
struct UseCaseProfile {
  std::string name;
  double max_latency_ms = 0.0;
  double reliability = 0.99;
  double min_throughput_mbps = 0.0;
  double prediction_window_s = 1.0;
  double reliability_change_factor = 10.0;

  void validate() const;
};

/// Closed-loop control, mobile robot, HD map, teleoperated driving, platooning.
std::vector<UseCaseProfile> builtin_profiles();
std::optional<UseCaseProfile> find_profile(const std::string& name);

/// Countermeasure label for a predicted shortfall.
std::string recommended_action(const UseCaseProfile& profile, double predicted_mbps, double requirement_mbps);

struct Subscription {
  UseCaseProfile profile;
  int horizon_intervals = 1;
  int lead_intervals = 1;
  double requirement_mbps = 0.0;  // NS failure when uplink throughput falls below this

  void validate() const;
  /// Horizon = profile window in transfer intervals, at least `lead`.
  static Subscription for_profile(const UseCaseProfile& profile, int lead, double transfer_interval_s,
                                  double requirement_mbps);
};

struct QosNotification {
  long issued_at = 0;       // interval index
  long effective_at = 0;    // first interval of the predicted shortfall
  double predicted_tput = 0.0;  // minimum forecast over the run, Mbps
  double requirement = 0.0;     // Mbps
  std::string recommended_action;
  std::size_t run_length = 0;   // predicted, clipped to the horizon

  /// `{"type":"notify","effective_at":..,"predicted_mbps":..,"requirement_mbps":..,"action":..}`
  std::string to_wire() const;
};

/// Forecasts throughput straight from the shadowing-free radio map. Exact
/// when the scenario has no shadowing; used as the perfect-map reference.
struct MapOracle {};

using ForecastModel = std::variant<LinearModel, MlpModel, MapOracle>;

ForecastModel to_forecast_model(const Predictor& predictor);

/// Vehicle at `interval` of a track.
struct RouteState {
  RouteTrack track;
  std::size_t interval = 0;
};

/// Predicted uplink throughput for intervals interval+1 .. interval+horizon.
/// Features are computed from the shadowing-free SINR map at the future positions.
Eigen::VectorXd request_prediction(const ForecastModel& model, const RadioScenario& scenario, const RouteState& state,
                                   int horizon_intervals);

struct ClosedLoopResult {
  NsTrace ns;                  // ground truth: realized throughput >= requirement
  std::vector<double> realized_tput;
  std::vector<QosNotification> notifications;  // in issue order
  std::vector<QosNotification> undeliverable;  // predicted runs starting before `lead` intervals elapsed
  std::vector<Notification> applied;           // what the application acted on
  AsTrace as_off;
  AsTrace as_on;

  /// One wire line per issued notification, newline-terminated.
  std::string notification_log() const;
};

using NotificationSink = std::function<void(const QosNotification&)>;

/// Drives `n_intervals` transfer intervals over the route (same motion as
/// synthesize_trace with n_samples = n_intervals) and compares the
/// application with and without advance notifications.
ClosedLoopResult run_closed_loop(const RadioScenario& scenario, const Route& route, const ForecastModel& model,
                                 const Subscription& subscription, const AppConfig& app, std::uint64_t seed,
                                 std::size_t n_intervals, const NotificationSink& on_notify = {});

/// Small world with no shadowing and a single blockage that the default
/// one-lap drive crosses in exactly three transfer intervals.
struct OutageDemo {
  RadioScenario scenario;
  Route route;
  std::size_t intervals = 0;
  double requirement_mbps = 0.0;
  std::size_t outage_start = 0;
  std::size_t outage_length = 0;
};
OutageDemo outage_demo();

}  // namespace pqos
