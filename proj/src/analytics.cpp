#include "pqos/analytics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "json.hpp"
#include "pqos/error.hpp"

namespace pqos {

void UseCaseProfile::validate() const {
  if (!(reliability > 0.0 && reliability < 1.0)) throw DomainError("profile '" + name + "': reliability must be in (0, 1)");
  if (!(prediction_window_s > 0.0)) throw DomainError("profile '" + name + "': prediction window must be positive");
  if (!(max_latency_ms >= 0.0) || !(min_throughput_mbps >= 0.0))
    throw DomainError("profile '" + name + "': latency and throughput must be non-negative");
}

std::vector<UseCaseProfile> builtin_profiles() {
  // name, latency ms, reliability, throughput Mbps, window s
  return {
      {"closed_loop_control", 150.0, 0.9999999, 0.0, 0.005, 10.0},
      {"mobile_robot", 500.0, 0.999999, 10.0, 60.0, 10.0},
      {"hd_map", 100.0, 0.99, 0.0, 5.0, 10.0},
      {"teleoperated_driving", 50.0, 0.99, 40.0, 120.0, 10.0},
      {"platooning", 25.0, 0.9999, 0.0, 60.0, 10.0},
  };
}

std::optional<UseCaseProfile> find_profile(const std::string& name) {
  for (auto& p : builtin_profiles())
    if (p.name == name) return p;
  return std::nullopt;
}

std::string recommended_action(const UseCaseProfile& profile, double predicted_mbps, double requirement_mbps) {
  if (profile.name == "platooning") return "human takeover";
  if (profile.name == "closed_loop_control") return "safe mode";
  if (profile.name == "teleoperated_driving")
    // A partial shortfall can be absorbed by the video encoder; a deep one cannot.
    return predicted_mbps >= 0.5 * requirement_mbps ? "reduce resolution" : "safe mode";
  return "reduce resolution";
}

void Subscription::validate() const {
  profile.validate();
  if (lead_intervals < 1) throw DomainError("lead_intervals must be at least 1");
  if (lead_intervals > horizon_intervals) throw DomainError("lead_intervals must not exceed horizon_intervals");
  if (!(requirement_mbps >= 0.0) || !std::isfinite(requirement_mbps))
    throw DomainError("requirement must be a non-negative number");
}

Subscription Subscription::for_profile(const UseCaseProfile& profile, int lead, double transfer_interval_s,
                                       double requirement_mbps) {
  if (!(transfer_interval_s > 0.0)) throw DomainError("transfer interval must be positive");
  Subscription s;
  s.profile = profile;
  s.lead_intervals = lead;
  const double window = std::ceil(profile.prediction_window_s / transfer_interval_s - 1e-9);
  s.horizon_intervals = std::max(lead, static_cast<int>(std::max(1.0, window)));
  s.requirement_mbps = requirement_mbps;
  s.validate();
  return s;
}

std::string QosNotification::to_wire() const {
  nlohmann::ordered_json j;
  j["type"] = "notify";
  j["effective_at"] = effective_at;
  j["predicted_mbps"] = predicted_tput;
  j["requirement_mbps"] = requirement;
  j["action"] = recommended_action;
  return j.dump();
}

ForecastModel to_forecast_model(const Predictor& predictor) {
  return std::visit([](const auto& m) -> ForecastModel { return m; }, predictor);
}

namespace {

// Forecast for intervals first .. first+count-1 of the track.
Eigen::VectorXd forecast(const ForecastModel& model, const RadioScenario& scenario, const RouteTrack& track,
                         std::size_t first, std::size_t count) {
  Eigen::VectorXd sinr(static_cast<Eigen::Index>(count));
  std::vector<Point3> pos(count);
  for (std::size_t k = 0; k < count; ++k) {
    pos[k] = track.position(first + k);
    sinr(static_cast<Eigen::Index>(k)) = mean_sinr_db(scenario, pos[k]);
  }
  return std::visit(
      [&](const auto& m) -> Eigen::VectorXd {
        if constexpr (std::is_same_v<std::decay_t<decltype(m)>, MapOracle>) {
          return sinr.unaryExpr([&](double s) { return throughput_mbps(scenario, s); });
        } else {
          m.validate();
          Eigen::MatrixXd x(static_cast<Eigen::Index>(count), feature_count(m.feature_set));
          for (std::size_t k = 0; k < count; ++k)
            x.row(static_cast<Eigen::Index>(k)) = feature_row(m.feature_set, sinr(static_cast<Eigen::Index>(k)), pos[k]).transpose();
          return predict(m, x);
        }
      },
      model);
}

}  // namespace

Eigen::VectorXd request_prediction(const ForecastModel& model, const RadioScenario& scenario, const RouteState& state,
                                   int horizon_intervals) {
  if (horizon_intervals < 0) throw DomainError("horizon must be non-negative");
  if (horizon_intervals == 0) return Eigen::VectorXd(0);
  return forecast(model, scenario, state.track, state.interval + 1, static_cast<std::size_t>(horizon_intervals));
}

std::string ClosedLoopResult::notification_log() const {
  std::string s;
  for (const auto& n : notifications) s += n.to_wire() + "\n";
  return s;
}

ClosedLoopResult run_closed_loop(const RadioScenario& scenario, const Route& route, const ForecastModel& model,
                                 const Subscription& subscription, const AppConfig& app, std::uint64_t seed,
                                 std::size_t n_intervals, const NotificationSink& on_notify) {
  subscription.validate();
  if (app.survival_time < 0) throw DomainError("survival_time must be non-negative");
  if (n_intervals == 0) throw DomainError("closed loop needs at least one interval");

  ClosedLoopResult out;
  const Trace truth = synthesize_trace(scenario, route, n_intervals, seed);
  const RouteTrack track = RouteTrack::for_samples(route, n_intervals);
  const double req = subscription.requirement_mbps;
  out.ns.transfer_interval = route.sample_period;
  for (const auto& s : truth) {
    out.realized_tput.push_back(s.ul_tput);
    out.ns.outcomes.push_back(s.ul_tput >= req);
  }

  const auto lead = static_cast<std::size_t>(subscription.lead_intervals);
  const auto horizon = static_cast<std::size_t>(subscription.horizon_intervals);
  const auto survival = static_cast<std::size_t>(app.survival_time);

  // Predicted run starting at offset k of window f (f[0] is the current interval).
  // Returns the visible run length and minimum forecast, clipped to the horizon and trace end.
  const auto run_at = [&](const Eigen::VectorXd& f, std::size_t t, std::size_t k) {
    std::size_t len = 0;
    double lo = std::numeric_limits<double>::infinity();
    while (k + len <= horizon && t + k + len < n_intervals && f(static_cast<Eigen::Index>(k + len)) < req) {
      lo = std::min(lo, f(static_cast<Eigen::Index>(k + len)));
      ++len;
    }
    return std::pair{len, lo};
  };
  const auto make = [&](std::size_t t, std::size_t r, std::size_t len, double lo) {
    QosNotification n;
    n.issued_at = static_cast<long>(t);
    n.effective_at = static_cast<long>(r);
    n.predicted_tput = lo;
    n.requirement = req;
    n.recommended_action = recommended_action(subscription.profile, lo, req);
    n.run_length = len;
    return n;
  };

  for (std::size_t t = 0; t < n_intervals; ++t) {
    try {
      const Eigen::VectorXd f = forecast(model, scenario, track, t, horizon + 1);
      const auto fails = [&](std::size_t k) { return f(static_cast<Eigen::Index>(k)) < req; };

      // Runs the vehicle reaches too early to warn about with the configured lead.
      if (t == 0) {
        for (std::size_t r = 0; r < std::min(lead, n_intervals); ++r) {
          if (!fails(r) || (r > 0 && fails(r - 1))) continue;
          const auto [len, lo] = run_at(f, 0, r);
          if (len > survival) out.undeliverable.push_back(make(0, r, len, lo));
        }
      }

      const std::size_t r = t + lead;
      if (r >= n_intervals || !fails(lead) || fails(lead - 1)) continue;
      const auto [len, lo] = run_at(f, t, lead);
      if (len <= survival) continue;
      out.notifications.push_back(make(t, r, len, lo));
      out.applied.emplace_back(r, len, subscription.lead_intervals, len);
      if (on_notify) on_notify(out.notifications.back());
    } catch (const TrainingError&) {
      throw;
    } catch (const DomainError& e) {
      throw DomainError(fmt::format("interval {}: {}", t, e.what()));
    }
  }

  out.as_off = eval_as(out.ns, app);
  out.as_on = eval_as_with_pqos(out.ns, app, out.applied);
  return out;
}

OutageDemo outage_demo() {
  OutageDemo d;
  d.scenario = RadioScenario{};
  d.scenario.bs_position = Point3(150.0, 50.0, 21.0);
  d.scenario.shadow_sigma = 0.0;
  d.scenario.sinr_meas_sigma = 0.0;
  // The drive passes x = 120, 140, 160 m inside the disc; 100 and 180 m stay clear.
  d.scenario.blockages = {{Eigen::Vector2d(140.0, 0.0), 25.0, 45.0}};
  d.route.waypoints = {Point3(0, 0, 1.5), Point3(300, 0, 1.5), Point3(300, 100, 1.5), Point3(0, 100, 1.5)};
  d.route.laps = 1;
  d.route.sample_period = 1.0;
  d.intervals = 40;  // 20 m per interval
  d.requirement_mbps = 20.0;
  d.outage_start = 6;
  d.outage_length = 3;
  return d;
}

}  // namespace pqos
