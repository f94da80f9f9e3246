#pragma once

#include <array>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "pqos/rng.hpp"

namespace pqos {

using Point3 = Eigen::Vector3d;

inline constexpr int kSectorCount = 3;

/// Region of extra penetration loss (building, underpass). A UE whose
/// horizontal position lies inside the disc sees `loss_db` on top of path loss.
struct Blockage {
  Eigen::Vector2d center = Eigen::Vector2d::Zero();
  double radius = 0.0;   // m
  double loss_db = 0.0;  // dB
};

/// Parameters of the synthetic radio world. Defaults are the calibrated
/// drive-test configuration (see default_scenario()).
struct RadioScenario {
  Point3 bs_position{300.0, 150.0, 21.0};
  double carrier_freq = 3.41;      // GHz
  double bandwidth = 40.0;         // MHz
  double bs_antenna_gain = 15.5;   // dBi
  double ue_antenna_gain = 5.0;    // dBi
  double ue_height = 1.5;          // m
  double tx_power = 23.0;          // dBm
  double noise_figure = 5.0;       // dB
  double pl_ref = 42.0;            // dB at 1 m
  double pl_exponent = 3.0;
  double shadow_sigma = 4.0;       // dB
  double shadow_corr_dist = 50.0;  // m
  double sinr_meas_sigma = 3.0;    // dB, error of the reported SINR
  double interference_floor = -95.0;  // dBm; -inf disables interference
  double tput_max = 40.0;          // Mbps
  double sinr_sat = 10.0;          // dB
  std::vector<Blockage> blockages;

  /// Throws DomainError when an invariant does not hold.
  void validate() const;
};

struct Route {
  std::vector<Point3> waypoints;
  int laps = 10;
  double sample_period = 1.0;  // s

  void validate() const;
  /// Length of the closed loop (last waypoint connects back to the first).
  double perimeter() const;
  /// Point at arc length `s` along the loop, `s` taken modulo the perimeter.
  Point3 point_at(double s) const;
};

/// Vehicle motion along a route: constant speed, one sample per sample_period.
class RouteTrack {
 public:
  RouteTrack(Route route, double step_m);

  /// Track that covers `route.laps` laps in exactly `n_samples` samples.
  static RouteTrack for_samples(const Route& route, std::size_t n_samples);

  Point3 position(std::size_t interval) const;
  double time(std::size_t interval) const { return static_cast<double>(interval) * route_.sample_period; }
  double speed() const { return step_ / route_.sample_period; }
  double step() const { return step_; }
  const Route& route() const { return route_; }

 private:
  Route route_;
  double step_;
};

struct MeasurementSample {
  double t = 0.0;          // s
  Point3 position = Point3::Zero();
  double speed = 0.0;      // m/s
  double sinr = 0.0;       // dB
  std::array<double, kSectorCount> rsrp{};  // dBm
  double ul_tput = 0.0;    // Mbps
  double dl_tput = 0.0;    // Mbps
};

using Trace = std::vector<MeasurementSample>;

/// Log-distance path loss, reference distance 1 m.
double path_loss_db(const RadioScenario& scenario, double distance_m);

/// Thermal noise over the scenario bandwidth plus receiver noise figure, dBm.
double noise_power_dbm(const RadioScenario& scenario);

/// Spatially correlated log-normal shadowing (Gudmundson AR(1) model):
/// consecutive samples taken `d` metres apart correlate with exp(-d / corr_dist).
class ShadowingProcess {
 public:
  ShadowingProcess(double sigma_db, double corr_dist_m, std::uint64_t seed);

  /// Shadow loss in dB at `position`. Repeated queries at the same position
  /// return the same value.
  double sample(const Point3& position);

 private:
  double sigma_;
  double corr_dist_;
  Rng rng_;
  bool started_ = false;
  Point3 last_position_ = Point3::Zero();
  double last_value_ = 0.0;
};

/// Shadowing-free SINR: path loss and blockage only. This is the "mean radio map".
double mean_sinr_db(const RadioScenario& scenario, const Point3& position);

/// SINR including a draw from `shadow`.
double sinr_db(const RadioScenario& scenario, const Point3& position, ShadowingProcess& shadow);

/// Calibration factor alpha with throughput(sinr_sat) == tput_max.
double throughput_scale(const RadioScenario& scenario);

/// Capped Shannon-like link abstraction, Mbps.
double throughput_mbps(const RadioScenario& scenario, double sinr_db);

/// Ground-truth drive test over `route.laps` laps. Pure function of its arguments.
Trace synthesize_trace(const RadioScenario& scenario, const Route& route, std::size_t n_samples,
                       std::uint64_t seed);

/// Calibrated default world and the ~600 m x 300 m loop driven in it.
RadioScenario default_scenario();
Route default_route();

/// JSON loaders. Keys match the struct field names; unknown keys are rejected
/// with ParseError. `interference_floor: null` means no interference.
RadioScenario scenario_from_json(const std::string& text);
Route route_from_json(const std::string& text);
RadioScenario load_scenario(const std::string& path);
Route load_route(const std::string& path);
std::string scenario_to_json(const RadioScenario& scenario);
std::string route_to_json(const Route& route);

}  // namespace pqos
