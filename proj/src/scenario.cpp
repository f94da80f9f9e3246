#include "pqos/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>

#include <json.hpp>

#include "pqos/error.hpp"

namespace pqos {

namespace {

using nlohmann::json;

constexpr double kThermalNoiseDbmPerHz = -174.0;
constexpr double kJitterStdMbps = 0.5;
constexpr double kDownlinkSinrOffsetDb = 3.0;
constexpr double kSubcarrierSpacingHz = 30e3;
constexpr double kSectorBeamwidthDeg = 65.0;
constexpr double kSectorMaxAttenuationDb = 20.0;
constexpr double kShadowGridM = 1.0;

double db2pow(double db) { return std::pow(10.0, db / 10.0); }
double pow2db(double p) { return 10.0 * std::log10(p); }

double blockage_loss_db(const RadioScenario& scenario, const Point3& position) {
  double loss = 0.0;
  for (const auto& b : scenario.blockages) {
    if ((position.head<2>() - b.center).norm() < b.radius) loss += b.loss_db;
  }
  return loss;
}

double distance_to_bs(const RadioScenario& scenario, const Point3& position) {
  const double d = (position - scenario.bs_position).norm();
  if (!(d > 0.0)) throw DomainError("position coincides with the base station");
  return d;
}

// Horizontal gain of sector k (boresights at 0, 120, 240 degrees).
double sector_gain_db(const RadioScenario& scenario, const Point3& position, int sector) {
  const Eigen::Vector2d v = position.head<2>() - scenario.bs_position.head<2>();
  const double azimuth = std::atan2(v.y(), v.x()) * 180.0 / std::numbers::pi;
  double off = std::fmod(azimuth - 120.0 * sector, 360.0);
  if (off > 180.0) off -= 360.0;
  if (off < -180.0) off += 360.0;
  return -std::min(12.0 * (off / kSectorBeamwidthDeg) * (off / kSectorBeamwidthDeg),
                   kSectorMaxAttenuationDb);
}

// Received power before shadowing, dBm.
double mean_rx_power_dbm(const RadioScenario& scenario, const Point3& position) {
  const double d = distance_to_bs(scenario, position);
  return scenario.tx_power + scenario.bs_antenna_gain + scenario.ue_antenna_gain -
         path_loss_db(scenario, d) - blockage_loss_db(scenario, position);
}

double noise_plus_interference_dbm(const RadioScenario& scenario) {
  const double n = noise_power_dbm(scenario);
  if (std::isinf(scenario.interference_floor) && scenario.interference_floor < 0) return n;
  return pow2db(db2pow(n) + db2pow(scenario.interference_floor));
}

Point3 point_from_json(const json& j, const char* key) {
  if (!j.is_array() || j.size() != 3)
    throw ParseError(std::string("'") + key + "' must be an array of 3 numbers");
  Point3 p;
  for (int i = 0; i < 3; ++i) {
    if (!j[i].is_number()) throw ParseError(std::string("'") + key + "' must contain numbers");
    p[i] = j[i].get<double>();
  }
  return p;
}

json point_to_json(const Point3& p) { return json::array({p.x(), p.y(), p.z()}); }

void reject_unknown(const json& j, const std::set<std::string>& known, const char* what) {
  if (!j.is_object()) throw ParseError(std::string(what) + " document must be a JSON object");
  for (const auto& [key, _] : j.items()) {
    if (!known.contains(key)) throw ParseError(std::string("unknown ") + what + " key '" + key + "'");
  }
}

double number(const json& j, const std::string& key) {
  if (!j.is_number()) throw ParseError("'" + key + "' must be a number");
  return j.get<double>();
}

json parse_document(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("invalid JSON: ") + e.what());
  }
}

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

void RadioScenario::validate() const {
  if (!(bandwidth > 0.0)) throw DomainError("bandwidth must be positive");
  if (!(tput_max > 0.0)) throw DomainError("tput_max must be positive");
  if (!(shadow_sigma >= 0.0)) throw DomainError("shadow_sigma must be non-negative");
  if (!(pl_exponent >= 2.0)) throw DomainError("pl_exponent must be at least 2");
  if (!std::isfinite(sinr_sat)) throw DomainError("sinr_sat must be finite");
  if (!(sinr_meas_sigma >= 0.0)) throw DomainError("sinr_meas_sigma must be non-negative");
  if (shadow_sigma > 0.0 && !(shadow_corr_dist > 0.0))
    throw DomainError("shadow_corr_dist must be positive");
  for (const auto& b : blockages) {
    if (!(b.radius >= 0.0)) throw DomainError("blockage radius must be non-negative");
  }
}

void Route::validate() const {
  if (waypoints.size() < 2) throw DomainError("route needs at least 2 waypoints");
  if (laps < 1) throw DomainError("laps must be at least 1");
  if (!(sample_period > 0.0)) throw DomainError("sample_period must be positive");
  if (!(perimeter() > 0.0)) throw DomainError("route has zero length");
}

double Route::perimeter() const {
  double total = 0.0;
  for (std::size_t i = 0; i < waypoints.size(); ++i)
    total += (waypoints[(i + 1) % waypoints.size()] - waypoints[i]).norm();
  return total;
}

Point3 Route::point_at(double s) const {
  const double p = perimeter();
  s = std::fmod(s, p);
  if (s < 0.0) s += p;
  for (std::size_t i = 0; i < waypoints.size(); ++i) {
    const Point3& a = waypoints[i];
    const Point3& b = waypoints[(i + 1) % waypoints.size()];
    const double len = (b - a).norm();
    if (s <= len && len > 0.0) return a + (b - a) * (s / len);
    s -= len;
  }
  return waypoints.front();
}

RouteTrack::RouteTrack(Route route, double step_m) : route_(std::move(route)), step_(step_m) {
  route_.validate();
  if (!(step_ >= 0.0) || !std::isfinite(step_)) throw DomainError("step must be finite and non-negative");
}

RouteTrack RouteTrack::for_samples(const Route& route, std::size_t n_samples) {
  route.validate();
  const double step = n_samples == 0 ? 0.0 : route.laps * route.perimeter() / static_cast<double>(n_samples);
  return RouteTrack(route, step);
}

Point3 RouteTrack::position(std::size_t interval) const {
  return route_.point_at(step_ * static_cast<double>(interval));
}

double path_loss_db(const RadioScenario& scenario, double distance_m) {
  if (!(distance_m > 0.0)) throw DomainError("path_loss_db: distance must be positive");
  return scenario.pl_ref + 10.0 * scenario.pl_exponent * std::log10(distance_m);
}

double noise_power_dbm(const RadioScenario& scenario) {
  return kThermalNoiseDbmPerHz + 10.0 * std::log10(scenario.bandwidth * 1e6) + scenario.noise_figure;
}

ShadowingProcess::ShadowingProcess(double sigma_db, double corr_dist_m, std::uint64_t seed)
    : sigma_(sigma_db), corr_dist_(corr_dist_m), rng_(seed, 0x5348) {
  if (!(sigma_ >= 0.0)) throw DomainError("shadowing sigma must be non-negative");
  if (sigma_ > 0.0 && !(corr_dist_ > 0.0)) throw DomainError("shadowing correlation distance must be positive");
}

double ShadowingProcess::sample(const Point3& position) {
  if (sigma_ == 0.0) return 0.0;
  if (!started_) {
    started_ = true;
    last_value_ = sigma_ * rng_.normal();
  } else {
    const double moved = (position - last_position_).norm();
    if (moved > 0.0) {
      const double rho = std::exp(-moved / corr_dist_);
      last_value_ = rho * last_value_ + std::sqrt(1.0 - rho * rho) * sigma_ * rng_.normal();
    }
  }
  last_position_ = position;
  return last_value_;
}

double mean_sinr_db(const RadioScenario& scenario, const Point3& position) {
  return mean_rx_power_dbm(scenario, position) - noise_plus_interference_dbm(scenario);
}

double sinr_db(const RadioScenario& scenario, const Point3& position, ShadowingProcess& shadow) {
  const double mean = mean_sinr_db(scenario, position);
  return mean - shadow.sample(position);
}

double throughput_scale(const RadioScenario& scenario) {
  return scenario.tput_max / std::log2(1.0 + db2pow(scenario.sinr_sat));
}

double throughput_mbps(const RadioScenario& scenario, double sinr) {
  if (sinr >= scenario.sinr_sat) return scenario.tput_max;
  return std::min(scenario.tput_max, throughput_scale(scenario) * std::log2(1.0 + db2pow(sinr)));
}

Trace synthesize_trace(const RadioScenario& scenario, const Route& route, std::size_t n_samples,
                       std::uint64_t seed) {
  scenario.validate();
  Trace trace;
  if (n_samples == 0) return trace;
  const RouteTrack track = RouteTrack::for_samples(route, n_samples);

  // Shadowing is a property of the place, not of the pass: one correlated
  // realization along the loop, sampled on a 1 m grid and reused every lap.
  const double perimeter = route.perimeter();
  const auto grid_points = static_cast<std::size_t>(std::ceil(perimeter / kShadowGridM));
  const double grid = perimeter / static_cast<double>(grid_points);
  ShadowingProcess shadow(scenario.shadow_sigma, scenario.shadow_corr_dist, seed);
  std::vector<double> shadow_map(grid_points + 1);
  for (std::size_t k = 0; k <= grid_points; ++k) shadow_map[k] = shadow.sample(route.point_at(grid * static_cast<double>(k)));
  const auto shadow_at = [&](std::size_t interval) {
    double s = std::fmod(track.step() * static_cast<double>(interval), perimeter) / grid;
    const auto k = std::min(static_cast<std::size_t>(s), grid_points - 1);
    const double frac = s - static_cast<double>(k);
    return (1.0 - frac) * shadow_map[k] + frac * shadow_map[k + 1];
  };

  Rng jitter(seed, 0x4a49);
  Rng report(seed, 0x5250);
  const double rsrp_norm_db = 10.0 * std::log10(scenario.bandwidth * 1e6 / kSubcarrierSpacingHz);
  const auto clip = [&](double v) { return std::clamp(v, 0.0, scenario.tput_max); };

  trace.reserve(n_samples);
  for (std::size_t i = 0; i < n_samples; ++i) {
    MeasurementSample s;
    s.t = track.time(i);
    s.position = track.position(i);
    s.speed = track.speed();
    const double shadow_db = shadow_at(i);
    const double true_sinr = mean_sinr_db(scenario, s.position) - shadow_db;
    s.sinr = true_sinr + scenario.sinr_meas_sigma * report.normal();
    const double rx = mean_rx_power_dbm(scenario, s.position) - shadow_db;
    for (int k = 0; k < kSectorCount; ++k)
      s.rsrp[k] = rx + sector_gain_db(scenario, s.position, k) - rsrp_norm_db;
    s.ul_tput = clip(throughput_mbps(scenario, true_sinr) + kJitterStdMbps * jitter.normal());
    s.dl_tput = clip(throughput_mbps(scenario, true_sinr + kDownlinkSinrOffsetDb) +
                     kJitterStdMbps * jitter.normal());
    trace.push_back(s);
  }
  return trace;
}

RadioScenario default_scenario() {
  RadioScenario s;
  // tx_power and pl_ref tuned so a 3100-sample trace averages ~34 Mbps
  // uplink with ~86% of samples above 35 Mbps.
  s.tx_power = 23.0;
  s.pl_ref = 42.0;
  s.blockages = {
      {Eigen::Vector2d(150.0, -20.0), 76.0, 33.0},
      {Eigen::Vector2d(610.0, 200.0), 50.0, 33.0},
  };
  return s;
}

Route default_route() {
  Route r;
  r.waypoints = {Point3(0.0, 0.0, 1.5), Point3(600.0, 0.0, 2.5), Point3(600.0, 300.0, 3.5),
                 Point3(0.0, 300.0, 2.5)};
  r.laps = 10;
  r.sample_period = 1.0;
  return r;
}

RadioScenario scenario_from_json(const std::string& text) {
  const json j = parse_document(text);
  reject_unknown(j,
                 {"bs_position", "carrier_freq", "bandwidth", "bs_antenna_gain", "ue_antenna_gain",
                  "ue_height", "tx_power", "noise_figure", "pl_ref", "pl_exponent", "shadow_sigma",
                  "shadow_corr_dist", "sinr_meas_sigma", "interference_floor", "tput_max", "sinr_sat", "blockages"},
                 "scenario");
  RadioScenario s = default_scenario();
  const std::pair<const char*, double*> scalars[] = {
      {"carrier_freq", &s.carrier_freq},       {"bandwidth", &s.bandwidth},
      {"bs_antenna_gain", &s.bs_antenna_gain}, {"ue_antenna_gain", &s.ue_antenna_gain},
      {"ue_height", &s.ue_height},             {"tx_power", &s.tx_power},
      {"noise_figure", &s.noise_figure},       {"pl_ref", &s.pl_ref},
      {"pl_exponent", &s.pl_exponent},         {"shadow_sigma", &s.shadow_sigma},
      {"shadow_corr_dist", &s.shadow_corr_dist}, {"tput_max", &s.tput_max},
      {"sinr_sat", &s.sinr_sat},               {"sinr_meas_sigma", &s.sinr_meas_sigma}};
  for (const auto& [key, dst] : scalars) {
    if (j.contains(key)) *dst = number(j.at(key), key);
  }
  if (j.contains("bs_position")) s.bs_position = point_from_json(j.at("bs_position"), "bs_position");
  if (j.contains("interference_floor")) {
    const auto& v = j.at("interference_floor");
    s.interference_floor = v.is_null() ? -std::numeric_limits<double>::infinity()
                                       : number(v, "interference_floor");
  }
  if (j.contains("blockages")) {
    const auto& arr = j.at("blockages");
    if (!arr.is_array()) throw ParseError("'blockages' must be an array");
    s.blockages.clear();
    for (const auto& b : arr) {
      reject_unknown(b, {"center", "radius", "loss_db"}, "blockage");
      Blockage blk;
      const auto& c = b.at("center");
      if (!c.is_array() || c.size() != 2) throw ParseError("blockage 'center' must be [x, y]");
      blk.center = Eigen::Vector2d(number(c[0], "center"), number(c[1], "center"));
      blk.radius = number(b.at("radius"), "radius");
      blk.loss_db = number(b.at("loss_db"), "loss_db");
      s.blockages.push_back(blk);
    }
  }
  try {
    s.validate();
  } catch (const DomainError& e) {
    throw ParseError(e.what());
  }
  return s;
}

Route route_from_json(const std::string& text) {
  const json j = parse_document(text);
  reject_unknown(j, {"waypoints", "laps", "sample_period"}, "route");
  Route r = default_route();
  if (j.contains("waypoints")) {
    const auto& arr = j.at("waypoints");
    if (!arr.is_array()) throw ParseError("'waypoints' must be an array");
    r.waypoints.clear();
    for (const auto& p : arr) r.waypoints.push_back(point_from_json(p, "waypoints"));
  }
  if (j.contains("laps")) {
    if (!j.at("laps").is_number_integer()) throw ParseError("'laps' must be an integer");
    r.laps = j.at("laps").get<int>();
  }
  if (j.contains("sample_period")) r.sample_period = number(j.at("sample_period"), "sample_period");
  try {
    r.validate();
  } catch (const DomainError& e) {
    throw ParseError(e.what());
  }
  return r;
}

RadioScenario load_scenario(const std::string& path) { return scenario_from_json(read_file(path)); }
Route load_route(const std::string& path) { return route_from_json(read_file(path)); }

std::string scenario_to_json(const RadioScenario& s) {
  json j;
  j["bs_position"] = point_to_json(s.bs_position);
  j["carrier_freq"] = s.carrier_freq;
  j["bandwidth"] = s.bandwidth;
  j["bs_antenna_gain"] = s.bs_antenna_gain;
  j["ue_antenna_gain"] = s.ue_antenna_gain;
  j["ue_height"] = s.ue_height;
  j["tx_power"] = s.tx_power;
  j["noise_figure"] = s.noise_figure;
  j["pl_ref"] = s.pl_ref;
  j["pl_exponent"] = s.pl_exponent;
  j["shadow_sigma"] = s.shadow_sigma;
  j["shadow_corr_dist"] = s.shadow_corr_dist;
  j["sinr_meas_sigma"] = s.sinr_meas_sigma;
  if (std::isfinite(s.interference_floor))
    j["interference_floor"] = s.interference_floor;
  else
    j["interference_floor"] = nullptr;
  j["tput_max"] = s.tput_max;
  j["sinr_sat"] = s.sinr_sat;
  j["blockages"] = json::array();
  for (const auto& b : s.blockages)
    j["blockages"].push_back({{"center", {b.center.x(), b.center.y()}}, {"radius", b.radius}, {"loss_db", b.loss_db}});
  return j.dump(2);
}

std::string route_to_json(const Route& r) {
  json j;
  j["waypoints"] = json::array();
  for (const auto& p : r.waypoints) j["waypoints"].push_back(point_to_json(p));
  j["laps"] = r.laps;
  j["sample_period"] = r.sample_period;
  return j.dump(2);
}

}  // namespace pqos
