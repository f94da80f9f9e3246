#include <cmath>
#include <limits>

#include "doctest.h"
#include "pqos/error.hpp"
#include "pqos/scenario.hpp"

using namespace pqos;

namespace {

RadioScenario plain() {
  RadioScenario s;
  s.shadow_sigma = 0.0;
  s.blockages.clear();
  return s;
}

}  // namespace

TEST_CASE("path loss: reference distance and analytic values") {
  RadioScenario s = plain();
  CHECK(path_loss_db(s, 1.0) == doctest::Approx(s.pl_ref).epsilon(1e-15));

  s.pl_exponent = 2.0;
  CHECK(path_loss_db(s, 20.0) - path_loss_db(s, 10.0) == doctest::Approx(6.0206).epsilon(1e-5));

  s.pl_ref = 40.0;
  s.pl_exponent = 3.0;
  CHECK(path_loss_db(s, 100.0) == doctest::Approx(100.0).epsilon(1e-12));
}

TEST_CASE("path loss: doubling adds 10 n log10 2 and is monotone") {
  RadioScenario s = plain();
  Rng rng(11);
  for (int i = 0; i < 200; ++i) {
    const double d = 0.01 + 5000.0 * rng.uniform();
    CHECK(path_loss_db(s, 2 * d) - path_loss_db(s, d) ==
          doctest::Approx(10 * s.pl_exponent * std::log10(2.0)).epsilon(1e-9));
    CHECK(path_loss_db(s, d * 1.01) >= path_loss_db(s, d));
  }
}

TEST_CASE("path loss: non-positive distance is a domain error") {
  const RadioScenario s = plain();
  CHECK_THROWS_AS(path_loss_db(s, 0.0), DomainError);
  CHECK_THROWS_AS(path_loss_db(s, -3.0), DomainError);
}

TEST_CASE("noise power for 40 MHz and NF 9 dB") {
  RadioScenario s = plain();
  s.noise_figure = 9.0;
  CHECK(noise_power_dbm(s) == doctest::Approx(-88.98).epsilon(1e-4));
}

TEST_CASE("sinr equals snr without interference or shadowing") {
  RadioScenario s = plain();
  s.interference_floor = -std::numeric_limits<double>::infinity();
  ShadowingProcess shadow(0.0, 50.0, 1);
  const Point3 p(120.0, 40.0, 1.5);
  const double d = (p - s.bs_position).norm();
  // Hand evaluation of the link budget.
  const double snr = s.tx_power + s.bs_antenna_gain + s.ue_antenna_gain - (s.pl_ref + 10 * s.pl_exponent * std::log10(d)) -
                     (-174.0 + 10 * std::log10(s.bandwidth * 1e6) + s.noise_figure);
  CHECK(sinr_db(s, p, shadow) == doctest::Approx(snr).epsilon(1e-12));
}

TEST_CASE("sinr with interference follows the power sum") {
  RadioScenario s = plain();
  ShadowingProcess shadow(0.0, 50.0, 1);
  const Point3 p(10.0, 10.0, 1.5);
  const double d = (p - s.bs_position).norm();
  const double rx = s.tx_power + s.bs_antenna_gain + s.ue_antenna_gain - s.pl_ref - 10 * s.pl_exponent * std::log10(d);
  const double n_mw = std::pow(10.0, (-174.0 + 10 * std::log10(40e6) + s.noise_figure) / 10);
  const double i_mw = std::pow(10.0, s.interference_floor / 10);
  CHECK(sinr_db(s, p, shadow) == doctest::Approx(rx - 10 * std::log10(n_mw + i_mw)).epsilon(1e-12));
}

TEST_CASE("sinr: deterministic at one position, error at the base station") {
  const RadioScenario s = plain();
  ShadowingProcess shadow(0.0, 50.0, 3);
  const Point3 p(55.0, 5.0, 1.5);
  CHECK(sinr_db(s, p, shadow) == sinr_db(s, p, shadow));
  CHECK_THROWS_AS(sinr_db(s, s.bs_position, shadow), DomainError);
}

TEST_CASE("shadowing: same position repeats, empirical std matches sigma") {
  ShadowingProcess a(4.0, 50.0, 9);
  const Point3 p(1.0, 2.0, 1.5);
  const double v = a.sample(p);
  CHECK(a.sample(p) == v);

  ShadowingProcess shadow(4.0, 50.0, 21);
  const int n = 20000;
  double sum = 0, sum2 = 0;
  for (int i = 0; i < n; ++i) {
    const double x = shadow.sample(Point3(50.0 * i, 0.0, 1.5));
    sum += x;
    sum2 += x * x;
  }
  const double mean = sum / n;
  const double sd = std::sqrt(sum2 / n - mean * mean);
  CHECK(std::abs(sd - 4.0) < 0.05 * 4.0);
  CHECK(std::abs(mean) < 0.2);
}

TEST_CASE("shadowing: lag correlation follows exp(-d / corr)") {
  ShadowingProcess shadow(1.0, 50.0, 5);
  const int n = 40000;
  std::vector<double> x(n);
  for (int i = 0; i < n; ++i) x[i] = shadow.sample(Point3(25.0 * i, 0.0, 0.0));
  double c = 0, v = 0;
  for (int i = 0; i + 1 < n; ++i) c += x[i] * x[i + 1];
  for (double xi : x) v += xi * xi;
  CHECK(c / v == doctest::Approx(std::exp(-0.5)).epsilon(0.05));
}

TEST_CASE("throughput calibration") {
  const RadioScenario s = plain();
  CHECK(throughput_mbps(s, 10.0) == 40.0);
  CHECK(throughput_mbps(s, -40.0) < 0.02);
  CHECK(throughput_scale(s) == doctest::Approx(40.0 / std::log2(11.0)).epsilon(1e-12));
  CHECK(throughput_scale(s) == doctest::Approx(11.563).epsilon(1e-4));
  CHECK(throughput_mbps(s, 0.0) == doctest::Approx(11.563).epsilon(1e-4));
}

TEST_CASE("throughput: monotone on a grid and exactly capped above saturation") {
  const RadioScenario s = plain();
  double prev = -1.0;
  for (double sinr = -60.0; sinr <= 60.0; sinr += 0.01) {
    const double t = throughput_mbps(s, sinr);
    CHECK(t >= prev);
    if (sinr >= s.sinr_sat) CHECK(t == s.tput_max);
    prev = t;
  }
}

TEST_CASE("route geometry") {
  const Route r = default_route();
  CHECK(r.perimeter() == doctest::Approx(1800.0).epsilon(1e-3));
  CHECK((r.point_at(0.0) - r.waypoints[0]).norm() < 1e-12);
  CHECK((r.point_at(r.perimeter()) - r.waypoints[0]).norm() < 1e-9);
  CHECK(r.point_at(300.0).x() == doctest::Approx(300.0).epsilon(1e-2));

  Route bad = r;
  bad.waypoints.resize(1);
  CHECK_THROWS_AS(bad.validate(), DomainError);
  bad = r;
  bad.laps = 0;
  CHECK_THROWS_AS(bad.validate(), DomainError);
  bad = r;
  bad.sample_period = 0.0;
  CHECK_THROWS_AS(bad.validate(), DomainError);
}

TEST_CASE("scenario invariants") {
  RadioScenario s = default_scenario();
  CHECK_NOTHROW(s.validate());
  CHECK(s.carrier_freq == 3.41);
  CHECK(s.bandwidth == 40.0);
  CHECK(s.bs_position.z() == 21.0);
  CHECK(s.bs_antenna_gain == 15.5);
  CHECK(s.ue_antenna_gain == 5.0);
  CHECK(s.ue_height == 1.5);
  CHECK(s.tput_max == 40.0);
  CHECK(s.sinr_sat == 10.0);

  auto broken = [&](auto mutate) {
    RadioScenario b = default_scenario();
    mutate(b);
    CHECK_THROWS_AS(b.validate(), DomainError);
  };
  broken([](RadioScenario& b) { b.bandwidth = 0.0; });
  broken([](RadioScenario& b) { b.tput_max = 0.0; });
  broken([](RadioScenario& b) { b.shadow_sigma = -1.0; });
  broken([](RadioScenario& b) { b.pl_exponent = 1.9; });
  broken([](RadioScenario& b) { b.sinr_sat = std::numeric_limits<double>::infinity(); });
}

TEST_CASE("synthesize_trace: empty, deterministic, seed-dependent") {
  const RadioScenario s = default_scenario();
  const Route r = default_route();
  CHECK(synthesize_trace(s, r, 0, 1).empty());

  const Trace a = synthesize_trace(s, r, 500, 7);
  const Trace b = synthesize_trace(s, r, 500, 7);
  const Trace c = synthesize_trace(s, r, 500, 8);
  REQUIRE(a.size() == 500);
  bool differs = false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].t == b[i].t);
    CHECK(a[i].position == b[i].position);
    CHECK(a[i].sinr == b[i].sinr);
    CHECK(a[i].rsrp == b[i].rsrp);
    CHECK(a[i].ul_tput == b[i].ul_tput);
    CHECK(a[i].dl_tput == b[i].dl_tput);
    differs = differs || a[i].sinr != c[i].sinr;
  }
  CHECK(differs);
}

TEST_CASE("synthesize_trace: sample invariants and uplink/downlink correlation") {
  const RadioScenario s = default_scenario();
  const Trace tr = synthesize_trace(s, default_route(), 3100, 3);
  double su = 0, sd = 0, suu = 0, sdd = 0, sud = 0;
  for (const auto& m : tr) {
    CHECK(m.ul_tput >= 0.0);
    CHECK(m.ul_tput <= s.tput_max);
    CHECK(m.speed >= 0.0);
    CHECK(m.rsrp.size() == 3);
    su += m.ul_tput;
    sd += m.dl_tput;
    suu += m.ul_tput * m.ul_tput;
    sdd += m.dl_tput * m.dl_tput;
    sud += m.ul_tput * m.dl_tput;
  }
  const double n = static_cast<double>(tr.size());
  const double cov = sud / n - su * sd / (n * n);
  const double corr = cov / std::sqrt((suu / n - su * su / (n * n)) * (sdd / n - sd * sd / (n * n)));
  CHECK(corr > 0.9);
  CHECK(tr[1].t - tr[0].t == doctest::Approx(1.0));
}

TEST_CASE("scenario and route JSON round trip, unknown keys rejected") {
  RadioScenario s = default_scenario();
  s.interference_floor = -std::numeric_limits<double>::infinity();
  const RadioScenario back = scenario_from_json(scenario_to_json(s));
  CHECK(back.bs_position == s.bs_position);
  CHECK(back.tx_power == s.tx_power);
  CHECK(std::isinf(back.interference_floor));
  REQUIRE(back.blockages.size() == s.blockages.size());
  CHECK(back.blockages[0].center == s.blockages[0].center);
  CHECK(back.blockages[0].loss_db == s.blockages[0].loss_db);

  const Route r = route_from_json(route_to_json(default_route()));
  CHECK(r.waypoints == default_route().waypoints);
  CHECK(r.laps == 10);

  CHECK_THROWS_AS(scenario_from_json(R"({"bandwidth": 20, "colour": 3})"), ParseError);
  CHECK_THROWS_AS(route_from_json(R"({"waypoints": [[0,0,0],[1,0,0]], "speed": 3})"), ParseError);
  CHECK(scenario_from_json(R"({"bandwidth": 20})").bandwidth == 20.0);
}
