#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "doctest.h"
#include "pqos/dataset.hpp"
#include "pqos/error.hpp"
#include "support.hpp"

using namespace pqos;

namespace {

Trace small_trace(std::size_t n, std::uint64_t seed = 1) {
  return synthesize_trace(default_scenario(), default_route(), n, seed);
}

Dataset column(std::initializer_list<double> xs, FeatureSet fs = FeatureSet::SinrOnly) {
  Dataset d;
  d.feature_set = fs;
  d.features.resize(static_cast<Eigen::Index>(xs.size()), 1);
  d.labels.resize(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) {
    d.features(i, 0) = x;
    d.labels(i) = 10.0 * static_cast<double>(i);
    ++i;
  }
  return d;
}

const std::string kHeader =
    "t_s,x_m,y_m,z_m,speed_mps,sinr_db,rsrp1_dbm,rsrp2_dbm,rsrp3_dbm,ul_tput_mbps,dl_tput_mbps\n";

}  // namespace

TEST_CASE("feature set shapes and names") {
  CHECK(feature_count(FeatureSet::LocationOnly) == 3);
  CHECK(feature_count(FeatureSet::SinrOnly) == 1);
  CHECK(feature_count(FeatureSet::SinrAndLocation) == 4);
  for (FeatureSet fs : kAllFeatureSets) CHECK(feature_set_from_string(to_string(fs)) == fs);
  CHECK_THROWS_AS(feature_set_from_string("rsrp"), DomainError);
}

TEST_CASE("trace CSV: 3100-sample round trip within 1e-6") {
  const Trace tr = small_trace(3100);
  const auto dir = test::scratch_dir("csv");
  const auto path = (dir / "trace.csv").string();
  save_trace_csv(tr, path);
  const Trace back = load_trace_csv(path);
  REQUIRE(back.size() == tr.size());
  for (std::size_t i = 0; i < tr.size(); ++i) {
    CHECK(std::abs(back[i].t - tr[i].t) <= 1e-6);
    CHECK((back[i].position - tr[i].position).cwiseAbs().maxCoeff() <= 1e-6);
    CHECK(std::abs(back[i].speed - tr[i].speed) <= 1e-6);
    CHECK(std::abs(back[i].sinr - tr[i].sinr) <= 1e-6);
    for (int k = 0; k < kSectorCount; ++k) CHECK(std::abs(back[i].rsrp[k] - tr[i].rsrp[k]) <= 1e-6);
    CHECK(std::abs(back[i].ul_tput - tr[i].ul_tput) <= 1e-6);
    CHECK(std::abs(back[i].dl_tput - tr[i].dl_tput) <= 1e-6);
  }
  std::filesystem::remove_all(dir);
}

TEST_CASE("trace CSV: header-only is empty, column order is free") {
  std::istringstream header_only(kHeader);
  CHECK(read_trace_csv(header_only).empty());

  std::istringstream shuffled(
      "ul_tput_mbps,dl_tput_mbps,t_s,x_m,y_m,z_m,speed_mps,sinr_db,rsrp1_dbm,rsrp2_dbm,rsrp3_dbm\n"
      "12.5,13,0,1,2,3,4,5,6,7,8\n");
  const Trace t = read_trace_csv(shuffled);
  REQUIRE(t.size() == 1);
  CHECK(t[0].ul_tput == 12.5);
  CHECK(t[0].sinr == 5.0);
  CHECK(t[0].position == Point3(1, 2, 3));
}

TEST_CASE("trace CSV: errors name the column and line") {
  std::istringstream missing("t_s,x_m,y_m,z_m,speed_mps,rsrp1_dbm,rsrp2_dbm,rsrp3_dbm,ul_tput_mbps,dl_tput_mbps\n");
  try {
    read_trace_csv(missing);
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(std::string(e.what()).find("sinr_db") != std::string::npos);
    CHECK(e.line() == 1);
  }

  std::istringstream bad_cell(kHeader + "0,1,2,3,4,5,6,7,8,9,10\n1,1,2,3,4,abc,6,7,8,9,10\n");
  try {
    read_trace_csv(bad_cell);
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line() == 3);
    CHECK(std::string(e.what()).find("line 3") != std::string::npos);
  }

  std::istringstream empty("");
  CHECK_THROWS_AS(read_trace_csv(empty), ParseError);

  std::istringstream short_row(kHeader + "0,1,2\n");
  CHECK_THROWS_AS(read_trace_csv(short_row), ParseError);
}

TEST_CASE("extract_features: projections and label invariance") {
  const Trace tr = small_trace(10);
  const Dataset s = extract_features(tr, FeatureSet::SinrOnly);
  const Dataset l = extract_features(tr, FeatureSet::LocationOnly);
  const Dataset b = extract_features(tr, FeatureSet::SinrAndLocation);
  CHECK(s.features.rows() == 10);
  CHECK(s.features.cols() == 1);
  CHECK(b.features.cols() == 4);
  CHECK(b.features.col(0) == s.features.col(0));
  CHECK(b.features.rightCols(3) == l.features);
  for (std::size_t i = 0; i < tr.size(); ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    CHECK(s.features(r, 0) == tr[i].sinr);
    CHECK(l.features(r, 0) == tr[i].position.x());
    CHECK(s.labels(r) == tr[i].ul_tput);
  }
  CHECK(s.labels == l.labels);
  CHECK(l.labels == b.labels);
  CHECK_THROWS_AS(extract_features(Trace{}, FeatureSet::SinrOnly), DomainError);
}

TEST_CASE("split: sizes, determinism and partition") {
  const Dataset d = extract_features(small_trace(3100), FeatureSet::SinrOnly);
  const Split a = split(d, 0.9, 4);
  CHECK(a.train.data.rows() == 2790);
  CHECK(a.test.data.rows() == 310);

  const Split b = split(d, 0.9, 4);
  CHECK(a.train_rows == b.train_rows);
  CHECK(a.checksum == b.checksum);
  CHECK(split(d, 0.9, 5).checksum != a.checksum);

  std::vector<Eigen::Index> all = a.train_rows;
  all.insert(all.end(), a.test_rows.begin(), a.test_rows.end());
  std::sort(all.begin(), all.end());
  for (Eigen::Index i = 0; i < d.rows(); ++i) CHECK(all[static_cast<std::size_t>(i)] == i);

  std::vector<double> labels(d.labels.data(), d.labels.data() + d.rows());
  std::vector<double> parts(a.train.data.labels.data(), a.train.data.labels.data() + a.train.data.rows());
  parts.insert(parts.end(), a.test.data.labels.data(), a.test.data.labels.data() + a.test.data.rows());
  std::sort(labels.begin(), labels.end());
  std::sort(parts.begin(), parts.end());
  CHECK(labels == parts);

  const Split half = split(column({1, 2, 3, 4}), 0.5, 1);
  CHECK(half.train.data.rows() == 2);
  CHECK(half.test.data.rows() == 2);

  CHECK_THROWS_AS(split(column({1}), 0.5, 1), DomainError);
  CHECK_THROWS_AS(split(d, 0.0, 1), DomainError);
  CHECK_THROWS_AS(split(d, 1.0, 1), DomainError);
}

TEST_CASE("normalization: two-point, constant column, fitted stats") {
  const TrainSet two{column({2, 4})};
  const NormStats st = fit_norm(two);
  CHECK(st.mean(0) == 3.0);
  CHECK(st.std(0) == 1.0);
  const Dataset n = apply_norm(two.data, st);
  CHECK(n.features(0, 0) == -1.0);
  CHECK(n.features(1, 0) == 1.0);

  const TrainSet flat{column({5, 5, 5})};
  const NormStats fs = fit_norm(flat);
  CHECK(fs.std(0) == NormStats::kStdFloor);
  CHECK(apply_norm(flat.data, fs).features.cwiseAbs().maxCoeff() == 0.0);

  const Split sp = split(extract_features(small_trace(1000), FeatureSet::SinrAndLocation), 0.9, 2);
  const NormStats s = fit_norm(sp.train);
  const Dataset z = apply_norm(sp.train.data, s);
  for (Eigen::Index c = 0; c < z.features.cols(); ++c) {
    const auto col = z.features.col(c);
    const double mean = col.mean();
    CHECK(std::abs(mean) < 1e-9);
    CHECK(std::sqrt((col.array() - mean).square().mean()) == doctest::Approx(1.0).epsilon(1e-9));
  }
}

TEST_CASE("normalization is row-wise: permuting rows permutes the output") {
  const Dataset d = extract_features(small_trace(50), FeatureSet::SinrAndLocation);
  const NormStats s = fit_norm(TrainSet{d});
  Dataset rev = d;
  rev.features = d.features.colwise().reverse();
  const Eigen::MatrixXd a = apply_norm(d, s).features;
  const Eigen::MatrixXd b = apply_norm(rev, s).features;
  CHECK(a == b.colwise().reverse().eval());
}

TEST_CASE("inject_sinr_noise: zero identity, rmse, column isolation") {
  const Dataset d = extract_features(small_trace(3000), FeatureSet::SinrAndLocation);
  const Dataset same = inject_sinr_noise(d, 0.0, 5);
  CHECK(same.features == d.features);
  CHECK(same.labels == d.labels);

  const Dataset noisy = inject_sinr_noise(d, 4.0, 5);
  const double rmse = std::sqrt((noisy.features.col(0) - d.features.col(0)).array().square().mean());
  CHECK(std::abs(rmse - 4.0) < 0.4);
  CHECK(noisy.features.rightCols(3) == d.features.rightCols(3));
  CHECK(noisy.labels == d.labels);

  CHECK(inject_sinr_noise(d, 4.0, 5).features == noisy.features);
  CHECK_THROWS_AS(inject_sinr_noise(extract_features(small_trace(10), FeatureSet::LocationOnly), 1.0, 1), DomainError);
  CHECK_THROWS_AS(inject_sinr_noise(d, -1.0, 1), DomainError);
}

TEST_CASE("dataset validation rejects non-finite and mismatched shapes") {
  Dataset d = column({1, 2, 3});
  CHECK_NOTHROW(d.validate());
  d.features(1, 0) = std::nan("");
  CHECK_THROWS_AS(d.validate(), DomainError);
  Dataset e = column({1, 2, 3});
  e.labels.resize(2);
  CHECK_THROWS_AS(e.validate(), DomainError);
}
