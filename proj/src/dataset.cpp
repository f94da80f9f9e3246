#include "pqos/dataset.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include <fmt/format.h>

#include "pqos/error.hpp"
#include "pqos/rng.hpp"

namespace pqos {

namespace {

constexpr std::array<std::string_view, 11> kTraceColumns = {
    "t_s",       "x_m",       "y_m",       "z_m",          "speed_mps",   "sinr_db",
    "rsrp1_dbm", "rsrp2_dbm", "rsrp3_dbm", "ul_tput_mbps", "dl_tput_mbps"};

std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> cells;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(',', start);
    cells.push_back(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return cells;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

double parse_cell(std::string_view cell, std::size_t line, std::string_view column) {
  cell = trim(cell);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
  if (cell.empty() || ec != std::errc() || ptr != cell.data() + cell.size() || !std::isfinite(v))
    throw ParseError(fmt::format("non-numeric value '{}' in column '{}'", cell, column), line);
  return v;
}

}  // namespace

Eigen::Index feature_count(FeatureSet fs) {
  switch (fs) {
    case FeatureSet::LocationOnly: return 3;
    case FeatureSet::SinrOnly: return 1;
    case FeatureSet::SinrAndLocation: return 4;
  }
  return 0;
}

bool has_sinr(FeatureSet fs) { return fs != FeatureSet::LocationOnly; }

std::string_view to_string(FeatureSet fs) {
  switch (fs) {
    case FeatureSet::LocationOnly: return "location";
    case FeatureSet::SinrOnly: return "sinr";
    case FeatureSet::SinrAndLocation: return "sinr_location";
  }
  return "?";
}

FeatureSet feature_set_from_string(std::string_view name) {
  for (auto fs : kAllFeatureSets)
    if (to_string(fs) == name) return fs;
  throw DomainError(fmt::format("unknown feature set '{}'", name));
}

Eigen::VectorXd feature_row(FeatureSet fs, double sinr, const Point3& p) {
  Eigen::VectorXd row(feature_count(fs));
  switch (fs) {
    case FeatureSet::LocationOnly: row << p.x(), p.y(), p.z(); break;
    case FeatureSet::SinrOnly: row << sinr; break;
    case FeatureSet::SinrAndLocation: row << sinr, p.x(), p.y(), p.z(); break;
  }
  return row;
}

void Dataset::validate() const {
  if (features.rows() != labels.size()) throw DomainError("feature rows and label count differ");
  if (features.cols() != feature_count(feature_set)) throw DomainError("feature column count does not match feature set");
  if (!features.allFinite() || !labels.allFinite()) throw DomainError("dataset contains non-finite values");
}

NormStats NormStats::identity(Eigen::Index cols) {
  return {Eigen::VectorXd::Zero(cols), Eigen::VectorXd::Ones(cols)};
}

void write_trace_csv(const Trace& trace, std::ostream& out) {
  for (std::size_t i = 0; i < kTraceColumns.size(); ++i) out << (i ? "," : "") << kTraceColumns[i];
  out << '\n';
  for (const auto& s : trace) {
    out << fmt::format("{:.6f},{:.6f},{:.6f},{:.6f},{:.6f},{:.6f},{:.6f},{:.6f},{:.6f},{:.6f},{:.6f}\n", s.t,
                       s.position.x(), s.position.y(), s.position.z(), s.speed, s.sinr, s.rsrp[0], s.rsrp[1],
                       s.rsrp[2], s.ul_tput, s.dl_tput);
  }
}

Trace read_trace_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || trim(line).empty()) throw ParseError("empty file: missing header", 1);
  const auto header = split_commas(trim(line));
  std::array<std::size_t, kTraceColumns.size()> index{};
  for (std::size_t c = 0; c < kTraceColumns.size(); ++c) {
    const auto it = std::find_if(header.begin(), header.end(), [&](std::string_view h) { return trim(h) == kTraceColumns[c]; });
    if (it == header.end()) throw ParseError(fmt::format("missing column '{}'", kTraceColumns[c]), 1);
    index[c] = static_cast<std::size_t>(it - header.begin());
  }

  Trace trace;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto cells = split_commas(line);
    if (cells.size() != header.size())
      throw ParseError(fmt::format("expected {} cells, found {}", header.size(), cells.size()), line_no);
    std::array<double, kTraceColumns.size()> v{};
    for (std::size_t c = 0; c < kTraceColumns.size(); ++c) v[c] = parse_cell(cells[index[c]], line_no, kTraceColumns[c]);
    MeasurementSample s;
    s.t = v[0];
    s.position = Point3(v[1], v[2], v[3]);
    s.speed = v[4];
    s.sinr = v[5];
    s.rsrp = {v[6], v[7], v[8]};
    s.ul_tput = v[9];
    s.dl_tput = v[10];
    trace.push_back(s);
  }
  return trace;
}

void save_trace_csv(const Trace& trace, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  write_trace_csv(trace, out);
  if (!out) throw std::runtime_error("write failed for '" + path + "'");
}

Trace load_trace_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open '" + path + "'");
  return read_trace_csv(in);
}

Dataset extract_features(const Trace& trace, FeatureSet fs) {
  if (trace.empty()) throw DomainError("extract_features: empty trace");
  Dataset d;
  d.feature_set = fs;
  const auto n = static_cast<Eigen::Index>(trace.size());
  d.features.resize(n, feature_count(fs));
  d.labels.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& s = trace[static_cast<std::size_t>(i)];
    d.features.row(i) = feature_row(fs, s.sinr, s.position).transpose();
    d.labels(i) = s.ul_tput;
  }
  return d;
}

namespace {

Dataset take_rows(const Dataset& d, const std::vector<Eigen::Index>& rows) {
  Dataset out;
  out.feature_set = d.feature_set;
  out.features.resize(static_cast<Eigen::Index>(rows.size()), d.features.cols());
  out.labels.resize(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out.features.row(static_cast<Eigen::Index>(i)) = d.features.row(rows[i]);
    out.labels(static_cast<Eigen::Index>(i)) = d.labels(rows[i]);
  }
  return out;
}

std::uint64_t fnv1a(std::uint64_t hash, std::uint64_t value) {
  for (int b = 0; b < 8; ++b) {
    hash ^= (value >> (8 * b)) & 0xffu;
    hash *= 0x100000001b3ull;
  }
  return hash;
}

}  // namespace

Split split(const Dataset& dataset, double train_fraction, std::uint64_t seed) {
  const Eigen::Index n = dataset.rows();
  if (n < 2) throw DomainError("split: need at least 2 rows");
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) throw DomainError("split: train_fraction must be in (0, 1)");

  std::vector<Eigen::Index> perm(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), Eigen::Index{0});
  Rng rng(seed, 0x5350);
  rng.shuffle(perm.begin(), perm.end());

  auto n_train = static_cast<Eigen::Index>(std::llround(train_fraction * static_cast<double>(n)));
  n_train = std::clamp<Eigen::Index>(n_train, 1, n - 1);

  Split s;
  s.train_rows.assign(perm.begin(), perm.begin() + n_train);
  s.test_rows.assign(perm.begin() + n_train, perm.end());
  s.train.data = take_rows(dataset, s.train_rows);
  s.test.data = take_rows(dataset, s.test_rows);

  std::uint64_t h = 0xcbf29ce484222325ull;
  for (auto r : s.train_rows) h = fnv1a(h, static_cast<std::uint64_t>(r));
  h = fnv1a(h, ~0ull);
  for (auto r : s.test_rows) h = fnv1a(h, static_cast<std::uint64_t>(r));
  s.checksum = h;
  return s;
}

NormStats fit_norm(const TrainSet& train) {
  const auto& x = train.data.features;
  if (x.rows() == 0) throw DomainError("fit_norm: empty dataset");
  NormStats st;
  st.mean = x.colwise().mean().transpose();
  const Eigen::MatrixXd centered = x.rowwise() - st.mean.transpose();
  st.std = (centered.array().square().colwise().sum() / static_cast<double>(x.rows())).sqrt().transpose();
  st.std = st.std.cwiseMax(NormStats::kStdFloor);
  // Constant columns: centered values are exactly 0 so they map to 0 regardless of the floor.
  return st;
}

Eigen::MatrixXd normalize_features(const Eigen::MatrixXd& features, const NormStats& stats) {
  if (features.cols() != stats.mean.size()) throw DomainError("normalize: column count mismatch");
  return (features.rowwise() - stats.mean.transpose()).array().rowwise() / stats.std.transpose().array();
}

Dataset apply_norm(const Dataset& dataset, const NormStats& stats) {
  Dataset out = dataset;
  out.features = normalize_features(dataset.features, stats);
  return out;
}

Dataset inject_sinr_noise(const Dataset& dataset, double rmse_db, std::uint64_t seed) {
  if (!has_sinr(dataset.feature_set)) throw DomainError("inject_sinr_noise: feature set has no SINR column");
  if (!(rmse_db >= 0.0)) throw DomainError("inject_sinr_noise: rmse must be non-negative");
  Dataset out = dataset;
  if (rmse_db == 0.0) return out;
  Rng rng(seed, 0x4e4f);
  for (Eigen::Index i = 0; i < out.rows(); ++i) out.features(i, 0) += rmse_db * rng.normal();
  return out;
}

}  // namespace pqos
