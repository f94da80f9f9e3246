#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "pqos/scenario.hpp"

namespace pqos {

enum class FeatureSet { LocationOnly, SinrOnly, SinrAndLocation };

inline constexpr FeatureSet kAllFeatureSets[] = {FeatureSet::LocationOnly, FeatureSet::SinrOnly,
                                                 FeatureSet::SinrAndLocation};

/// Column count: 3 for (x, y, z), 1 for (sinr), 4 for (sinr, x, y, z).
Eigen::Index feature_count(FeatureSet fs);
bool has_sinr(FeatureSet fs);
/// "location", "sinr", "sinr_location".
std::string_view to_string(FeatureSet fs);
FeatureSet feature_set_from_string(std::string_view name);

/// Feature row for one observation, columns ordered as in extract_features.
Eigen::VectorXd feature_row(FeatureSet fs, double sinr_db, const Point3& position);

struct Dataset {
  Eigen::MatrixXd features;  // n_rows x feature_count(feature_set)
  Eigen::VectorXd labels;    // uplink throughput, Mbps
  FeatureSet feature_set = FeatureSet::SinrOnly;

  Eigen::Index rows() const { return labels.size(); }
  /// Throws DomainError on shape mismatch or non-finite entries.
  void validate() const;
};

/// The two halves of a split. Distinct types so that normalization statistics
/// can only be fitted on training data.
struct TrainSet {
  Dataset data;
};
struct TestSet {
  Dataset data;
};

struct Split {
  TrainSet train;
  TestSet test;
  std::vector<Eigen::Index> train_rows;  // row indices into the source dataset
  std::vector<Eigen::Index> test_rows;
  std::uint64_t checksum = 0;            // FNV-1a over the row assignment
};

struct NormStats {
  Eigen::VectorXd mean;
  Eigen::VectorXd std;  // population std, floored at kStdFloor

  static constexpr double kStdFloor = 1e-8;
  static NormStats identity(Eigen::Index cols);
};

void write_trace_csv(const Trace& trace, std::ostream& out);
Trace read_trace_csv(std::istream& in);
void save_trace_csv(const Trace& trace, const std::string& path);
Trace load_trace_csv(const std::string& path);

Dataset extract_features(const Trace& trace, FeatureSet fs);

/// Uniform random partition; |train| = round(train_fraction * n).
Split split(const Dataset& dataset, double train_fraction, std::uint64_t seed);

NormStats fit_norm(const TrainSet& train);
Dataset apply_norm(const Dataset& dataset, const NormStats& stats);
/// Z-scores a feature matrix (rows = samples).
Eigen::MatrixXd normalize_features(const Eigen::MatrixXd& features, const NormStats& stats);

/// Adds N(0, rmse^2) to the SINR column only.
Dataset inject_sinr_noise(const Dataset& dataset, double rmse_db, std::uint64_t seed);

}  // namespace pqos
