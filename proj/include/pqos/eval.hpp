#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "pqos/predict.hpp"

namespace pqos {

enum class ModelKind { Linear, Mlp };

std::string_view to_string(ModelKind kind);
ModelKind model_kind_from_string(std::string_view name);

/// Trailing moving average; the first window-1 entries average what is available.
std::vector<double> smooth(const std::vector<double>& curve, int window = 5);

/// First epoch (1-based) whose smoothed value is within `tolerance` (relative)
/// of the smoothed final value. 0 for an empty curve.
int epochs_to_converge(const std::vector<double>& curve, double tolerance = 0.05, int window = 5);

struct AblationRow {
  ModelKind model = ModelKind::Linear;
  FeatureSet features = FeatureSet::SinrOnly;
  double mae_mbps = 0.0;
  double rel_err_pct = 0.0;
  int epochs_to_converge = 0;
  TrainLog log;
  Eigen::VectorXd test_truth;
  Eigen::VectorXd test_pred;
};

struct AblationResult {
  std::vector<AblationRow> rows;  // linear x {loc, sinr, both}, then mlp x {loc, sinr, both}
  std::uint64_t split_checksum = 0;
  double test_label_mean = 0.0;

  const AblationRow& row(ModelKind model, FeatureSet features) const;
};

struct AblationConfig {
  TrainConfig linear = TrainConfig::linear_defaults();
  TrainConfig mlp = TrainConfig::mlp_defaults();
  double train_fraction = 0.9;
};

/// Trains the six configurations on one shared split of `trace`.
AblationResult run_ablation(const Trace& trace, std::uint64_t split_seed, const AblationConfig& config = {});

struct NoisePoint {
  double rmse_db = 0.0;
  double mae_mbps = 0.0;  // mean over seeds
};

struct NoiseSeries {
  ModelKind model = ModelKind::Mlp;
  FeatureSet features = FeatureSet::SinrOnly;
  std::vector<NoisePoint> points;
};

struct NoiseSweepResult {
  std::vector<NoiseSeries> series;
};

struct SweepTarget {
  ModelKind model = ModelKind::Mlp;
  FeatureSet features = FeatureSet::SinrOnly;
};

/// For each seed: split with that seed, corrupt the SINR column of both halves
/// with each rmse, retrain, and record test MAE. MAE is averaged over seeds.
NoiseSweepResult noise_sweep(const Trace& trace, const std::vector<double>& rmse_list,
                             const std::vector<std::uint64_t>& seeds, const TrainConfig& config,
                             const std::vector<SweepTarget>& targets = {SweepTarget{}}, double train_fraction = 0.9);

struct ExperimentReport {
  std::optional<AblationResult> ablation;
  std::optional<NoiseSweepResult> noise;
};

/// `model,features,rmse_db,mae_mbps` rows; header only for an empty result.
std::string noise_sweep_csv(const NoiseSweepResult& result);

/// Writes ablation.csv, training_curves.csv, pred_vs_true.csv, noise_sweep.csv,
/// training_curves.svg and pred_vs_true.svg into `out_dir` (created if needed).
/// Returns the written paths.
std::vector<std::string> export_reports(const ExperimentReport& report, const std::string& out_dir);

}  // namespace pqos
