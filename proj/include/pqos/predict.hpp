#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Core>

#include "pqos/dataset.hpp"

namespace pqos {

enum class OptimizerKind { Sgd, Adam };

struct TrainConfig {
  int epochs = 150;
  int batch_size = 32;
  double learning_rate = 1e-3;
  OptimizerKind optimizer = OptimizerKind::Adam;
  std::uint64_t seed = 0;
  // Loss is always MAE.

  void validate() const;

  /// Adam, lr 1e-3, batch 32, 150 epochs.
  static TrainConfig mlp_defaults();
  /// Adam, lr 5e-2, batch 32, 200 epochs.
  static TrainConfig linear_defaults();
};

/// Per-epoch MAE (Mbps), measured after each epoch on the full sets.
struct TrainLog {
  std::vector<double> train_mae;
  std::vector<double> test_mae;
};

struct LinearModel {
  FeatureSet feature_set = FeatureSet::SinrOnly;
  NormStats norm;
  Eigen::VectorXd weights;  // on normalized features
  double bias = 0.0;        // Mbps
  bool ridge_fallback = false;

  void validate() const;
  /// Coefficients on raw (unnormalized) features: y = raw_weights . x + raw_bias.
  Eigen::VectorXd raw_weights() const;
  double raw_bias() const;
};

/// Dense network d -> 64 -> 64 -> 1, ReLU on the hidden layers.
struct MlpModel {
  static constexpr Eigen::Index kHidden = 64;

  FeatureSet feature_set = FeatureSet::SinrOnly;
  NormStats norm;
  Eigen::MatrixXd w1;  // 64 x d
  Eigen::VectorXd b1;  // 64
  Eigen::MatrixXd w2;  // 64 x 64
  Eigen::VectorXd b2;  // 64
  Eigen::MatrixXd w3;  // 1 x 64
  double b3 = 0.0;

  Eigen::Index input_width() const { return w1.cols(); }
  Eigen::Index parameter_count() const;
  void validate() const;

  /// He-normal weights (std sqrt(2 / fan_in)), zero biases.
  static MlpModel he_init(FeatureSet fs, NormStats norm, std::uint64_t seed);
  /// All parameters zero.
  static MlpModel zeros(FeatureSet fs, NormStats norm);
};

/// Flat parameter vector, order w1 (row-major), b1, w2 (row-major), b2, w3, b3.
Eigen::VectorXd pack_parameters(const MlpModel& model);
void unpack_parameters(const Eigen::VectorXd& flat, MlpModel& model);

/// Forward pass on already-normalized inputs (rows = samples) in precision `Scalar`.
template <typename Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, 1> mlp_forward(
    const MlpModel& model, const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& x_norm) {
  using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  const Mat xt = x_norm.transpose();
  Mat a1 = model.w1.cast<Scalar>() * xt;
  a1.colwise() += model.b1.cast<Scalar>();
  a1 = a1.cwiseMax(Scalar(0));
  Mat a2 = model.w2.cast<Scalar>() * a1;
  a2.colwise() += model.b2.cast<Scalar>();
  a2 = a2.cwiseMax(Scalar(0));
  Vec out = (model.w3.cast<Scalar>() * a2).transpose();
  out.array() += Scalar(model.b3);
  return out;
}

/// MAE loss and its gradient (flat, pack_parameters order) on normalized inputs.
/// ReLU and |.| subgradients at 0 are taken as 0.
struct LossAndGradient {
  double loss = 0.0;
  Eigen::VectorXd gradient;
};
LossAndGradient mlp_loss_gradient(const MlpModel& model, const Eigen::MatrixXd& x_norm,
                                  const Eigen::VectorXd& labels);

/// Smallest |pre-activation| over both hidden layers for a batch of raw features.
double min_abs_preactivation(const MlpModel& model, const Eigen::MatrixXd& features);

struct LinearFit {
  LinearModel model;
  TrainLog log;
};
struct MlpFit {
  MlpModel model;
  TrainLog log;
};

/// Least squares via the normal equations on normalized features. Falls back
/// to ridge (lambda 1e-8) when the design matrix is rank deficient.
LinearModel train_linear_closed_form(const TrainSet& train);

/// Mini-batch descent on MAE, starting from zero weights and bias.
LinearFit train_linear_gd(const TrainSet& train, const TestSet& test, const TrainConfig& config);

MlpFit train_mlp(const TrainSet& train, const TestSet& test, const TrainConfig& config);

using Predictor = std::variant<LinearModel, MlpModel>;

Eigen::VectorXd predict(const LinearModel& model, const Eigen::MatrixXd& features);
Eigen::VectorXd predict(const MlpModel& model, const Eigen::MatrixXd& features);
Eigen::VectorXd predict(const Predictor& model, const Eigen::MatrixXd& features);
FeatureSet feature_set_of(const Predictor& model);

double mae(const Eigen::VectorXd& pred, const Eigen::VectorXd& truth);
/// 100 * mae / mean_tput, percent.
double relative_error(double mae_mbps, double mean_tput_mbps);

/// Optional hook applied to the analytic gradient before comparison; used to
/// check that the comparison detects a wrong gradient.
using GradientHook = std::function<void(Eigen::VectorXd&)>;

/// Max over parameters of |g_a - g_n| / max(|g_a|, |g_n|, 1e-8), where g_n is
/// a central difference of the MAE loss evaluated in extended precision.
double grad_check(const MlpModel& model, const Eigen::MatrixXd& features, const Eigen::VectorXd& labels,
                  double epsilon, const GradientHook& hook = {});

/// JSON model documents: feature_set, norm stats, parameter arrays (row-major).
std::string model_to_json(const Predictor& model);
Predictor model_from_json(const std::string& text);
void save_model(const Predictor& model, const std::string& path);
Predictor load_model(const std::string& path);

}  // namespace pqos
