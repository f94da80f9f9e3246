#include <cmath>

#include <Eigen/Dense>

#include "pqos/error.hpp"
#include "pqos/predict.hpp"
#include "training.hpp"

namespace pqos {

void TrainConfig::validate() const {
  if (epochs < 1) throw DomainError("epochs must be at least 1");
  if (batch_size < 1) throw DomainError("batch_size must be at least 1");
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) throw DomainError("learning_rate must be finite and non-negative");
}

TrainConfig TrainConfig::mlp_defaults() { return TrainConfig{}; }

TrainConfig TrainConfig::linear_defaults() {
  TrainConfig c;
  c.epochs = 200;
  c.learning_rate = 5e-2;
  return c;
}

void LinearModel::validate() const {
  const auto d = feature_count(feature_set);
  if (weights.size() != d || norm.mean.size() != d || norm.std.size() != d)
    throw DomainError("linear model shape does not match its feature set");
  if (!weights.allFinite() || !std::isfinite(bias)) throw DomainError("linear model has non-finite parameters");
}

Eigen::VectorXd LinearModel::raw_weights() const { return weights.cwiseQuotient(norm.std); }

double LinearModel::raw_bias() const { return bias - raw_weights().dot(norm.mean); }

LinearModel train_linear_closed_form(const TrainSet& train) {
  const Dataset& d = train.data;
  d.validate();
  const Eigen::Index n = d.rows();
  const Eigen::Index p = d.features.cols();
  if (n <= p) throw DomainError("closed-form fit needs more rows than features");

  LinearModel m;
  m.feature_set = d.feature_set;
  m.norm = fit_norm(train);

  Eigen::MatrixXd a(n, p + 1);
  a.leftCols(p) = normalize_features(d.features, m.norm);
  a.col(p).setOnes();

  const Eigen::MatrixXd ata = a.transpose() * a;
  const Eigen::VectorXd aty = a.transpose() * d.labels;
  Eigen::VectorXd coef;
  if (Eigen::ColPivHouseholderQR<Eigen::MatrixXd>(a).rank() < p + 1) {
    m.ridge_fallback = true;
    coef = (ata + 1e-8 * Eigen::MatrixXd::Identity(p + 1, p + 1)).ldlt().solve(aty);
  } else {
    coef = ata.ldlt().solve(aty);
  }
  m.weights = coef.head(p);
  m.bias = coef(p);
  return m;
}

LinearFit train_linear_gd(const TrainSet& train, const TestSet& test, const TrainConfig& config) {
  train.data.validate();
  const Eigen::Index p = train.data.features.cols();
  if (test.data.rows() > 0 && test.data.features.cols() != p) throw DomainError("train/test feature width differ");

  LinearFit fit;
  fit.model.feature_set = train.data.feature_set;
  fit.model.norm = fit_norm(train);
  const Eigen::MatrixXd xtr = normalize_features(train.data.features, fit.model.norm);
  const Eigen::MatrixXd xte = test.data.rows() > 0 ? normalize_features(test.data.features, fit.model.norm)
                                                   : Eigen::MatrixXd(0, p);

  Eigen::VectorXd params = Eigen::VectorXd::Zero(p + 1);
  const auto eval = [p](const Eigen::VectorXd& w, const Eigen::MatrixXd& x) -> Eigen::VectorXd {
    return (x * w.head(p)).array() + w(p);
  };
  const auto grad = [&](const Eigen::VectorXd& w, const Eigen::MatrixXd& x, const Eigen::VectorXd& y) {
    const Eigen::VectorXd r = eval(w, x) - y;
    const Eigen::VectorXd s = r.array().sign();
    const double inv_b = 1.0 / static_cast<double>(x.rows());
    LossAndGradient lg;
    lg.loss = r.cwiseAbs().mean();
    lg.gradient.resize(p + 1);
    lg.gradient.head(p) = x.transpose() * s * inv_b;
    lg.gradient(p) = s.sum() * inv_b;
    return lg;
  };
  fit.log = detail::run_minibatch(params, xtr, train.data.labels, xte, test.data.labels, config, grad, eval);
  fit.model.weights = params.head(p);
  fit.model.bias = params(p);
  return fit;
}

Eigen::VectorXd predict(const LinearModel& model, const Eigen::MatrixXd& features) {
  if (features.cols() != model.weights.size())
    throw DomainError("predict: expected " + std::to_string(model.weights.size()) + " feature columns, got " +
                      std::to_string(features.cols()));
  return (normalize_features(features, model.norm) * model.weights).array() + model.bias;
}

}  // namespace pqos
