#include "pqos/error.hpp"
#include "pqos/predict.hpp"

namespace pqos {

double mae(const Eigen::VectorXd& pred, const Eigen::VectorXd& truth) {
  if (pred.size() != truth.size()) throw DomainError("mae: length mismatch");
  if (pred.size() == 0) throw DomainError("mae: empty input");
  return (pred - truth).cwiseAbs().mean();
}

double relative_error(double mae_mbps, double mean_tput_mbps) {
  if (!(mean_tput_mbps > 0.0)) throw DomainError("relative_error: mean throughput must be positive");
  return 100.0 * mae_mbps / mean_tput_mbps;
}

Eigen::VectorXd predict(const Predictor& model, const Eigen::MatrixXd& features) {
  return std::visit([&](const auto& m) { return predict(m, features); }, model);
}

FeatureSet feature_set_of(const Predictor& model) {
  return std::visit([](const auto& m) { return m.feature_set; }, model);
}

}  // namespace pqos
