#pragma once

// Shared mini-batch loop for the gradient-trained models.

#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "pqos/error.hpp"
#include "pqos/optimizer.hpp"
#include "pqos/predict.hpp"
#include "pqos/rng.hpp"

namespace pqos::detail {

inline Eigen::MatrixXd gather_rows(const Eigen::MatrixXd& x, const std::vector<Eigen::Index>& rows,
                                   std::size_t begin, std::size_t end) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(end - begin), x.cols());
  for (std::size_t i = begin; i < end; ++i) out.row(static_cast<Eigen::Index>(i - begin)) = x.row(rows[i]);
  return out;
}

inline Eigen::VectorXd gather(const Eigen::VectorXd& y, const std::vector<Eigen::Index>& rows,
                              std::size_t begin, std::size_t end) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(end - begin));
  for (std::size_t i = begin; i < end; ++i) out(static_cast<Eigen::Index>(i - begin)) = y(rows[i]);
  return out;
}

/// `grad_fn(params, xb, yb) -> LossAndGradient`, `eval_fn(params, x) -> predictions`.
template <typename GradFn, typename EvalFn>
TrainLog run_minibatch(Eigen::VectorXd& params, const Eigen::MatrixXd& x_train, const Eigen::VectorXd& y_train,
                       const Eigen::MatrixXd& x_test, const Eigen::VectorXd& y_test, const TrainConfig& config,
                       GradFn&& grad_fn, EvalFn&& eval_fn) {
  config.validate();
  if (x_train.rows() == 0) throw DomainError("training set is empty");
  Optimizer opt(config.optimizer, config.learning_rate, params.size());
  Rng rng(config.seed, 0x5452);
  std::vector<Eigen::Index> order(static_cast<std::size_t>(x_train.rows()));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  const auto batch = static_cast<std::size_t>(config.batch_size);

  TrainLog log;
  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    rng.shuffle(order.begin(), order.end());
    int batch_no = 0;
    for (std::size_t begin = 0; begin < order.size(); begin += batch, ++batch_no) {
      const std::size_t end = std::min(order.size(), begin + batch);
      const LossAndGradient lg = grad_fn(params, gather_rows(x_train, order, begin, end), gather(y_train, order, begin, end));
      if (!std::isfinite(lg.loss) || !lg.gradient.allFinite())
        throw TrainingError(fmt::format("non-finite loss at epoch {}, batch {}", epoch, batch_no), epoch, batch_no);
      opt.step(params, lg.gradient);
    }
    const double train_mae = mae(eval_fn(params, x_train), y_train);
    const double test_mae = x_test.rows() > 0 ? mae(eval_fn(params, x_test), y_test) : 0.0;
    if (!std::isfinite(train_mae) || !params.allFinite())
      throw TrainingError(fmt::format("training diverged at epoch {}", epoch), epoch);
    log.train_mae.push_back(train_mae);
    log.test_mae.push_back(test_mae);
  }
  return log;
}

}  // namespace pqos::detail
