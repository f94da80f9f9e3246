#include <algorithm>
#include <cmath>

#include "pqos/error.hpp"
#include "pqos/predict.hpp"
#include "pqos/rng.hpp"
#include "training.hpp"

namespace pqos {

namespace {

constexpr Eigen::Index H = MlpModel::kHidden;

using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <typename Scalar>
using MatX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

// Forward pass driven directly by a flat parameter vector, for finite differences.
template <typename Scalar>
Scalar mae_from_flat(const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& flat, Eigen::Index d, const MatX<Scalar>& xt,
                     const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& y) {
  using RM = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  Eigen::Index off = 0;
  const Eigen::Map<const RM> w1(flat.data() + off, H, d);
  off += H * d;
  const auto b1 = flat.segment(off, H);
  off += H;
  const Eigen::Map<const RM> w2(flat.data() + off, H, H);
  off += H * H;
  const auto b2 = flat.segment(off, H);
  off += H;
  const auto w3 = flat.segment(off, H);
  off += H;
  const Scalar b3 = flat(off);

  MatX<Scalar> a1 = w1 * xt;
  a1.colwise() += b1;
  a1 = a1.cwiseMax(Scalar(0));
  MatX<Scalar> a2 = w2 * a1;
  a2.colwise() += b2;
  a2 = a2.cwiseMax(Scalar(0));
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> out = (w3.transpose() * a2).transpose();
  out.array() += b3;
  return (out - y).cwiseAbs().sum() / Scalar(y.size());
}

}  // namespace

Eigen::Index MlpModel::parameter_count() const { return H * input_width() + H + H * H + H + H + 1; }

void MlpModel::validate() const {
  const auto d = feature_count(feature_set);
  if (w1.rows() != H || w1.cols() != d || b1.size() != H || w2.rows() != H || w2.cols() != H || b2.size() != H ||
      w3.rows() != 1 || w3.cols() != H)
    throw DomainError("MLP layer shapes do not match the d -> 64 -> 64 -> 1 architecture");
  if (norm.mean.size() != d || norm.std.size() != d) throw DomainError("MLP normalization width mismatch");
  if (!w1.allFinite() || !b1.allFinite() || !w2.allFinite() || !b2.allFinite() || !w3.allFinite() ||
      !std::isfinite(b3))
    throw DomainError("MLP has non-finite parameters");
}

MlpModel MlpModel::zeros(FeatureSet fs, NormStats norm) {
  const auto d = feature_count(fs);
  MlpModel m;
  m.feature_set = fs;
  m.norm = std::move(norm);
  m.w1 = Eigen::MatrixXd::Zero(H, d);
  m.b1 = Eigen::VectorXd::Zero(H);
  m.w2 = Eigen::MatrixXd::Zero(H, H);
  m.b2 = Eigen::VectorXd::Zero(H);
  m.w3 = Eigen::MatrixXd::Zero(1, H);
  m.b3 = 0.0;
  return m;
}

MlpModel MlpModel::he_init(FeatureSet fs, NormStats norm, std::uint64_t seed) {
  MlpModel m = zeros(fs, std::move(norm));
  Rng rng(seed, 0x4845);
  const auto fill = [&](Eigen::MatrixXd& w) {
    const double scale = std::sqrt(2.0 / static_cast<double>(w.cols()));
    for (Eigen::Index r = 0; r < w.rows(); ++r)
      for (Eigen::Index c = 0; c < w.cols(); ++c) w(r, c) = scale * rng.normal();
  };
  fill(m.w1);
  fill(m.w2);
  fill(m.w3);
  return m;
}

Eigen::VectorXd pack_parameters(const MlpModel& m) {
  Eigen::VectorXd flat(m.parameter_count());
  const Eigen::Index d = m.input_width();
  Eigen::Index off = 0;
  Eigen::Map<RowMajor>(flat.data() + off, H, d) = m.w1;
  off += H * d;
  flat.segment(off, H) = m.b1;
  off += H;
  Eigen::Map<RowMajor>(flat.data() + off, H, H) = m.w2;
  off += H * H;
  flat.segment(off, H) = m.b2;
  off += H;
  flat.segment(off, H) = m.w3.transpose();
  off += H;
  flat(off) = m.b3;
  return flat;
}

void unpack_parameters(const Eigen::VectorXd& flat, MlpModel& m) {
  if (flat.size() != m.parameter_count()) throw DomainError("parameter vector has wrong length");
  const Eigen::Index d = m.input_width();
  Eigen::Index off = 0;
  m.w1 = Eigen::Map<const RowMajor>(flat.data() + off, H, d);
  off += H * d;
  m.b1 = flat.segment(off, H);
  off += H;
  m.w2 = Eigen::Map<const RowMajor>(flat.data() + off, H, H);
  off += H * H;
  m.b2 = flat.segment(off, H);
  off += H;
  m.w3 = flat.segment(off, H).transpose();
  off += H;
  m.b3 = flat(off);
}

LossAndGradient mlp_loss_gradient(const MlpModel& m, const Eigen::MatrixXd& x_norm, const Eigen::VectorXd& y) {
  const Eigen::Index b = x_norm.rows();
  if (b == 0 || y.size() != b) throw DomainError("mlp_loss_gradient: empty or mismatched batch");
  if (x_norm.cols() != m.input_width()) throw DomainError("mlp_loss_gradient: input width mismatch");

  const Eigen::MatrixXd xt = x_norm.transpose();
  Eigen::MatrixXd z1 = m.w1 * xt;
  z1.colwise() += m.b1;
  const Eigen::MatrixXd a1 = z1.cwiseMax(0.0);
  Eigen::MatrixXd z2 = m.w2 * a1;
  z2.colwise() += m.b2;
  const Eigen::MatrixXd a2 = z2.cwiseMax(0.0);
  Eigen::RowVectorXd out = m.w3 * a2;
  out.array() += m.b3;

  const Eigen::RowVectorXd r = out - y.transpose();
  const Eigen::RowVectorXd d_out = r.array().sign() / static_cast<double>(b);

  const Eigen::MatrixXd d_z2 = ((m.w3.transpose() * d_out).array() * (z2.array() > 0.0).cast<double>()).matrix();
  const Eigen::MatrixXd d_z1 = ((m.w2.transpose() * d_z2).array() * (z1.array() > 0.0).cast<double>()).matrix();

  MlpModel g = m;
  g.w3 = d_out * a2.transpose();
  g.b3 = d_out.sum();
  g.w2 = d_z2 * a1.transpose();
  g.b2 = d_z2.rowwise().sum();
  g.w1 = d_z1 * x_norm;
  g.b1 = d_z1.rowwise().sum();

  return {r.cwiseAbs().mean(), pack_parameters(g)};
}

double min_abs_preactivation(const MlpModel& m, const Eigen::MatrixXd& features) {
  const Eigen::MatrixXd xt = normalize_features(features, m.norm).transpose();
  Eigen::MatrixXd z1 = m.w1 * xt;
  z1.colwise() += m.b1;
  Eigen::MatrixXd z2 = m.w2 * z1.cwiseMax(0.0);
  z2.colwise() += m.b2;
  return std::min(z1.cwiseAbs().minCoeff(), z2.cwiseAbs().minCoeff());
}

Eigen::VectorXd predict(const MlpModel& model, const Eigen::MatrixXd& features) {
  if (features.cols() != model.input_width())
    throw DomainError("predict: expected " + std::to_string(model.input_width()) + " feature columns, got " +
                      std::to_string(features.cols()));
  return mlp_forward<double>(model, normalize_features(features, model.norm));
}

MlpFit train_mlp(const TrainSet& train, const TestSet& test, const TrainConfig& config) {
  train.data.validate();
  const Eigen::Index d = train.data.features.cols();
  if (test.data.rows() > 0 && test.data.features.cols() != d) throw DomainError("train/test feature width differ");

  MlpFit fit;
  fit.model = MlpModel::he_init(train.data.feature_set, fit_norm(train), config.seed);
  const Eigen::MatrixXd xtr = normalize_features(train.data.features, fit.model.norm);
  const Eigen::MatrixXd xte = test.data.rows() > 0 ? normalize_features(test.data.features, fit.model.norm)
                                                   : Eigen::MatrixXd(0, d);

  MlpModel scratch = fit.model;
  Eigen::VectorXd params = pack_parameters(fit.model);
  const auto grad = [&](const Eigen::VectorXd& p, const Eigen::MatrixXd& x, const Eigen::VectorXd& y) {
    unpack_parameters(p, scratch);
    return mlp_loss_gradient(scratch, x, y);
  };
  const auto eval = [&](const Eigen::VectorXd& p, const Eigen::MatrixXd& x) -> Eigen::VectorXd {
    unpack_parameters(p, scratch);
    return mlp_forward<double>(scratch, x);
  };
  fit.log = detail::run_minibatch(params, xtr, train.data.labels, xte, test.data.labels, config, grad, eval);
  unpack_parameters(params, fit.model);
  return fit;
}

double grad_check(const MlpModel& model, const Eigen::MatrixXd& features, const Eigen::VectorXd& labels,
                  double epsilon, const GradientHook& hook) {
  model.validate();
  const Eigen::MatrixXd x_norm = normalize_features(features, model.norm);
  Eigen::VectorXd analytic = mlp_loss_gradient(model, x_norm, labels).gradient;
  if (hook) hook(analytic);

  using LD = long double;
  const MatX<LD> xt = x_norm.transpose().cast<LD>();
  const Eigen::Matrix<LD, Eigen::Dynamic, 1> y = labels.cast<LD>();
  Eigen::Matrix<LD, Eigen::Dynamic, 1> flat = pack_parameters(model).cast<LD>();
  const Eigen::Index d = model.input_width();
  const LD eps = static_cast<LD>(epsilon);

  double worst = 0.0;
  for (Eigen::Index i = 0; i < flat.size(); ++i) {
    const LD saved = flat(i);
    flat(i) = saved + eps;
    const LD up = mae_from_flat<LD>(flat, d, xt, y);
    flat(i) = saved - eps;
    const LD down = mae_from_flat<LD>(flat, d, xt, y);
    flat(i) = saved;
    const double numeric = static_cast<double>((up - down) / (2 * eps));
    const double a = analytic(i);
    const double denom = std::max({std::abs(a), std::abs(numeric), 1e-8});
    worst = std::max(worst, std::abs(a - numeric) / denom);
  }
  return worst;
}

}  // namespace pqos
