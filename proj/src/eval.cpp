#include "pqos/eval.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <fmt/format.h>

#include "pqos/error.hpp"
#include "pqos/rng.hpp"

namespace pqos {

std::string_view to_string(ModelKind kind) { return kind == ModelKind::Linear ? "linear" : "mlp"; }

ModelKind model_kind_from_string(std::string_view name) {
  if (name == "linear") return ModelKind::Linear;
  if (name == "mlp") return ModelKind::Mlp;
  throw DomainError(fmt::format("unknown model kind '{}'", name));
}

std::vector<double> smooth(const std::vector<double>& curve, int window) {
  if (window < 1) throw DomainError("smoothing window must be at least 1");
  std::vector<double> out(curve.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < curve.size(); ++i) {
    sum += curve[i];
    if (i >= static_cast<std::size_t>(window)) sum -= curve[i - static_cast<std::size_t>(window)];
    out[i] = sum / static_cast<double>(std::min<std::size_t>(i + 1, static_cast<std::size_t>(window)));
  }
  return out;
}

int epochs_to_converge(const std::vector<double>& curve, double tolerance, int window) {
  if (curve.empty()) return 0;
  const auto s = smooth(curve, window);
  const double final_value = s.back();
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (std::abs(s[i] - final_value) <= tolerance * std::abs(final_value)) return static_cast<int>(i + 1);
  }
  return static_cast<int>(s.size());
}

const AblationRow& AblationResult::row(ModelKind model, FeatureSet features) const {
  for (const auto& r : rows)
    if (r.model == model && r.features == features) return r;
  throw DomainError("ablation result has no such configuration");
}

namespace {

template <typename Fn>
auto labelled(ModelKind model, FeatureSet fs, Fn&& fn) {
  try {
    return fn();
  } catch (const TrainingError& e) {
    throw TrainingError(fmt::format("{}/{}: {}", to_string(model), to_string(fs), e.what()), e.epoch(), e.batch());
  }
}

}  // namespace

AblationResult run_ablation(const Trace& trace, std::uint64_t split_seed, const AblationConfig& config) {
  if (trace.size() < 2) throw DomainError("run_ablation: trace too small to split");
  AblationResult result;
  bool first = true;
  for (ModelKind model : {ModelKind::Linear, ModelKind::Mlp}) {
    for (FeatureSet fs : kAllFeatureSets) {
      const Split sp = split(extract_features(trace, fs), config.train_fraction, split_seed);
      if (first) {
        result.split_checksum = sp.checksum;
        result.test_label_mean = sp.test.data.labels.mean();
        first = false;
      } else if (sp.checksum != result.split_checksum) {
        throw std::logic_error("ablation configurations saw different splits");
      }

      AblationRow row;
      row.model = model;
      row.features = fs;
      row.test_truth = sp.test.data.labels;
      labelled(model, fs, [&] {
        if (model == ModelKind::Linear) {
          auto fit = train_linear_gd(sp.train, sp.test, config.linear);
          row.test_pred = predict(fit.model, sp.test.data.features);
          row.log = std::move(fit.log);
        } else {
          auto fit = train_mlp(sp.train, sp.test, config.mlp);
          row.test_pred = predict(fit.model, sp.test.data.features);
          row.log = std::move(fit.log);
        }
        return 0;
      });
      row.mae_mbps = mae(row.test_pred, row.test_truth);
      row.rel_err_pct = relative_error(row.mae_mbps, result.test_label_mean);
      row.epochs_to_converge = epochs_to_converge(row.log.train_mae);
      result.rows.push_back(std::move(row));
    }
  }
  return result;
}

NoiseSweepResult noise_sweep(const Trace& trace, const std::vector<double>& rmse_list,
                             const std::vector<std::uint64_t>& seeds, const TrainConfig& config,
                             const std::vector<SweepTarget>& targets, double train_fraction) {
  if (rmse_list.empty()) throw DomainError("noise_sweep: rmse list is empty");
  for (std::size_t i = 0; i < rmse_list.size(); ++i) {
    if (!(rmse_list[i] >= 0.0)) throw DomainError("noise_sweep: rmse values must be non-negative");
    if (i > 0 && !(rmse_list[i] > rmse_list[i - 1])) throw DomainError("noise_sweep: rmse values must be strictly increasing");
  }
  if (seeds.empty()) throw DomainError("noise_sweep: need at least one seed");

  NoiseSweepResult result;
  for (const auto& target : targets) {
    if (!has_sinr(target.features)) throw DomainError("noise_sweep: target feature set has no SINR column");
    NoiseSeries series;
    series.model = target.model;
    series.features = target.features;
    for (double r : rmse_list) series.points.push_back({r, 0.0});

    const Dataset clean = extract_features(trace, target.features);
    for (std::uint64_t seed : seeds) {
      const Split sp = split(clean, train_fraction, seed);
      TrainConfig cfg = config;
      cfg.seed = seed;
      for (std::size_t k = 0; k < rmse_list.size(); ++k) {
        const TrainSet train{inject_sinr_noise(sp.train.data, rmse_list[k], mix_seed(seed, 2 * k))};
        const TestSet test{inject_sinr_noise(sp.test.data, rmse_list[k], mix_seed(seed, 2 * k + 1))};
        const double m = labelled(target.model, target.features, [&] {
          if (target.model == ModelKind::Linear) {
            const auto fit = train_linear_gd(train, test, cfg);
            return mae(predict(fit.model, test.data.features), test.data.labels);
          }
          const auto fit = train_mlp(train, test, cfg);
          return mae(predict(fit.model, test.data.features), test.data.labels);
        });
        series.points[k].mae_mbps += m / static_cast<double>(seeds.size());
      }
    }
    result.series.push_back(std::move(series));
  }
  return result;
}

}  // namespace pqos
