#include <algorithm>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include <fmt/format.h>

#include "pqos/eval.hpp"

namespace pqos {

namespace {

namespace fs = std::filesystem;

constexpr const char* kPalette[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b"};

// Reference MAE per configuration from the original measurement campaign.
constexpr struct {
  const char* model;
  const char* features;
  double mae;
} kReferenceMae[] = {{"linear", "location", 2.21}, {"linear", "sinr", 2.19}, {"linear", "sinr_location", 2.08},
                     {"mlp", "location", 0.92},    {"mlp", "sinr", 0.46},    {"mlp", "sinr_location", 0.40}};

void write_file(const fs::path& path, const std::string& content, std::vector<std::string>& written) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  out << content;
  if (!out) throw std::runtime_error("write failed for '" + path.string() + "'");
  written.push_back(path.string());
}

std::string label(const AblationRow& r) { return fmt::format("{}/{}", to_string(r.model), to_string(r.features)); }

// Minimal plot canvas: fixed 640x480 frame, data mapped into the inner box.
struct Canvas {
  double x0, x1, y0, y1;
  static constexpr double kW = 640, kH = 480, kL = 60, kR = 160, kT = 30, kB = 50;

  double px(double x) const { return kL + (x - x0) / (x1 - x0) * (kW - kL - kR); }
  double py(double y) const { return kH - kB - (y - y0) / (y1 - y0) * (kH - kT - kB); }

  std::string frame(const std::string& title, const std::string& xlabel, const std::string& ylabel) const {
    std::string s = fmt::format(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{0}\" height=\"{1}\" viewBox=\"0 0 {0} {1}\">\n"
        "<rect width=\"{0}\" height=\"{1}\" fill=\"white\"/>\n"
        "<text x=\"{2}\" y=\"20\" font-family=\"sans-serif\" font-size=\"14\" text-anchor=\"middle\">{3}</text>\n",
        kW, kH, (kL + kW - kR) / 2, title);
    s += fmt::format("<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"black\"/>\n", kL, kT,
                     kW - kL - kR, kH - kT - kB);
    for (int i = 0; i <= 4; ++i) {
      const double xv = x0 + (x1 - x0) * i / 4.0;
      const double yv = y0 + (y1 - y0) * i / 4.0;
      s += fmt::format(
          "<text x=\"{:.2f}\" y=\"{:.2f}\" font-family=\"sans-serif\" font-size=\"10\" text-anchor=\"middle\">{:.4g}</text>\n",
          px(xv), kH - kB + 14, xv);
      s += fmt::format(
          "<text x=\"{:.2f}\" y=\"{:.2f}\" font-family=\"sans-serif\" font-size=\"10\" text-anchor=\"end\">{:.4g}</text>\n",
          kL - 4, py(yv) + 3, yv);
    }
    s += fmt::format("<text x=\"{:.2f}\" y=\"{:.2f}\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"middle\">{}</text>\n",
                     (kL + kW - kR) / 2, kH - 12, xlabel);
    s += fmt::format(
        "<text x=\"14\" y=\"{:.2f}\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"middle\" "
        "transform=\"rotate(-90 14 {:.2f})\">{}</text>\n",
        (kT + kH - kB) / 2, (kT + kH - kB) / 2, ylabel);
    return s;
  }

  std::string legend(std::size_t i, const std::string& text) const {
    const double y = kT + 14 + 16 * static_cast<double>(i);
    return fmt::format(
        "<rect x=\"{:.2f}\" y=\"{:.2f}\" width=\"10\" height=\"10\" fill=\"{}\"/>"
        "<text x=\"{:.2f}\" y=\"{:.2f}\" font-family=\"sans-serif\" font-size=\"11\">{}</text>\n",
        kW - kR + 10, y - 9, kPalette[i % 6], kW - kR + 24, y, text);
  }
};

std::string training_curves_svg(const AblationResult* ab) {
  double max_epoch = 1, max_mae = 1;
  if (ab) {
    for (const auto& r : ab->rows) {
      max_epoch = std::max(max_epoch, static_cast<double>(r.log.train_mae.size()));
      for (double v : r.log.train_mae) max_mae = std::max(max_mae, v);
    }
  }
  const Canvas c{1, std::max(2.0, max_epoch), 0, max_mae * 1.05};
  std::string s = c.frame("Training MAE per epoch", "epoch", "training MAE (Mbps)");
  if (ab) {
    for (std::size_t i = 0; i < ab->rows.size(); ++i) {
      const auto& r = ab->rows[i];
      std::string pts;
      for (std::size_t e = 0; e < r.log.train_mae.size(); ++e)
        pts += fmt::format("{}{:.2f},{:.2f}", e ? " " : "", c.px(static_cast<double>(e + 1)), c.py(r.log.train_mae[e]));
      s += fmt::format("<polyline fill=\"none\" stroke=\"{}\" stroke-width=\"1.5\" points=\"{}\"/>\n", kPalette[i % 6], pts);
      s += c.legend(i, label(r));
    }
  }
  return s + "</svg>\n";
}

std::string pred_vs_true_svg(const AblationResult* ab, double tput_hi) {
  const Canvas c{0, tput_hi, 0, tput_hi};
  std::string s = c.frame("Predicted vs true uplink throughput", "true (Mbps)", "predicted (Mbps)");
  s += fmt::format("<line x1=\"{:.2f}\" y1=\"{:.2f}\" x2=\"{:.2f}\" y2=\"{:.2f}\" stroke=\"gray\" stroke-dasharray=\"4 3\"/>\n",
                   c.px(0), c.py(0), c.px(tput_hi), c.py(tput_hi));
  if (ab) {
    for (std::size_t i = 0; i < ab->rows.size(); ++i) {
      const auto& r = ab->rows[i];
      s += fmt::format("<g fill=\"{}\" fill-opacity=\"0.6\">\n", kPalette[i % 6]);
      for (Eigen::Index k = 0; k < r.test_truth.size(); ++k) {
        const double y = std::clamp(r.test_pred(k), 0.0, tput_hi);
        s += fmt::format("<circle cx=\"{:.2f}\" cy=\"{:.2f}\" r=\"2\"/>\n", c.px(r.test_truth(k)), c.py(y));
      }
      s += "</g>\n" + c.legend(i, label(r));
    }
  }
  return s + "</svg>\n";
}

}  // namespace

std::string noise_sweep_csv(const NoiseSweepResult& result) {
  std::string noise = "model,features,rmse_db,mae_mbps\n";
  for (const auto& series : result.series)
    for (const auto& p : series.points)
      noise += fmt::format("{},{},{:.6f},{:.6f}\n", to_string(series.model), to_string(series.features), p.rmse_db, p.mae_mbps);
  return noise;
}

std::vector<std::string> export_reports(const ExperimentReport& report, const std::string& out_dir) {
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw std::runtime_error("cannot create '" + out_dir + "': " + ec.message());
  const fs::path dir(out_dir);
  const AblationResult* ab = report.ablation ? &*report.ablation : nullptr;
  std::vector<std::string> written;

  std::string ablation;
  ablation += "# reference_mae_mbps:";
  for (const auto& ref : kReferenceMae) ablation += fmt::format(" {}/{}={:.2f}", ref.model, ref.features, ref.mae);
  ablation += "\n";
  if (ab) {
    ablation += fmt::format("# split_checksum={:016x}\n# test_label_mean_mbps={:.6f}\n", ab->split_checksum, ab->test_label_mean);
  }
  ablation += "model,features,mae_mbps,rel_err_pct,epochs_to_converge\n";
  std::string curves = "model,features,epoch,train_mae_mbps,test_mae_mbps\n";
  std::string scatter = "model,features,true_mbps,pred_mbps\n";
  double tput_hi = 1.0;
  if (ab) {
    for (const auto& r : ab->rows) {
      const auto m = to_string(r.model);
      const auto f = to_string(r.features);
      ablation += fmt::format("{},{},{:.6f},{:.6f},{}\n", m, f, r.mae_mbps, r.rel_err_pct, r.epochs_to_converge);
      for (std::size_t e = 0; e < r.log.train_mae.size(); ++e)
        curves += fmt::format("{},{},{},{:.6f},{:.6f}\n", m, f, e + 1, r.log.train_mae[e], r.log.test_mae[e]);
      for (Eigen::Index k = 0; k < r.test_truth.size(); ++k) {
        scatter += fmt::format("{},{},{:.6f},{:.6f}\n", m, f, r.test_truth(k), r.test_pred(k));
        tput_hi = std::max(tput_hi, r.test_truth(k));
      }
    }
  }
  const std::string noise = report.noise ? noise_sweep_csv(*report.noise) : noise_sweep_csv({});

  write_file(dir / "ablation.csv", ablation, written);
  write_file(dir / "training_curves.csv", curves, written);
  write_file(dir / "pred_vs_true.csv", scatter, written);
  write_file(dir / "noise_sweep.csv", noise, written);
  write_file(dir / "training_curves.svg", training_curves_svg(ab), written);
  write_file(dir / "pred_vs_true.svg", pred_vs_true_svg(ab, tput_hi), written);
  return written;
}

}  // namespace pqos
