#include <fstream>
#include <sstream>

#include <json.hpp>

#include "pqos/error.hpp"
#include "pqos/predict.hpp"

namespace pqos {

namespace {

using nlohmann::json;

json vec_to_json(const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

json mat_to_json(const Eigen::MatrixXd& m) {
  std::vector<double> flat;
  flat.reserve(static_cast<std::size_t>(m.size()));
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) flat.push_back(m(r, c));
  return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", flat}};
}

Eigen::VectorXd vec_from_json(const json& j, const char* what) {
  if (!j.is_array()) throw ParseError(std::string("'") + what + "' must be an array");
  Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) throw ParseError(std::string("'") + what + "' must contain numbers");
    v(static_cast<Eigen::Index>(i)) = j[i].get<double>();
  }
  return v;
}

Eigen::MatrixXd mat_from_json(const json& j, const char* what) {
  const auto rows = j.at("rows").get<Eigen::Index>();
  const auto cols = j.at("cols").get<Eigen::Index>();
  const Eigen::VectorXd flat = vec_from_json(j.at("data"), what);
  if (flat.size() != rows * cols) throw ParseError(std::string("'") + what + "' data length does not match shape");
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = flat(r * cols + c);
  return m;
}

json norm_to_json(const NormStats& n) { return {{"mean", vec_to_json(n.mean)}, {"std", vec_to_json(n.std)}}; }

NormStats norm_from_json(const json& j) { return {vec_from_json(j.at("mean"), "mean"), vec_from_json(j.at("std"), "std")}; }

json to_json(const LinearModel& m) {
  return {{"kind", "linear"},
          {"feature_set", std::string(to_string(m.feature_set))},
          {"norm", norm_to_json(m.norm)},
          {"weights", vec_to_json(m.weights)},
          {"bias", m.bias},
          {"ridge_fallback", m.ridge_fallback}};
}

json to_json(const MlpModel& m) {
  return {{"kind", "mlp"},
          {"feature_set", std::string(to_string(m.feature_set))},
          {"norm", norm_to_json(m.norm)},
          {"layers",
           json::array({{{"weights", mat_to_json(m.w1)}, {"bias", vec_to_json(m.b1)}},
                        {{"weights", mat_to_json(m.w2)}, {"bias", vec_to_json(m.b2)}},
                        {{"weights", mat_to_json(m.w3)}, {"bias", json::array({m.b3})}}})}};
}

}  // namespace

std::string model_to_json(const Predictor& model) {
  return std::visit([](const auto& m) { return to_json(m).dump(); }, model);
}

Predictor model_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("invalid model JSON: ") + e.what());
  }
  try {
    const auto kind = j.at("kind").get<std::string>();
    const FeatureSet fs = feature_set_from_string(j.at("feature_set").get<std::string>());
    if (kind == "linear") {
      LinearModel m;
      m.feature_set = fs;
      m.norm = norm_from_json(j.at("norm"));
      m.weights = vec_from_json(j.at("weights"), "weights");
      m.bias = j.at("bias").get<double>();
      m.ridge_fallback = j.value("ridge_fallback", false);
      m.validate();
      return m;
    }
    if (kind == "mlp") {
      const auto& layers = j.at("layers");
      if (!layers.is_array() || layers.size() != 3) throw ParseError("MLP model needs exactly 3 layers");
      MlpModel m;
      m.feature_set = fs;
      m.norm = norm_from_json(j.at("norm"));
      m.w1 = mat_from_json(layers[0].at("weights"), "layer 1");
      m.b1 = vec_from_json(layers[0].at("bias"), "layer 1 bias");
      m.w2 = mat_from_json(layers[1].at("weights"), "layer 2");
      m.b2 = vec_from_json(layers[1].at("bias"), "layer 2 bias");
      m.w3 = mat_from_json(layers[2].at("weights"), "layer 3");
      const Eigen::VectorXd b3 = vec_from_json(layers[2].at("bias"), "layer 3 bias");
      if (b3.size() != 1) throw ParseError("output layer must have one bias");
      m.b3 = b3(0);
      m.validate();
      return m;
    }
    throw ParseError("unknown model kind '" + kind + "'");
  } catch (const json::exception& e) {
    throw ParseError(std::string("malformed model document: ") + e.what());
  } catch (const DomainError& e) {
    throw ParseError(e.what());
  }
}

void save_model(const Predictor& model, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << model_to_json(model) << '\n';
}

Predictor load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return model_from_json(ss.str());
}

}  // namespace pqos
