#pragma once

// Versioned JSON model files. Doubles are written in shortest round-trip
// form, so save -> load -> forward reproduces outputs bit for bit.

#include <fstream>
#include <sstream>
#include <string>

#include "json.hpp"

#include "dsopt/errors.hpp"
#include "dsopt/nn.hpp"
#include "dsopt/scaled_network.hpp"

namespace dsopt {

inline constexpr int kModelFormatVersion = 1;

namespace detail {

inline Activation activation_from_string(const std::string& s) {
  if (s == "relu") return Activation::ReLU;
  if (s == "sigmoid") return Activation::Sigmoid;
  if (s == "identity") return Activation::Identity;
  throw DataError("unknown activation '" + s + "'");
}

}  // namespace detail

inline nlohmann::json to_json(const MLPModel& model) {
  nlohmann::json layers = nlohmann::json::array();
  for (const auto& l : model.layers()) {
    layers.push_back({{"input_dim", l.input_dim()},
                      {"output_dim", l.output_dim()},
                      {"activation", to_string(l.activation)},
                      {"weights", l.weights.data()},
                      {"biases", l.biases}});
  }
  return {{"kind", to_string(model.kind())}, {"layers", layers}};
}

inline MLPModel model_from_json(const nlohmann::json& j) {
  try {
    const std::string kind_str = j.at("kind").get<std::string>();
    ModelKind kind;
    if (kind_str == "classifier")
      kind = ModelKind::Classifier;
    else if (kind_str == "regressor")
      kind = ModelKind::Regressor;
    else
      throw DataError("unknown model kind '" + kind_str + "'");
    std::vector<DenseLayer> layers;
    for (const auto& jl : j.at("layers")) {
      const auto in = jl.at("input_dim").get<std::size_t>();
      const auto out = jl.at("output_dim").get<std::size_t>();
      DenseLayer layer{Matrix(in, out, jl.at("weights").get<std::vector<double>>()),
                       jl.at("biases").get<std::vector<double>>(),
                       detail::activation_from_string(jl.at("activation").get<std::string>())};
      layers.push_back(std::move(layer));
    }
    return MLPModel(kind, std::move(layers));
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed model: ") + e.what());
  } catch (const ShapeError& e) {
    throw DataError(std::string("malformed model: ") + e.what());
  }
}

/// Full model file: format tag, version, free-form header, scaler, network.
inline nlohmann::json to_json(const ScaledNetwork& net, const nlohmann::json& header = nlohmann::json::object()) {
  nlohmann::json j = to_json(net.network);
  j["format"] = "dsopt-model";
  j["format_version"] = kModelFormatVersion;
  j["header"] = header;
  j["scaler"] = {{"min", net.scaler.min}, {"max", net.scaler.max}};
  return j;
}

inline ScaledNetwork scaled_network_from_json(const nlohmann::json& j, nlohmann::json* header = nullptr) {
  try {
    if (j.value("format", std::string{}) != "dsopt-model")
      throw DataError("not a dsopt model file");
    if (j.at("format_version").get<int>() != kModelFormatVersion)
      throw DataError("unsupported model format_version " + j.at("format_version").dump());
    ScaledNetwork net{{j.at("scaler").at("min").get<std::vector<double>>(),
                       j.at("scaler").at("max").get<std::vector<double>>()},
                      model_from_json(j)};
    if (net.scaler.min.size() != net.scaler.max.size())
      throw DataError("scaler min/max lengths differ");
    if (!net.network.layers().empty() && net.scaler.width() != net.network.input_dim())
      throw DataError("scaler width does not match network input");
    if (header) *header = j.value("header", nlohmann::json::object());
    return net;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed model file: ") + e.what());
  }
}

inline void save_model(const std::string& path, const ScaledNetwork& net,
                       const nlohmann::json& header = nlohmann::json::object()) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write model file " + path);
  out << to_json(net, header).dump(1) << '\n';
}

inline ScaledNetwork load_model(const std::string& path, nlohmann::json* header = nullptr) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open model file " + path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw DataError(path + ": " + e.what());
  }
  return scaled_network_from_json(j, header);
}

}  // namespace dsopt
