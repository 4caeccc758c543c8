#include "vecfit/error.hpp"
#include "vecfit/fitter.hpp"

#include "json.hpp"

#include <cmath>
#include <limits>

namespace vecfit {

namespace {

using nlohmann::json;

double read_number(const json& j, const std::string& field) {
  if (!j.is_number()) throw ConfigError("config field '" + field + "' must be a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) throw ConfigError("config field '" + field + "' must be finite");
  return v;
}

int read_int(const json& j, const std::string& field) {
  if (!j.is_number_integer()) throw ConfigError("config field '" + field + "' must be an integer");
  const auto v = j.get<std::int64_t>();
  if (v < std::numeric_limits<int>::min() || v > std::numeric_limits<int>::max())
    throw ConfigError("config field '" + field + "' is out of range");
  return static_cast<int>(v);
}

void read_weights(const json& j, LossWeights& w) {
  if (!j.is_object()) throw ConfigError("config field 'weights' must be an object");
  for (const auto& [key, value] : j.items()) {
    const std::string field = "weights." + key;
    if (key == "lambda_mse") w.mse = read_number(value, field);
    else if (key == "lambda_spatial") w.spatial = read_number(value, field);
    else if (key == "lambda_g1") w.g1 = read_number(value, field);
    else if (key == "lambda_sdf") w.sdf = read_number(value, field);
    else throw ConfigError("unknown config field '" + field + "'");
  }
}

}  // namespace

void FitConfig::validate() const {
  auto positive = [](double v, const char* field) {
    if (!(v > 0.0)) throw ConfigError(std::string("config field '") + field + "' must be positive");
  };
  auto nonnegative = [](double v, const char* field) {
    if (!(v >= 0.0)) throw ConfigError(std::string("config field '") + field + "' must be nonnegative");
  };
  if (resolution < 8) throw ConfigError("config field 'resolution' must be at least 8");
  if (keyframes < 1) throw ConfigError("config field 'keyframes' must be at least 1");
  if (iterations < 0) throw ConfigError("config field 'iterations' must be nonnegative");
  if (activation_cadence < 1) throw ConfigError("config field 'activation_cadence' must be positive");
  positive(lr_homography, "lr_homography");
  positive(lr_offsets, "lr_offsets");
  if (!(adam_beta1 >= 0.0 && adam_beta1 < 1.0)) throw ConfigError("config field 'adam_beta1' must be in [0, 1)");
  if (!(adam_beta2 >= 0.0 && adam_beta2 < 1.0)) throw ConfigError("config field 'adam_beta2' must be in [0, 1)");
  positive(adam_eps, "adam_eps");
  nonnegative(weights.mse, "weights.lambda_mse");
  nonnegative(weights.spatial, "weights.lambda_spatial");
  nonnegative(weights.g1, "weights.lambda_g1");
  nonnegative(weights.sdf, "weights.lambda_sdf");
  positive(softness, "softness");
  if (!(white_thresh > 0.0 && white_thresh <= 1.0)) throw ConfigError("config field 'white_thresh' must be in (0, 1]");
  nonnegative(sdf_tau, "sdf_tau");
  if (!(sharpen_fraction >= 0.0 && sharpen_fraction <= 1.0))
    throw ConfigError("config field 'sharpen_fraction' must be in [0, 1]");
  if (checkpoint_interval < 1) throw ConfigError("config field 'checkpoint_interval' must be positive");
}

FitConfig fit_config_from_json(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  FitConfig c;
  for (const auto& [key, value] : j.items()) {
    if (key == "resolution") c.resolution = read_int(value, key);
    else if (key == "keyframes") c.keyframes = read_int(value, key);
    else if (key == "iterations") c.iterations = read_int(value, key);
    else if (key == "activation_cadence") c.activation_cadence = read_int(value, key);
    else if (key == "lr_homography") c.lr_homography = read_number(value, key);
    else if (key == "lr_offsets") c.lr_offsets = read_number(value, key);
    else if (key == "adam_beta1") c.adam_beta1 = read_number(value, key);
    else if (key == "adam_beta2") c.adam_beta2 = read_number(value, key);
    else if (key == "adam_eps") c.adam_eps = read_number(value, key);
    else if (key == "weights") read_weights(value, c.weights);
    else if (key == "softness") c.softness = read_number(value, key);
    else if (key == "white_thresh") c.white_thresh = read_number(value, key);
    else if (key == "seed") {
      if (!value.is_number_unsigned() && !(value.is_number_integer() && value.get<std::int64_t>() >= 0))
        throw ConfigError("config field 'seed' must be a nonnegative integer");
      c.seed = value.get<std::uint64_t>();
    } else if (key == "sdf_tau") c.sdf_tau = read_number(value, key);
    else if (key == "sharpen_fraction") c.sharpen_fraction = read_number(value, key);
    else if (key == "checkpoint_interval") c.checkpoint_interval = read_int(value, key);
    else throw ConfigError("unknown config field '" + key + "'");
  }
  c.validate();
  return c;
}

std::string fit_config_to_json(const FitConfig& c) {
  nlohmann::ordered_json j;
  j["resolution"] = c.resolution;
  j["keyframes"] = c.keyframes;
  j["iterations"] = c.iterations;
  j["activation_cadence"] = c.activation_cadence;
  j["lr_homography"] = c.lr_homography;
  j["lr_offsets"] = c.lr_offsets;
  j["adam_beta1"] = c.adam_beta1;
  j["adam_beta2"] = c.adam_beta2;
  j["adam_eps"] = c.adam_eps;
  j["weights"] = {{"lambda_mse", c.weights.mse},
                  {"lambda_spatial", c.weights.spatial},
                  {"lambda_g1", c.weights.g1},
                  {"lambda_sdf", c.weights.sdf}};
  j["softness"] = c.softness;
  j["white_thresh"] = c.white_thresh;
  j["seed"] = c.seed;
  j["sdf_tau"] = c.sdf_tau;
  j["sharpen_fraction"] = c.sharpen_fraction;
  j["checkpoint_interval"] = c.checkpoint_interval;
  return j.dump(2) + "\n";
}

}  // namespace vecfit
