// SPDX-License-Identifier: Apache-2.0
#pragma once

// Experiment configuration: strict JSON parsing (unknown keys are errors,
// every validation problem is reported, not just the first), model-aware
// default filling, and a canonical echo used for summaries.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "cutsmc/errors.hpp"
#include "cutsmc/io.hpp"
#include "cutsmc/model.hpp"

namespace cutsmc {

using Json = nlohmann::json;

inline constexpr const char* kVersion = "0.1.0";

struct CutDistConfig {
  std::string kind;  // "uniform" | "normal" | "point"
  std::vector<double> lower, upper;  // uniform
  std::vector<double> mean, sd;      // normal
  std::vector<double> value;         // point

  std::size_t dimension() const {
    if (kind == "uniform") return lower.size();
    if (kind == "normal") return mean.size();
    return value.size();
  }
};

struct ModelBlockConfig {
  std::string id;  // "gaussian-conjugate" | "appendix-c" | "external"
  // gaussian-conjugate
  std::vector<double> y;
  double sigma = 1.0;
  double sigma_p = 1.0;
  std::string f_kind = "identity";  // "identity" | "affine"
  std::vector<std::vector<double>> f_matrix;
  std::vector<double> f_offset;
  std::optional<double> lipschitz_delta;
  // appendix-c
  std::vector<double> y_obs;  // empty -> frozen default
  // external
  std::vector<std::string> command;
  int d = 0;
  int d_nu = 0;
  std::optional<std::vector<double>> box_lower, box_upper;
  // shared ("gaussian-conjugate" and "external" need it; appendix-c may override)
  std::optional<CutDistConfig> cut;
};

struct KernelBlockConfig {
  std::string kind = "slice";  // "random-walk" | "mala" | "slice"
  std::optional<double> step_size;
  std::optional<double> slice_width;
  int slice_max_doublings = 16;
  std::optional<int> t;  // alias for method.t (kernel.t config key)
};

struct MethodBlockConfig {
  std::string kind;  // "smc" | "direct"
  // smc
  int N = 25;
  int S = 9;
  int t = -1;  // -1 -> default (5 plain, 4 tempered/permuted)
  int P = 0;
  bool permute = false;
  std::string metric = "euclidean";  // or "scaled-euclidean"
  std::vector<double> metric_scale;  // optional explicit scales
  std::string resampling = "multinomial";
  bool tsp_bottleneck = false;
  // direct
  int L = 1000;
  int burn_in = -1;  // -1 -> L/10
  int thin = 1;
  // shared
  KernelBlockConfig kernel;
};

struct EstimatorConfig {
  std::string name;
  std::string kind;  // "coordinate" | "indicator-box"
  int index = 0;
  std::vector<double> lower, upper;
};

struct ExperimentConfig {
  ModelBlockConfig model;
  MethodBlockConfig method;
  std::uint64_t seed = 0;
  int batch_count = 1;
  std::string output_dir = "out";
  std::vector<EstimatorConfig> estimators;
};

namespace detail {

class ConfigErrors {
 public:
  void add(const std::string& path, const std::string& message) {
    messages_.push_back(path + ": " + message);
  }
  bool empty() const { return messages_.empty(); }
  [[noreturn]] void raise() const {
    std::string joined = "invalid configuration";
    for (const auto& m : messages_) joined += "\n  - " + m;
    fail(ErrorKind::configuration, joined);
  }
  void raise_if_any() const {
    if (!messages_.empty()) raise();
  }

 private:
  std::vector<std::string> messages_;
};

inline void check_keys(const Json& obj, const std::string& path,
                       const std::set<std::string>& allowed, ConfigErrors& errors) {
  for (const auto& item : obj.items()) {
    if (allowed.find(item.key()) == allowed.end())
      errors.add(path + "." + item.key(), "unknown key");
  }
}

inline std::vector<double> read_vector(const Json& value, const std::string& path,
                                       ConfigErrors& errors) {
  std::vector<double> out;
  if (!value.is_array()) {
    errors.add(path, "expected an array of numbers");
    return out;
  }
  for (const auto& v : value) {
    if (!v.is_number()) {
      errors.add(path, "expected an array of numbers");
      return {};
    }
    out.push_back(v.get<double>());
  }
  return out;
}

inline CutDistConfig read_cut(const Json& obj, const std::string& path,
                              ConfigErrors& errors) {
  CutDistConfig cut;
  if (!obj.is_object()) {
    errors.add(path, "expected an object");
    return cut;
  }
  check_keys(obj, path, {"kind", "lower", "upper", "mean", "sd", "value"}, errors);
  cut.kind = obj.value("kind", "");
  if (cut.kind == "uniform") {
    if (obj.contains("lower")) cut.lower = read_vector(obj["lower"], path + ".lower", errors);
    if (obj.contains("upper")) cut.upper = read_vector(obj["upper"], path + ".upper", errors);
    if (cut.lower.empty() || cut.lower.size() != cut.upper.size())
      errors.add(path, "uniform cut requires matching nonempty lower/upper");
    for (std::size_t i = 0; i < std::min(cut.lower.size(), cut.upper.size()); ++i) {
      if (!(cut.lower[i] < cut.upper[i]))
        errors.add(path, "uniform cut requires lower < upper in every coordinate");
    }
  } else if (cut.kind == "normal") {
    if (obj.contains("mean")) cut.mean = read_vector(obj["mean"], path + ".mean", errors);
    if (obj.contains("sd")) cut.sd = read_vector(obj["sd"], path + ".sd", errors);
    if (cut.mean.empty() || cut.mean.size() != cut.sd.size())
      errors.add(path, "normal cut requires matching nonempty mean/sd");
    for (double s : cut.sd) {
      if (!(s > 0.0)) errors.add(path + ".sd", "standard deviations must be positive");
    }
  } else if (cut.kind == "point") {
    if (obj.contains("value")) cut.value = read_vector(obj["value"], path + ".value", errors);
    if (cut.value.empty()) errors.add(path, "point cut requires a nonempty value");
  } else {
    errors.add(path + ".kind", "expected one of uniform|normal|point");
  }
  return cut;
}

inline ModelBlockConfig read_model(const Json& obj, ConfigErrors& errors) {
  ModelBlockConfig model;
  if (!obj.is_object()) {
    errors.add("model", "expected an object");
    return model;
  }
  check_keys(obj, "model",
             {"id", "y", "sigma", "sigma_p", "f", "lipschitz_delta", "y_obs", "cut",
              "command", "d", "d_nu", "support_box"},
             errors);
  model.id = obj.value("id", "");
  if (model.id == "gaussian-conjugate") {
    if (obj.contains("y")) model.y = read_vector(obj["y"], "model.y", errors);
    if (model.y.empty()) errors.add("model.y", "gaussian-conjugate requires data y");
    model.sigma = obj.value("sigma", 1.0);
    model.sigma_p = obj.value("sigma_p", 1.0);
    if (!(model.sigma > 0.0)) errors.add("model.sigma", "must be positive");
    if (!(model.sigma_p > 0.0)) errors.add("model.sigma_p", "must be positive");
    if (obj.contains("f")) {
      const Json& f = obj["f"];
      if (!f.is_object()) {
        errors.add("model.f", "expected an object");
      } else {
        check_keys(f, "model.f", {"kind", "matrix", "offset"}, errors);
        model.f_kind = f.value("kind", "identity");
        if (model.f_kind == "affine") {
          if (!f.contains("matrix") || !f["matrix"].is_array()) {
            errors.add("model.f.matrix", "affine map requires a matrix");
          } else {
            for (const auto& row : f["matrix"])
              model.f_matrix.push_back(read_vector(row, "model.f.matrix", errors));
          }
          if (f.contains("offset"))
            model.f_offset = read_vector(f["offset"], "model.f.offset", errors);
        } else if (model.f_kind != "identity") {
          errors.add("model.f.kind", "expected identity or affine");
        }
      }
    }
    if (obj.contains("lipschitz_delta")) {
      const double delta = obj["lipschitz_delta"].get<double>();
      if (!(delta > 0.0)) errors.add("model.lipschitz_delta", "must be positive");
      model.lipschitz_delta = delta;
    }
    if (!obj.contains("cut")) {
      errors.add("model.cut", "gaussian-conjugate requires a cut distribution");
    } else {
      model.cut = read_cut(obj["cut"], "model.cut", errors);
    }
  } else if (model.id == "appendix-c") {
    if (obj.contains("y_obs")) {
      model.y_obs = read_vector(obj["y_obs"], "model.y_obs", errors);
      if (model.y_obs.size() != 2) errors.add("model.y_obs", "must have length 2");
    }
    if (obj.contains("cut")) model.cut = read_cut(obj["cut"], "model.cut", errors);
  } else if (model.id == "external") {
    if (obj.contains("command") && obj["command"].is_array()) {
      for (const auto& arg : obj["command"]) {
        if (arg.is_string()) {
          model.command.push_back(arg.get<std::string>());
        } else {
          errors.add("model.command", "expected an array of strings");
        }
      }
    }
    if (model.command.empty()) errors.add("model.command", "external model requires a command");
    model.d = obj.value("d", 0);
    model.d_nu = obj.value("d_nu", 0);
    if (model.d < 1) errors.add("model.d", "must be >= 1");
    if (model.d_nu < 1) errors.add("model.d_nu", "must be >= 1");
    if (obj.contains("support_box")) {
      const Json& box = obj["support_box"];
      if (!box.is_object()) {
        errors.add("model.support_box", "expected an object");
      } else {
        check_keys(box, "model.support_box", {"lower", "upper"}, errors);
        auto lower = read_vector(box.value("lower", Json::array()),
                                 "model.support_box.lower", errors);
        auto upper = read_vector(box.value("upper", Json::array()),
                                 "model.support_box.upper", errors);
        if (lower.empty() || lower.size() != upper.size())
          errors.add("model.support_box", "requires matching nonempty lower/upper");
        model.box_lower = std::move(lower);
        model.box_upper = std::move(upper);
      }
    }
    if (!obj.contains("cut")) {
      errors.add("model.cut", "external model requires a cut distribution");
    } else {
      model.cut = read_cut(obj["cut"], "model.cut", errors);
    }
  } else {
    errors.add("model.id", "expected one of gaussian-conjugate|appendix-c|external");
  }
  return model;
}

inline KernelBlockConfig read_kernel(const Json& obj, const std::string& path,
                                     ConfigErrors& errors) {
  KernelBlockConfig kernel;
  if (!obj.is_object()) {
    errors.add(path, "expected an object");
    return kernel;
  }
  check_keys(obj, path, {"kind", "step_size", "slice_width", "slice_max_doublings", "t"},
             errors);
  kernel.kind = obj.value("kind", "slice");
  if (kernel.kind != "random-walk" && kernel.kind != "mala" && kernel.kind != "slice")
    errors.add(path + ".kind", "expected one of random-walk|mala|slice");
  if (obj.contains("step_size")) {
    kernel.step_size = obj["step_size"].get<double>();
    if (!(*kernel.step_size > 0.0)) errors.add(path + ".step_size", "must be positive");
  }
  if (obj.contains("slice_width")) {
    kernel.slice_width = obj["slice_width"].get<double>();
    if (!(*kernel.slice_width > 0.0)) errors.add(path + ".slice_width", "must be positive");
  }
  kernel.slice_max_doublings = obj.value("slice_max_doublings", 16);
  if (kernel.slice_max_doublings < 0)
    errors.add(path + ".slice_max_doublings", "must be >= 0");
  if (obj.contains("t")) {
    kernel.t = obj["t"].get<int>();
    if (*kernel.t < 0) errors.add(path + ".t", "must be >= 0");
  }
  return kernel;
}

inline MethodBlockConfig read_method(const Json& obj, ConfigErrors& errors) {
  MethodBlockConfig method;
  if (!obj.is_object()) {
    errors.add("method", "expected an object");
    return method;
  }
  check_keys(obj, "method",
             {"kind", "N", "S", "t", "P", "permute", "metric", "metric_scale",
              "resampling", "tsp_bottleneck", "L", "burn_in", "thin", "kernel"},
             errors);
  method.kind = obj.value("kind", "");
  if (method.kind != "smc" && method.kind != "direct")
    errors.add("method.kind", "expected smc or direct");
  method.S = obj.value("S", 9);
  if (method.S < 0) errors.add("method.S", "must be >= 0");
  if (method.kind == "smc") {
    for (const char* key : {"L", "burn_in", "thin"}) {
      if (obj.contains(key)) errors.add(std::string("method.") + key,
                                        "not valid for the smc method");
    }
    method.N = obj.value("N", 25);
    if (method.N < 2) errors.add("method.N", "must be >= 2");
    method.P = obj.value("P", 0);
    if (method.P < 0) errors.add("method.P", "must be >= 0");
    method.permute = obj.value("permute", false);
    method.t = obj.value("t", -1);
    if (obj.contains("t") && method.t < 0) errors.add("method.t", "must be >= 0");
    method.metric = obj.value("metric", "euclidean");
    if (method.metric != "euclidean" && method.metric != "scaled-euclidean")
      errors.add("method.metric", "expected euclidean or scaled-euclidean");
    if (obj.contains("metric_scale"))
      method.metric_scale = read_vector(obj["metric_scale"], "method.metric_scale", errors);
    method.resampling = obj.value("resampling", "multinomial");
    if (method.resampling != "multinomial" && method.resampling != "systematic")
      errors.add("method.resampling", "expected multinomial or systematic");
    method.tsp_bottleneck = obj.value("tsp_bottleneck", false);
  } else if (method.kind == "direct") {
    for (const char* key : {"N", "P", "permute", "metric", "metric_scale", "resampling",
                            "tsp_bottleneck", "t"}) {
      if (obj.contains(key))
        errors.add(std::string("method.") + key, "not valid for the direct method");
    }
    method.L = obj.value("L", 1000);
    if (method.L < 2) errors.add("method.L", "must be >= 2");
    method.burn_in = obj.value("burn_in", -1);
    if (obj.contains("burn_in") && (method.burn_in < 0 || method.burn_in >= method.L))
      errors.add("method.burn_in", "must satisfy 0 <= burn_in < L");
    method.thin = obj.value("thin", 1);
    if (method.thin < 1) errors.add("method.thin", "must be >= 1");
  }
  if (obj.contains("kernel")) method.kernel = read_kernel(obj["kernel"], "method.kernel", errors);
  return method;
}

inline std::vector<EstimatorConfig> read_estimators(const Json& arr, ConfigErrors& errors) {
  std::vector<EstimatorConfig> out;
  if (!arr.is_array()) {
    errors.add("estimators", "expected an array");
    return out;
  }
  std::set<std::string> names;
  for (std::size_t i = 0; i < arr.size(); ++i) {
    const std::string path = "estimators[" + std::to_string(i) + "]";
    const Json& obj = arr[i];
    if (!obj.is_object()) {
      errors.add(path, "expected an object");
      continue;
    }
    check_keys(obj, path, {"name", "kind", "index", "lower", "upper"}, errors);
    EstimatorConfig est;
    est.name = obj.value("name", "");
    if (est.name.empty()) errors.add(path + ".name", "required");
    if (!names.insert(est.name).second) errors.add(path + ".name", "duplicate name");
    est.kind = obj.value("kind", "");
    if (est.kind == "coordinate") {
      est.index = obj.value("index", 0);
      if (est.index < 0) errors.add(path + ".index", "must be >= 0");
    } else if (est.kind == "indicator-box") {
      if (obj.contains("lower")) est.lower = read_vector(obj["lower"], path + ".lower", errors);
      if (obj.contains("upper")) est.upper = read_vector(obj["upper"], path + ".upper", errors);
      if (est.lower.empty() || est.lower.size() != est.upper.size())
        errors.add(path, "indicator-box requires matching nonempty lower/upper");
    } else {
      errors.add(path + ".kind", "expected coordinate or indicator-box");
    }
    out.push_back(std::move(est));
  }
  return out;
}

inline int model_dimension(const ModelBlockConfig& model) {
  if (model.id == "gaussian-conjugate") return static_cast<int>(model.y.size());
  if (model.id == "appendix-c") return 2;
  return model.d;
}

inline int model_cut_dimension(const ModelBlockConfig& model) {
  if (model.id == "appendix-c") return 1;
  if (model.cut) return static_cast<int>(model.cut->dimension());
  return model.d_nu;
}

}  // namespace detail

/// Parses and validates a config document; reports every problem at once.
inline ExperimentConfig parse_config_json(const Json& doc) {
  detail::ConfigErrors errors;
  if (!doc.is_object()) {
    errors.add("$", "top-level document must be an object");
    errors.raise();
  }
  detail::check_keys(doc, "$",
                     {"model", "method", "seed", "batch_count", "output_dir", "estimators"},
                     errors);
  ExperimentConfig cfg;
  if (!doc.contains("model")) {
    errors.add("model", "required");
  } else {
    cfg.model = detail::read_model(doc["model"], errors);
  }
  if (!doc.contains("method")) {
    errors.add("method", "required");
  } else {
    cfg.method = detail::read_method(doc["method"], errors);
  }
  if (doc.contains("seed")) {
    if (!doc["seed"].is_number_integer() && !doc["seed"].is_number_unsigned()) {
      errors.add("seed", "must be a 64-bit integer");
    } else {
      cfg.seed = doc["seed"].get<std::uint64_t>();
    }
  }
  cfg.batch_count = doc.value("batch_count", 1);
  if (cfg.batch_count < 1) errors.add("batch_count", "must be >= 1");
  cfg.output_dir = doc.value("output_dir", "out");
  if (doc.contains("estimators"))
    cfg.estimators = detail::read_estimators(doc["estimators"], errors);

  // Cross-block checks and model-aware defaults.
  if (!cfg.model.id.empty() && !cfg.method.kind.empty()) {
    if (cfg.model.id == "appendix-c") {
      if (cfg.model.cut && cfg.model.cut->dimension() != 1)
        errors.add("model.cut", "appendix-c uses a scalar cut parameter");
      if (!cfg.model.cut) {
        CutDistConfig cut;
        cut.kind = "uniform";
        cut.lower = {0.3};
        cut.upper = {1.0};
        cfg.model.cut = cut;
      }
      if (cfg.model.y_obs.empty()) cfg.model.y_obs = appendixc_default_observation();
    }
    const int d = detail::model_dimension(cfg.model);
    const int d_nu = detail::model_cut_dimension(cfg.model);
    if (cfg.model.id == "gaussian-conjugate" && cfg.model.f_kind == "affine") {
      if (static_cast<int>(cfg.model.f_matrix.size()) != d)
        errors.add("model.f.matrix", "row count must equal the data dimension");
      for (const auto& row : cfg.model.f_matrix) {
        if (static_cast<int>(row.size()) != d_nu)
          errors.add("model.f.matrix", "column count must equal the cut dimension");
      }
      if (!cfg.model.f_offset.empty() &&
          static_cast<int>(cfg.model.f_offset.size()) != d)
        errors.add("model.f.offset", "length must equal the data dimension");
    }
    if (cfg.model.id == "gaussian-conjugate" && cfg.model.f_kind == "identity" &&
        cfg.model.cut && static_cast<int>(cfg.model.cut->dimension()) != d)
      errors.add("model.cut", "identity map requires cut dimension equal to d");
    if (cfg.model.id == "external" && cfg.model.cut &&
        static_cast<int>(cfg.model.cut->dimension()) != cfg.model.d_nu)
      errors.add("model.cut", "cut distribution dimension must equal d_nu");

    // method.t and kernel.t are the same knob under two documented names.
    if (cfg.method.kernel.t) {
      if (cfg.method.kind != "smc") {
        errors.add("method.kernel.t", "not valid for the direct method");
      } else if (cfg.method.t >= 0) {
        errors.add("method.kernel.t", "conflicts with method.t; set only one");
      } else {
        cfg.method.t = *cfg.method.kernel.t;
      }
    }
    if (cfg.method.kind == "smc" && cfg.method.t < 0)
      cfg.method.t = (cfg.method.P > 0 || cfg.method.permute) ? 4 : 5;
    if (cfg.method.kind == "direct" && cfg.method.burn_in < 0)
      cfg.method.burn_in = cfg.method.L / 10;

    // Kernel defaults: slice width 1/10 of the support-box width when one
    // exists; Gaussian-model step sizes from the conjugate variance.
    KernelBlockConfig& kernel = cfg.method.kernel;
    if (!kernel.slice_width) {
      double width = 1.0;
      if (cfg.model.id == "appendix-c") {
        width = 6.0;
      } else if (cfg.model.id == "external" && cfg.model.box_lower) {
        double max_w = 0.0;
        for (std::size_t i = 0; i < cfg.model.box_lower->size(); ++i)
          max_w = std::max(max_w, (*cfg.model.box_upper)[i] - (*cfg.model.box_lower)[i]);
        width = max_w / 10.0;
      }
      kernel.slice_width = width;
    }
    if (!kernel.step_size) {
      if (cfg.model.id == "gaussian-conjugate" && d > 0) {
        const double prec = 1.0 / (cfg.model.sigma * cfg.model.sigma);
        const double prec_p = 1.0 / (cfg.model.sigma_p * cfg.model.sigma_p);
        const double c = 1.0 / (prec + prec_p);
        if (kernel.kind == "mala") {
          kernel.step_size = std::sqrt(c) * std::pow(static_cast<double>(d), -1.0 / 6.0);
        } else if (kernel.kind == "random-walk") {
          kernel.step_size = 2.38 * std::sqrt(c / static_cast<double>(d));
        }
      }
      if (!kernel.step_size && kernel.kind != "slice")
        errors.add("method.kernel.step_size",
                   "required for " + kernel.kind + " kernels on this model");
    }
    if (kernel.kind == "mala" && cfg.model.id != "gaussian-conjugate")
      errors.add("method.kernel.kind",
                 "mala requires a gradient, available only for gaussian-conjugate");

    if (cfg.method.kind == "smc" && cfg.method.metric == "scaled-euclidean" &&
        cfg.method.metric_scale.empty()) {
      if (cfg.model.cut && cfg.model.cut->kind == "uniform") {
        cfg.method.metric_scale.resize(cfg.model.cut->lower.size());
        for (std::size_t i = 0; i < cfg.method.metric_scale.size(); ++i)
          cfg.method.metric_scale[i] = cfg.model.cut->upper[i] - cfg.model.cut->lower[i];
      } else {
        errors.add("method.metric_scale",
                   "required for scaled-euclidean unless the cut distribution is box-uniform");
      }
    }

    for (std::size_t i = 0; i < cfg.estimators.size(); ++i) {
      const EstimatorConfig& est = cfg.estimators[i];
      const std::string path = "estimators[" + std::to_string(i) + "]";
      if (est.kind == "coordinate" && est.index >= d)
        errors.add(path + ".index", "out of range for the model dimension");
      if (est.kind == "indicator-box" && static_cast<int>(est.lower.size()) != d)
        errors.add(path, "indicator-box bounds must match the model dimension");
    }
  }
  errors.raise_if_any();

  // Default estimators: one coordinate projection per theta coordinate.
  if (cfg.estimators.empty()) {
    const int d = detail::model_dimension(cfg.model);
    for (int k = 0; k < d; ++k) {
      EstimatorConfig est;
      est.name = "theta_" + std::to_string(k + 1);
      est.kind = "coordinate";
      est.index = k;
      cfg.estimators.push_back(std::move(est));
    }
  }
  return cfg;
}

inline ExperimentConfig parse_config_text(const std::string& text) {
  Json doc;
  try {
    doc = Json::parse(text);
  } catch (const Json::exception& e) {
    fail(ErrorKind::configuration, std::string("config is not valid JSON: ") + e.what());
  }
  try {
    return parse_config_json(doc);
  } catch (const Json::exception& e) {
    // Wrong value type for a key (e.g. string where a number belongs).
    fail(ErrorKind::configuration, std::string("config type error: ") + e.what());
  }
}

inline ExperimentConfig parse_config(const std::string& path) {
  return parse_config_text(read_text_file(path));
}

/// Canonical echo of a parsed config: defaults filled, keys sorted. Parsing
/// the echo reproduces the same canonical form byte for byte.
inline Json canonical_config(const ExperimentConfig& cfg) {
  Json doc;
  Json model;
  model["id"] = cfg.model.id;
  const auto cut_json = [](const CutDistConfig& cut) {
    Json j;
    j["kind"] = cut.kind;
    if (cut.kind == "uniform") {
      j["lower"] = cut.lower;
      j["upper"] = cut.upper;
    } else if (cut.kind == "normal") {
      j["mean"] = cut.mean;
      j["sd"] = cut.sd;
    } else {
      j["value"] = cut.value;
    }
    return j;
  };
  if (cfg.model.id == "gaussian-conjugate") {
    model["y"] = cfg.model.y;
    model["sigma"] = cfg.model.sigma;
    model["sigma_p"] = cfg.model.sigma_p;
    Json f;
    f["kind"] = cfg.model.f_kind;
    if (cfg.model.f_kind == "affine") {
      f["matrix"] = cfg.model.f_matrix;
      if (!cfg.model.f_offset.empty()) f["offset"] = cfg.model.f_offset;
    }
    model["f"] = f;
    if (cfg.model.lipschitz_delta) model["lipschitz_delta"] = *cfg.model.lipschitz_delta;
    model["cut"] = cut_json(*cfg.model.cut);
  } else if (cfg.model.id == "appendix-c") {
    if (!cfg.model.y_obs.empty()) model["y_obs"] = cfg.model.y_obs;
    if (cfg.model.cut) model["cut"] = cut_json(*cfg.model.cut);
  } else {
    model["command"] = cfg.model.command;
    model["d"] = cfg.model.d;
    model["d_nu"] = cfg.model.d_nu;
    if (cfg.model.box_lower) {
      model["support_box"] = Json{{"lower", *cfg.model.box_lower},
                                  {"upper", *cfg.model.box_upper}};
    }
    model["cut"] = cut_json(*cfg.model.cut);
  }
  doc["model"] = model;

  Json method;
  method["kind"] = cfg.method.kind;
  method["S"] = cfg.method.S;
  if (cfg.method.kind == "smc") {
    method["N"] = cfg.method.N;
    method["t"] = cfg.method.t;
    method["P"] = cfg.method.P;
    method["permute"] = cfg.method.permute;
    method["metric"] = cfg.method.metric;
    if (!cfg.method.metric_scale.empty()) method["metric_scale"] = cfg.method.metric_scale;
    method["resampling"] = cfg.method.resampling;
    method["tsp_bottleneck"] = cfg.method.tsp_bottleneck;
  } else {
    method["L"] = cfg.method.L;
    method["burn_in"] = cfg.method.burn_in;
    method["thin"] = cfg.method.thin;
  }
  Json kernel;
  kernel["kind"] = cfg.method.kernel.kind;
  if (cfg.method.kernel.step_size) kernel["step_size"] = *cfg.method.kernel.step_size;
  kernel["slice_width"] = *cfg.method.kernel.slice_width;
  kernel["slice_max_doublings"] = cfg.method.kernel.slice_max_doublings;
  method["kernel"] = kernel;
  doc["method"] = method;

  doc["seed"] = cfg.seed;
  doc["batch_count"] = cfg.batch_count;
  doc["output_dir"] = cfg.output_dir;
  Json estimators = Json::array();
  for (const EstimatorConfig& est : cfg.estimators) {
    Json j;
    j["name"] = est.name;
    j["kind"] = est.kind;
    if (est.kind == "coordinate") {
      j["index"] = est.index;
    } else {
      j["lower"] = est.lower;
      j["upper"] = est.upper;
    }
    estimators.push_back(j);
  }
  doc["estimators"] = estimators;
  return doc;
}

}  // namespace cutsmc
