// SPDX-License-Identifier: Apache-2.0
#include <catch2/catch_amalgamated.hpp>

#include <string>

#include "../support/test_utils.hpp"
#include "cutsmc/cutsmc.hpp"

using namespace cutsmc;

namespace {

const char* kMinimalGaussian = R"({
  "model": {
    "id": "gaussian-conjugate",
    "y": [2.0, 0.0],
    "cut": {"kind": "normal", "mean": [0.0, 0.0], "sd": [0.5, 0.5]}
  },
  "method": {"kind": "smc", "N": 16, "S": 5},
  "seed": 7
})";

}  // namespace

TEST_CASE("minimal gaussian config parses with defaults filled", "[config]") {
  const ExperimentConfig cfg = parse_config_text(kMinimalGaussian);
  REQUIRE(cfg.model.id == "gaussian-conjugate");
  REQUIRE(cfg.method.t == 5);                    // plain SMC default
  REQUIRE(cfg.method.kernel.kind == "slice");    // default kernel
  REQUIRE(*cfg.method.kernel.slice_width == 1.0);
  REQUIRE(cfg.batch_count == 1);
  REQUIRE(cfg.estimators.size() == 2);           // theta_1, theta_2 projections
  REQUIRE(cfg.estimators[0].name == "theta_1");

  // The canonical echo is a fixed point of parse -> canonicalize.
  const Json echo = canonical_config(cfg);
  const ExperimentConfig reparsed = parse_config_json(echo);
  REQUIRE(canonical_config(reparsed).dump() == echo.dump());
}

TEST_CASE("tempered and permuted methods default to t = 4", "[config]") {
  Json doc = Json::parse(kMinimalGaussian);
  doc["method"]["P"] = 1;
  REQUIRE(parse_config_json(doc).method.t == 4);
  Json doc2 = Json::parse(kMinimalGaussian);
  doc2["method"]["permute"] = true;
  REQUIRE(parse_config_json(doc2).method.t == 4);
}

TEST_CASE("validation names the offending key", "[config]") {
  Json doc = Json::parse(kMinimalGaussian);
  doc["method"]["N"] = -3;
  try {
    parse_config_json(doc);
    FAIL("expected configuration error");
  } catch (const Error& e) {
    REQUIRE(e.kind() == ErrorKind::configuration);
    REQUIRE(std::string(e.what()).find("method.N") != std::string::npos);
  }
}

TEST_CASE("mixing smc and direct keys is rejected", "[config]") {
  Json doc = Json::parse(kMinimalGaussian);
  doc["method"]["L"] = 1000;  // direct-only key inside an smc block
  try {
    parse_config_json(doc);
    FAIL("expected configuration error");
  } catch (const Error& e) {
    REQUIRE(std::string(e.what()).find("method.L") != std::string::npos);
  }
}

TEST_CASE("unknown keys are strict errors and problems accumulate", "[config]") {
  Json doc = Json::parse(kMinimalGaussian);
  doc["model"]["bogus"] = 1;
  doc["method"]["N"] = 0;
  doc["batch_count"] = 0;
  try {
    parse_config_json(doc);
    FAIL("expected configuration error");
  } catch (const Error& e) {
    const std::string what = e.what();
    REQUIRE(what.find("model.bogus") != std::string::npos);
    REQUIRE(what.find("method.N") != std::string::npos);
    REQUIRE(what.find("batch_count") != std::string::npos);
  }
}

TEST_CASE("estimator bounds are validated against the model", "[config]") {
  Json doc = Json::parse(kMinimalGaussian);
  doc["estimators"] = Json::array(
      {Json{{"name", "bad"}, {"kind", "coordinate"}, {"index", 5}}});
  REQUIRE_THROWS_AS(parse_config_json(doc), Error);

  Json doc2 = Json::parse(kMinimalGaussian);
  doc2["estimators"] = Json::array(
      {Json{{"name", "box"},
            {"kind", "indicator-box"},
            {"lower", Json::array({0.0, -1.0})},
            {"upper", Json::array({2.0, 1.0})}}});
  const ExperimentConfig cfg = parse_config_json(doc2);
  REQUIRE(cfg.estimators.size() == 1);
  REQUIRE(cfg.estimators[0].kind == "indicator-box");
}

TEST_CASE("appendix-c defaults are materialized", "[config]") {
  const ExperimentConfig cfg = parse_config_text(R"({
    "model": {"id": "appendix-c"},
    "method": {"kind": "direct", "S": 9},
    "seed": 1
  })");
  REQUIRE(cfg.model.cut.has_value());
  REQUIRE(cfg.model.cut->kind == "uniform");
  REQUIRE(cfg.model.cut->lower == std::vector<double>{0.3});
  REQUIRE(cfg.model.cut->upper == std::vector<double>{1.0});
  REQUIRE(cfg.model.y_obs == appendixc_default_observation());
  REQUIRE(cfg.method.burn_in == 100);                // L/10
  REQUIRE(cfg.method.L == 1000);                     // matches the protocol default
  REQUIRE(*cfg.method.kernel.slice_width == 6.0);    // box width / 10
}

TEST_CASE("scaled-euclidean metric derives scales from a box-uniform cut", "[config]") {
  const ExperimentConfig cfg = parse_config_text(R"({
    "model": {
      "id": "gaussian-conjugate",
      "y": [0.0, 0.0],
      "cut": {"kind": "uniform", "lower": [0.0, 10.0], "upper": [1.0, 30.0]}
    },
    "method": {"kind": "smc", "S": 3, "permute": true, "metric": "scaled-euclidean"},
    "seed": 2
  })");
  REQUIRE(cfg.method.metric_scale == std::vector<double>{1.0, 20.0});

  // A normal cut without explicit scales cannot use the scaled metric.
  REQUIRE_THROWS_AS(parse_config_text(R"({
    "model": {
      "id": "gaussian-conjugate",
      "y": [0.0],
      "cut": {"kind": "normal", "mean": [0.0], "sd": [1.0]}
    },
    "method": {"kind": "smc", "S": 3, "permute": true, "metric": "scaled-euclidean"},
    "seed": 2
  })"),
                    Error);
}

TEST_CASE("malformed documents fail as configuration errors", "[config]") {
  REQUIRE_THROWS_MATCHES(parse_config_text("{not json"), Error,
                         Catch::Matchers::Predicate<Error>([](const Error& e) {
                           return e.kind() == ErrorKind::configuration;
                         }));
  Json doc = Json::parse(kMinimalGaussian);
  doc["seed"] = "not-a-number";
  REQUIRE_THROWS_AS(parse_config_json(doc), Error);

  // Wrong value types surface as configuration errors through the text path.
  Json typed = Json::parse(kMinimalGaussian);
  typed["method"]["N"] = "twelve";
  REQUIRE_THROWS_MATCHES(parse_config_text(typed.dump()), Error,
                         Catch::Matchers::Predicate<Error>([](const Error& e) {
                           return e.kind() == ErrorKind::configuration;
                         }));
  REQUIRE_THROWS_MATCHES(parse_config("/nonexistent/config.json"), Error,
                         Catch::Matchers::Predicate<Error>([](const Error& e) {
                           return e.kind() == ErrorKind::io;
                         }));
}

TEST_CASE("kernel.t is an accepted alias for method.t", "[config]") {
  Json doc = Json::parse(kMinimalGaussian);
  doc["method"].erase("N");
  doc["method"]["kernel"] = Json{{"kind", "slice"}, {"t", 3}};
  REQUIRE(parse_config_json(doc).method.t == 3);

  Json conflict = Json::parse(kMinimalGaussian);
  conflict["method"]["t"] = 2;
  conflict["method"]["kernel"] = Json{{"kind", "slice"}, {"t", 3}};
  try {
    parse_config_json(conflict);
    FAIL("expected configuration error");
  } catch (const Error& e) {
    REQUIRE(std::string(e.what()).find("method.kernel.t") != std::string::npos);
  }
}

TEST_CASE("shipped presets parse and follow the documented settings", "[config]") {
  const std::string dir = CUTSMC_PRESETS_DIR;
  const ExperimentConfig plain = parse_config(dir + "/gaussian-smc.json");
  REQUIRE(plain.method.N == 25);
  REQUIRE(plain.method.t == 5);
  REQUIRE(plain.batch_count == 8);

  const ExperimentConfig tempered = parse_config(dir + "/gaussian-tempered.json");
  REQUIRE(tempered.method.N == 10);
  REQUIRE(tempered.method.P == 1);
  REQUIRE(tempered.method.t == 4);

  const ExperimentConfig permuted = parse_config(dir + "/appendixc-permuted.json");
  REQUIRE(permuted.method.permute);
  REQUIRE(permuted.method.t == 4);
  REQUIRE(permuted.method.metric_scale == std::vector<double>{0.7});

  const ExperimentConfig direct = parse_config(dir + "/appendixc-direct.json");
  REQUIRE(direct.method.L == 1000);
  REQUIRE(direct.method.burn_in == 100);

  for (const char* name :
       {"gaussian-smc", "gaussian-tempered", "gaussian-permuted", "gaussian-direct",
        "appendixc-smc", "appendixc-tempered", "appendixc-permuted",
        "appendixc-direct"}) {
    REQUIRE_NOTHROW(parse_config(dir + "/" + name + ".json"));
  }
}

TEST_CASE("gaussian kernel step defaults follow the conjugate variance", "[config]") {
  Json doc = Json::parse(kMinimalGaussian);
  doc["method"]["kernel"] = Json{{"kind", "mala"}};
  const ExperimentConfig cfg = parse_config_json(doc);
  // c = 0.5, d = 2: step = sqrt(0.5) * 2^(-1/6).
  REQUIRE(*cfg.method.kernel.step_size ==
          Catch::Approx(std::sqrt(0.5) * std::pow(2.0, -1.0 / 6.0)).epsilon(1e-14));

  // mala without a gradient source is rejected on other models.
  REQUIRE_THROWS_AS(parse_config_text(R"({
    "model": {"id": "appendix-c"},
    "method": {"kind": "smc", "S": 3, "kernel": {"kind": "mala", "step_size": 0.1}},
    "seed": 1
  })"),
                    Error);
}
