// SPDX-License-Identifier: Apache-2.0
#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <filesystem>
#include <string>

#include "../support/test_utils.hpp"
#include "cutsmc/cutsmc.hpp"

using namespace cutsmc;

namespace {

std::filesystem::path scratch_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("cutsmc-test-" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

ExperimentConfig small_gaussian_config(const std::string& out_dir, int batches) {
  ExperimentConfig cfg = parse_config_text(R"({
    "model": {
      "id": "gaussian-conjugate",
      "y": [2.0, 0.0],
      "cut": {"kind": "normal", "mean": [0.0, 0.0], "sd": [0.5, 0.5]}
    },
    "method": {"kind": "smc", "N": 16, "S": 6, "t": 2, "kernel": {"kind": "mala"}},
    "seed": 99
  })");
  cfg.output_dir = out_dir;
  cfg.batch_count = batches;
  return cfg;
}

}  // namespace

TEST_CASE("single batch equals the library call with the derived stream", "[experiment]") {
  const auto dir = scratch_dir("single");
  const ExperimentConfig cfg = small_gaussian_config(dir.string(), 1);
  const RunSummary summary = run_experiment(cfg);

  const ConditionalTargetModel model = build_model(cfg.model);
  const KernelConfig kernel = build_kernel(cfg.method, model);
  SmcConfig smc_cfg;
  smc_cfg.N = cfg.method.N;
  smc_cfg.t = cfg.method.t;
  smc_cfg.kernel = kernel;
  smc_cfg.seed = cfg.seed;
  RandomStream rng = RandomStream(cfg.seed).substream(stream_label::batch_base);
  const SmcRun run = run_cut_smc(model, cfg.method.S, smc_cfg, rng);
  const double direct_est =
      estimate(run, [](const CutPoint&, const Theta& th) { return th.values[0]; });
  REQUIRE(summary.pooled_estimates[0] == direct_est);
  std::filesystem::remove_all(dir);
}

TEST_CASE("batches pool by concatenation and estimator averaging", "[experiment]") {
  const auto dir = scratch_dir("batches");
  const ExperimentConfig cfg = small_gaussian_config(dir.string(), 8);
  const RunSummary summary = run_experiment(cfg, 2);
  REQUIRE(summary.batches.size() == 8);
  REQUIRE(summary.pooled_sample_count == 8u * 16u * 7u);

  double acc = 0.0;
  for (const BatchResult& batch : summary.batches) acc += batch.estimates[0];
  REQUIRE(summary.pooled_estimates[0] == acc / 8.0);

  // Per-batch wall-time keys back the min/max report.
  REQUIRE(summary.min_batch_seconds <= summary.max_batch_seconds);
  std::filesystem::remove_all(dir);
}

TEST_CASE("sample csv round-trips the estimator exactly", "[experiment]") {
  const auto dir = scratch_dir("roundtrip");
  ExperimentConfig cfg = small_gaussian_config(dir.string(), 3);
  const RunSummary summary = run_experiment(cfg);

  const std::string text = read_text_file(summary.sample_path);
  // Header: batch,s,particle + 2 nu + 2 theta columns.
  const std::string header = text.substr(0, text.find('\n'));
  REQUIRE(header == "batch,s,particle,nu_1,nu_2,theta_1,theta_2");

  const double replayed =
      estimate_from_samples_csv(summary.sample_path, cfg.estimators[0], 2, 2);
  REQUIRE(replayed == summary.pooled_estimates[0]);
  std::filesystem::remove_all(dir);
}

TEST_CASE("S=0 with two particles emits exactly two rows", "[experiment]") {
  const auto dir = scratch_dir("tworows");
  ExperimentConfig cfg = parse_config_text(R"({
    "model": {
      "id": "gaussian-conjugate",
      "y": [1.0],
      "cut": {"kind": "point", "value": [0.0]}
    },
    "method": {"kind": "smc", "N": 2, "S": 0, "t": 1, "kernel": {"kind": "random-walk"}},
    "seed": 3
  })");
  cfg.output_dir = dir.string();
  const RunSummary summary = run_experiment(cfg);
  const std::string text = read_text_file(summary.sample_path);
  int lines = 0;
  for (char c : text) lines += c == '\n' ? 1 : 0;
  REQUIRE(lines == 3);  // header + 2 data rows
  std::filesystem::remove_all(dir);
}

TEST_CASE("summary json round-trips numerics bit-exactly", "[experiment]") {
  const auto dir = scratch_dir("summary");
  const ExperimentConfig cfg = small_gaussian_config(dir.string(), 2);
  const RunSummary summary = run_experiment(cfg);

  const Json parsed = Json::parse(read_text_file(summary.summary_path));
  REQUIRE(parsed.contains("seed"));
  REQUIRE(parsed.contains("version"));
  REQUIRE(parsed["seed"].get<std::uint64_t>() == 99);
  REQUIRE(parsed["estimates"]["theta_1"]["pooled"].get<double>() ==
          summary.pooled_estimates[0]);
  for (const auto& batch : parsed["batches"])
    REQUIRE(batch.contains("wall_seconds"));
  // The config echo parses back to the same canonical form.
  REQUIRE(canonical_config(parse_config_json(parsed["config"])).dump() ==
          parsed["config"].dump());
  std::filesystem::remove_all(dir);
}

TEST_CASE("sample bytes are identical across thread counts", "[experiment]") {
  const auto dir1 = scratch_dir("threads1");
  const auto dir3 = scratch_dir("threads3");
  ExperimentConfig cfg1 = small_gaussian_config(dir1.string(), 5);
  ExperimentConfig cfg3 = small_gaussian_config(dir3.string(), 5);
  const RunSummary s1 = run_experiment(cfg1, 1);
  const RunSummary s3 = run_experiment(cfg3, 3);
  REQUIRE(read_text_file(s1.sample_path) == read_text_file(s3.sample_path));
  std::filesystem::remove_all(dir1);
  std::filesystem::remove_all(dir3);
}

TEST_CASE("direct experiments mirror the smc output format", "[experiment]") {
  const auto dir = scratch_dir("direct");
  ExperimentConfig cfg = parse_config_text(R"({
    "model": {
      "id": "gaussian-conjugate",
      "y": [2.0, 0.0],
      "cut": {"kind": "normal", "mean": [0.0, 0.0], "sd": [0.5, 0.5]}
    },
    "method": {"kind": "direct", "S": 2, "L": 40, "burn_in": 10},
    "seed": 12
  })");
  cfg.output_dir = dir.string();
  cfg.batch_count = 2;
  const RunSummary summary = run_experiment(cfg);
  REQUIRE(summary.method == "direct");
  REQUIRE(summary.pooled_sample_count == 2u * 3u * 30u);
  const std::string text = read_text_file(summary.sample_path);
  REQUIRE(text.substr(0, text.find('\n')) == "batch,s,particle,nu_1,nu_2,theta_1,theta_2");
  const Json parsed = Json::parse(read_text_file(summary.summary_path));
  REQUIRE(parsed["batches"][0].contains("max_split_rhat"));
  std::filesystem::remove_all(dir);
}

TEST_CASE("external model speaks the line protocol", "[experiment]") {
  // The helper binary serves the same Gaussian conjugate density.
  ExternalModelSpec spec;
  spec.command = {CUTSMC_EXTERNAL_MODEL_BIN, "2", "1.0", "1.0", "2.0", "0.0"};
  spec.d = 2;
  spec.d_nu = 2;
  spec.cut_sampler = normal_cut({0.0, 0.0}, {0.5, 0.5});
  const ConditionalTargetModel external = make_external_model(spec);
  const ConditionalTargetModel builtin = testutil::testbed_model();

  RandomStream rng(5);
  for (int i = 0; i < 25; ++i) {
    const CutPoint nu{{rng.normal(), rng.normal()}};
    const Theta theta{{rng.normal(), rng.normal()}};
    const double got = log_unnorm_conditional(external, nu, theta);
    const double want = log_unnorm_conditional(builtin, nu, theta);
    REQUIRE(got == Catch::Approx(want).epsilon(1e-12));
  }
}

TEST_CASE("external model failure surfaces as model evaluation", "[experiment]") {
  ExternalModelSpec spec;
  spec.command = {"/bin/true"};  // exits immediately, never answers
  spec.d = 1;
  spec.d_nu = 1;
  spec.cut_sampler = point_mass_cut(CutPoint{{0.0}});
  const ConditionalTargetModel model = make_external_model(spec);
  REQUIRE_THROWS_MATCHES(
      log_unnorm_conditional(model, CutPoint{{0.0}}, Theta{{0.0}}), Error,
      Catch::Matchers::Predicate<Error>([](const Error& e) {
        return e.kind() == ErrorKind::model_evaluation;
      }));
}
