// SPDX-License-Identifier: Apache-2.0
//
// End-to-end checks of the installed binary: subcommand wiring, exit codes,
// stdin/stdout framing.

#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#include <sys/wait.h>

#include "../support/test_utils.hpp"
#include "cutsmc/cutsmc.hpp"

using namespace cutsmc;

namespace {

struct CommandResult {
  int exit_code = -1;
  std::string out;
};

CommandResult run_cli(const std::string& args, const std::string& stdin_file = "",
                      const std::string& env_prefix = "") {
  const auto dir = std::filesystem::temp_directory_path();
  const std::string out_path = (dir / "cutsmc-cli-out.txt").string();
  std::string command = env_prefix + std::string(CUTSMC_CLI_BIN) + " " + args;
  if (!stdin_file.empty()) command += " < " + stdin_file;
  command += " > " + out_path + " 2>&1";
  const int status = std::system(command.c_str());
  CommandResult result;
  result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  result.out = read_text_file(out_path);
  return result;
}

std::filesystem::path write_temp(const std::string& name, const std::string& content) {
  const auto path = std::filesystem::temp_directory_path() / name;
  std::ofstream out(path);
  out << content;
  return path;
}

}  // namespace

TEST_CASE("bounds subcommand prints the report", "[cli]") {
  const auto res = run_cli("bounds --epsilon 0.5 --delta 0.1 --e-alpha 2 --json");
  REQUIRE(res.exit_code == 0);
  const Json doc = Json::parse(res.out);
  REQUIRE(doc["S_min"] == 33);
  REQUIRE(doc["N_min"] == 275);

  REQUIRE(run_cli("bounds --epsilon 1.5").exit_code == 2);
}

TEST_CASE("tsp-order emits zero-based indices of the permuted rows", "[cli]") {
  const auto input = write_temp("tsp-input.txt", "0\n5\n1\n3\n");
  const auto res = run_cli("tsp-order --input " + input.string());
  REQUIRE(res.exit_code == 0);
  REQUIRE(res.out == "0\n2\n3\n1\n");

  // stdin framing works identically.
  const auto res2 = run_cli("tsp-order", input.string());
  REQUIRE(res2.out == res.out);

  REQUIRE(run_cli("tsp-order --input /nonexistent.txt").exit_code == 4);
}

TEST_CASE("run-smc writes outputs and honors thread counts", "[cli]") {
  const auto dir = std::filesystem::temp_directory_path() / "cutsmc-cli-run";
  std::filesystem::remove_all(dir);
  const auto config = write_temp("cli-smc.json", R"({
    "model": {
      "id": "gaussian-conjugate",
      "y": [2.0, 0.0],
      "cut": {"kind": "normal", "mean": [0.0, 0.0], "sd": [0.5, 0.5]}
    },
    "method": {"kind": "smc", "N": 8, "S": 4, "t": 1, "kernel": {"kind": "mala"}},
    "seed": 5,
    "batch_count": 4,
    "output_dir": ")" + (dir / "a").string() + R"("
  })");
  REQUIRE(run_cli("run-smc --config " + config.string()).exit_code == 0);
  REQUIRE(std::filesystem::exists(dir / "a" / "samples.csv"));
  REQUIRE(std::filesystem::exists(dir / "a" / "summary.json"));

  const auto res_b =
      run_cli("run-smc --config " + config.string() + " --threads 4 --out " +
              (dir / "b").string());
  REQUIRE(res_b.exit_code == 0);
  REQUIRE(read_text_file((dir / "a" / "samples.csv").string()) ==
          read_text_file((dir / "b" / "samples.csv").string()));

  // CUTSMC_THREADS is the fallback when --threads is absent.
  const auto res_c = run_cli("run-smc --config " + config.string() + " --out " +
                                 (dir / "c").string(),
                             "", "CUTSMC_THREADS=2 ");
  REQUIRE(res_c.exit_code == 0);
  REQUIRE(read_text_file((dir / "a" / "samples.csv").string()) ==
          read_text_file((dir / "c" / "samples.csv").string()));

  // run-direct rejects an smc config.
  REQUIRE(run_cli("run-direct --config " + config.string()).exit_code == 2);
  // Missing config file is an io failure.
  REQUIRE(run_cli("run-smc --config /nonexistent.json").exit_code == 4);
  std::filesystem::remove_all(dir);
}

TEST_CASE("compare judges sample files against thresholds", "[cli]") {
  const auto dir = std::filesystem::temp_directory_path() / "cutsmc-cli-cmp";
  std::filesystem::remove_all(dir);
  const auto config = write_temp("cli-cmp.json", R"({
    "model": {
      "id": "gaussian-conjugate",
      "y": [2.0, 0.0],
      "cut": {"kind": "normal", "mean": [0.0, 0.0], "sd": [0.5, 0.5]}
    },
    "method": {"kind": "smc", "N": 32, "S": 20, "t": 2, "kernel": {"kind": "mala"}},
    "seed": 6,
    "batch_count": 1,
    "output_dir": ")" + dir.string() + R"("
  })");
  REQUIRE(run_cli("run-smc --config " + config.string()).exit_code == 0);
  const std::string samples = (dir / "samples.csv").string();

  const auto self = run_cli("compare " + samples + " " + samples + " --json");
  REQUIRE(self.exit_code == 0);
  const Json doc = Json::parse(self.out);
  REQUIRE(doc["pass"] == true);
  for (const auto& ks : doc["marginal_ks"]) REQUIRE(ks.get<double>() == 0.0);

  // An unsatisfiable threshold flips the verdict and the exit code.
  const auto strict = run_cli("compare " + samples + " " + samples +
                              " --ed-threshold -1 --json");
  REQUIRE(strict.exit_code == 3);
}

TEST_CASE("study-hamiltonian reports the three proportions", "[cli]") {
  const auto res = run_cli(
      "--seed 4 study-hamiltonian --points 20 --resamples 60 --threshold 2.5 "
      "--sd 1 --json");
  REQUIRE(res.exit_code == 0);
  const Json doc = Json::parse(res.out);
  REQUIRE(doc["prop_random_exceed"].get<double>() >= 0.0);
  REQUIRE(doc["prop_permuted_exceed"].get<double>() <=
          doc["prop_random_exceed"].get<double>());
  REQUIRE(doc["prop_permuted_strictly_less"].get<double>() > 0.9);
}

TEST_CASE("chi2 subcommand evaluates consecutive divergences", "[cli]") {
  const auto config = write_temp("cli-chi2.json", R"({
    "model": {
      "id": "gaussian-conjugate",
      "y": [0.0],
      "cut": {"kind": "normal", "mean": [0.0], "sd": [0.5]}
    },
    "method": {"kind": "smc", "N": 8, "S": 2, "t": 1, "kernel": {"kind": "mala"}},
    "seed": 6
  })");
  const auto points = write_temp("cli-chi2-points.txt", "0\n0.2\n0.4\n");
  const auto res = run_cli("chi2 --config " + config.string() + " --points " +
                           points.string() + " --mc 20000 --json");
  REQUIRE(res.exit_code == 0);
  const Json doc = Json::parse(res.out);
  REQUIRE(doc.size() == 2);
  // w = c = 1/2, f = identity, |dnu| = 0.2: chi2 = exp(0.02) - 1.
  REQUIRE(doc[0]["closed_form"].get<double>() ==
          Catch::Approx(0.020201340026755776).epsilon(1e-12));
  const double mc = doc[0]["mc_estimate"].get<double>();
  REQUIRE(std::abs(mc - doc[0]["closed_form"].get<double>()) < 0.05);

  // Points whose width disagrees with the model's cut dimension are rejected.
  const auto wide = write_temp("cli-chi2-wide.txt", "0 0\n0.2 0.1\n");
  REQUIRE(run_cli("chi2 --config " + config.string() + " --points " + wide.string())
              .exit_code == 2);
}

TEST_CASE("external model configs run end to end", "[cli]") {
  const auto dir = std::filesystem::temp_directory_path() / "cutsmc-cli-ext";
  std::filesystem::remove_all(dir);
  const auto config = write_temp("cli-ext.json", R"({
    "model": {
      "id": "external",
      "command": [")" CUTSMC_EXTERNAL_MODEL_BIN R"(", "1", "1.0", "1.0", "1.0"],
      "d": 1,
      "d_nu": 1,
      "cut": {"kind": "uniform", "lower": [0.0], "upper": [1.0]},
      "support_box": {"lower": [-20.0], "upper": [20.0]}
    },
    "method": {"kind": "smc", "N": 4, "S": 1, "t": 1,
               "kernel": {"kind": "slice", "slice_width": 1.0}},
    "seed": 8,
    "output_dir": ")" + dir.string() + R"("
  })");
  const auto res = run_cli("run-smc --config " + config.string());
  REQUIRE(res.exit_code == 0);
  REQUIRE(std::filesystem::exists(dir / "samples.csv"));
  std::filesystem::remove_all(dir);
}
