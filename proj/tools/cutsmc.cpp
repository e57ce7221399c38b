// SPDX-License-Identifier: Apache-2.0
//
// cutsmc: sequential Monte Carlo for cut-Bayesian posteriors.
//
// Subcommands: bounds, chi2, tsp-order, run-smc, run-direct, compare,
// study-hamiltonian. Exit codes: 0 success, 2 configuration error,
// 3 numerical failure, 4 I/O error.

#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "cutsmc/cutsmc.hpp"

namespace {

using cutsmc::Json;

int resolve_threads(std::optional<int> flag) {
  if (flag) return *flag;
  if (const char* env = std::getenv("CUTSMC_THREADS")) {
    try {
      const int value = std::stoi(env);
      if (value >= 1) return value;
    } catch (...) {
      throw cutsmc::Error(cutsmc::ErrorKind::configuration,
                          "CUTSMC_THREADS is not a positive integer");
    }
  }
  return 1;
}

cutsmc::ExperimentConfig load_config(const std::string& path,
                                     std::optional<std::uint64_t> seed_override,
                                     std::optional<std::string> out_override,
                                     const char* expected_method) {
  cutsmc::ExperimentConfig cfg = cutsmc::parse_config(path);
  if (seed_override) cfg.seed = *seed_override;
  if (out_override) cfg.output_dir = *out_override;
  if (cfg.method.kind != expected_method) {
    throw cutsmc::Error(cutsmc::ErrorKind::configuration,
                        std::string("config method.kind must be '") + expected_method +
                            "' for this subcommand");
  }
  return cfg;
}

void print_run_summary(const cutsmc::RunSummary& summary) {
  std::cout << "method: " << summary.method << "  batches: " << summary.batch_count
            << "  pooled samples: " << summary.pooled_sample_count << "\n";
  for (std::size_t e = 0; e < summary.estimator_names.size(); ++e) {
    std::cout << "  " << summary.estimator_names[e] << " = "
              << cutsmc::format_double(summary.pooled_estimates[e]) << "\n";
  }
  std::cout << "  batch wall time [s]: min "
            << cutsmc::format_double(summary.min_batch_seconds) << ", max "
            << cutsmc::format_double(summary.max_batch_seconds) << "\n";
  std::cout << "  samples: " << summary.sample_path << "\n";
  std::cout << "  summary: " << summary.summary_path << "\n";
}

cutsmc::DistanceMetric metric_from_flags(const std::string& kind,
                                         const std::vector<double>& scale) {
  cutsmc::DistanceMetric metric;
  if (kind == "scaled-euclidean") {
    metric.kind = cutsmc::DistanceMetric::Kind::scaled_euclidean;
    if (scale.empty()) {
      throw cutsmc::Error(cutsmc::ErrorKind::configuration,
                          "--scale is required with --metric scaled-euclidean");
    }
    metric.scale = scale;
  } else if (kind != "euclidean") {
    throw cutsmc::Error(cutsmc::ErrorKind::configuration,
                        "--metric must be euclidean or scaled-euclidean");
  }
  return metric;
}

cutsmc::CutSequence sequence_from_rows(const std::vector<std::vector<double>>& rows) {
  cutsmc::CutSequence seq;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    seq.points.push_back(cutsmc::CutPoint{rows[i]});
    seq.retained.push_back(true);
    seq.provenance.push_back(cutsmc::Provenance::independent);
    seq.origin_index.push_back(static_cast<int>(i));
  }
  return seq;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sequential Monte Carlo for cut-Bayesian posterior computation"};
  app.require_subcommand(1);
  app.fallthrough();  // accept global flags after the subcommand name

  std::optional<std::uint64_t> seed_flag;
  std::optional<std::string> out_flag;
  std::optional<int> threads_flag;
  app.add_option("--seed", seed_flag, "Seed override (64-bit integer)");
  app.add_option("--out", out_flag, "Output directory override");
  app.add_option("--threads", threads_flag,
                 "Worker threads (batch granularity); CUTSMC_THREADS is the fallback");

  // bounds
  auto* bounds_cmd = app.add_subcommand(
      "bounds", "Particle/step requirements from the concentration bounds");
  double b_epsilon = 0.5, b_delta = 0.1, b_ealpha = 2.0;
  int b_P = 0, b_t = 1;
  std::string b_source = "user-supplied";
  bool b_json = false;
  bounds_cmd->add_option("--epsilon", b_epsilon, "Accuracy epsilon in (0,1)");
  bounds_cmd->add_option("--delta", b_delta, "Failure probability delta in (0,1/4)");
  bounds_cmd->add_option("--e-alpha", b_ealpha, "Chi-squared envelope E_alpha > 1");
  bounds_cmd->add_option("--e-alpha-source", b_source,
                         "Provenance note recorded in the report (user-supplied | "
                         "closed-form-sweep | mc-estimate)");
  bounds_cmd->add_option("--P", b_P, "Tempering interpolants per segment");
  bounds_cmd->add_option("--t-assumed", b_t, "Mutation steps assumed in the cost line");
  bounds_cmd->add_flag("--json", b_json, "Emit machine-readable JSON on stdout");

  // chi2
  auto* chi2_cmd = app.add_subcommand(
      "chi2", "Consecutive chi-squared divergences for a cut sequence");
  std::string chi2_config, chi2_points;
  int chi2_mc = 0;
  bool chi2_json = false;
  chi2_cmd->add_option("--config", chi2_config, "Experiment config (gaussian-conjugate)")
      ->required();
  chi2_cmd->add_option("--points", chi2_points,
                       "Whitespace-delimited cut matrix (one point per row); stdin if omitted");
  chi2_cmd->add_option("--mc", chi2_mc, "Also estimate by self-normalized MC with n draws");
  chi2_cmd->add_flag("--json", chi2_json, "Emit machine-readable JSON on stdout");

  // tsp-order
  auto* tsp_cmd = app.add_subcommand(
      "tsp-order", "Permute cut draws along an approximate shortest Hamiltonian path");
  std::string tsp_input, tsp_metric = "euclidean";
  std::vector<double> tsp_scale;
  bool tsp_bottleneck = false;
  tsp_cmd->add_option("--input", tsp_input,
                      "Whitespace-delimited matrix file; stdin if omitted");
  tsp_cmd->add_option("--metric", tsp_metric, "euclidean | scaled-euclidean");
  tsp_cmd->add_option("--scale", tsp_scale, "Per-coordinate scales for scaled-euclidean");
  tsp_cmd->add_flag("--bottleneck", tsp_bottleneck,
                    "Extra 2-opt pass minimizing the maximum edge");

  // run-smc / run-direct
  auto* smc_cmd = app.add_subcommand("run-smc", "Run a cut-Bayes SMC experiment");
  std::string smc_config;
  int smc_particle_threads = 1;
  smc_cmd->add_option("--config", smc_config, "Experiment config path")->required();
  smc_cmd->add_option("--particle-threads", smc_particle_threads,
                      "Opt-in within-batch particle parallelism");
  auto* direct_cmd =
      app.add_subcommand("run-direct", "Run the direct-sampling baseline");
  std::string direct_config;
  direct_cmd->add_option("--config", direct_config, "Experiment config path")->required();

  // compare
  auto* compare_cmd = app.add_subcommand(
      "compare", "Two-sample comparison of emitted sample files");
  std::string cmp_a, cmp_b;
  double cmp_ks = 0.10, cmp_ed = 0.05;
  int cmp_max_rows = 4000;
  bool cmp_json = false;
  compare_cmd->add_option("file_a", cmp_a, "First sample CSV")->required();
  compare_cmd->add_option("file_b", cmp_b, "Second sample CSV")->required();
  compare_cmd->add_option("--ks-threshold", cmp_ks, "Per-marginal KS pass threshold");
  compare_cmd->add_option("--ed-threshold", cmp_ed, "Energy-distance pass threshold");
  compare_cmd->add_option("--max-rows", cmp_max_rows,
                          "Deterministic stride subsample cap for the energy distance");
  compare_cmd->add_flag("--json", cmp_json, "Emit machine-readable JSON on stdout");

  // study-hamiltonian
  auto* study_cmd = app.add_subcommand(
      "study-hamiltonian", "Resampling study of max consecutive distance");
  int st_dim = 2, st_points = 25, st_resamples = 1000;
  double st_threshold = 10.0, st_rho = 0.9, st_sd = 3.0;
  bool st_json = false;
  study_cmd->add_option("--dim", st_dim, "Cut-space dimension");
  study_cmd->add_option("--points", st_points, "Draws per resample");
  study_cmd->add_option("--resamples", st_resamples, "Number of resamples");
  study_cmd->add_option("--threshold", st_threshold, "Exceedance threshold");
  study_cmd->add_option("--rho", st_rho, "Equicorrelation of the normal sampler");
  study_cmd->add_option("--sd", st_sd, "Per-coordinate standard deviation");
  study_cmd->add_flag("--json", st_json, "Emit machine-readable JSON on stdout");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (bounds_cmd->parsed()) {
      cutsmc::BoundsRequest req;
      req.epsilon = b_epsilon;
      req.delta = b_delta;
      req.e_alpha = b_ealpha;
      req.P = b_P;
      req.t_assumed = b_t;
      req.e_alpha_source = b_source;
      const cutsmc::BoundsReport report = cutsmc::bounds_report(req);
      if (b_json) {
        Json doc;
        doc["S_min"] = report.S_min;
        doc["N_min"] = report.N_min;
        doc["total_cost"] = report.total_cost;
        doc["tempered"] = report.tempered;
        doc["e_alpha"] = report.e_alpha;
        doc["e_alpha_source"] = report.e_alpha_source;
        doc["t_note"] = report.t_note;
        std::cout << doc.dump(2) << "\n";
      } else {
        std::cout << "S_min = " << report.S_min << "\n"
                  << "N_min = " << report.N_min
                  << (report.tempered ? "  (tempered)" : "") << "\n"
                  << "E_alpha = " << cutsmc::format_double(report.e_alpha) << " ("
                  << report.e_alpha_source << ")\n"
                  << "total cost N*S*t = " << report.total_cost << " (t = " << b_t
                  << " assumed)\n"
                  << "t requirement: " << report.t_note << "\n";
      }
      return 0;
    }

    if (chi2_cmd->parsed()) {
      const cutsmc::ExperimentConfig cfg = cutsmc::parse_config(chi2_config);
      if (cfg.model.id != "gaussian-conjugate") {
        throw cutsmc::Error(cutsmc::ErrorKind::configuration,
                            "chi2 closed form requires the gaussian-conjugate model");
      }
      const cutsmc::GaussianConjugateSpec spec = cutsmc::build_gaussian_spec(cfg.model);
      const auto rows = chi2_points.empty() ? cutsmc::read_matrix(std::cin)
                                            : cutsmc::read_matrix_file(chi2_points);
      if (rows.size() < 2) {
        throw cutsmc::Error(cutsmc::ErrorKind::undefined_input,
                            "chi2 requires at least two cut points");
      }
      const cutsmc::ConditionalTargetModel model = cutsmc::build_model(cfg.model);
      if (rows.front().size() != static_cast<std::size_t>(model.d_nu)) {
        throw cutsmc::Error(cutsmc::ErrorKind::invalid_input,
                            "cut points have " + std::to_string(rows.front().size()) +
                                " coordinates but the model expects " +
                                std::to_string(model.d_nu));
      }
      cutsmc::RandomStream rng(seed_flag.value_or(cfg.seed));
      Json out = Json::array();
      for (std::size_t i = 0; i + 1 < rows.size(); ++i) {
        const cutsmc::CutPoint a{rows[i]};
        const cutsmc::CutPoint b{rows[i + 1]};
        const cutsmc::Chi2Result closed = cutsmc::chi2_gaussian_closed_form(spec, a, b);
        Json entry;
        entry["pair"] = i;
        entry["closed_form"] = closed.overflow ? Json("inf") : Json(closed.value);
        entry["log_factor"] = closed.log_factor;
        if (closed.overflow)
          entry["advice"] = "chi^2 overflow: temper (increase P) or permute the sequence";
        if (chi2_mc > 0) {
          cutsmc::RandomStream sub = rng.substream(i);
          const cutsmc::Chi2McEstimate mc = cutsmc::chi2_self_normalized_mc(
              model, a, b, model.exact_initial_sampler, chi2_mc, sub);
          entry["mc_estimate"] = mc.estimate;
          entry["mc_std_error"] = mc.std_error;
        }
        out.push_back(entry);
      }
      if (chi2_json) {
        std::cout << out.dump(2) << "\n";
      } else {
        for (const auto& entry : out) {
          std::cout << "pair " << entry["pair"] << ": chi2 = "
                    << (entry["closed_form"].is_string()
                            ? std::string("inf (overflow)")
                            : cutsmc::format_double(entry["closed_form"].get<double>()));
          if (entry.contains("mc_estimate")) {
            std::cout << "  mc = "
                      << cutsmc::format_double(entry["mc_estimate"].get<double>())
                      << " +- "
                      << cutsmc::format_double(entry["mc_std_error"].get<double>());
          }
          std::cout << "\n";
        }
      }
      return 0;
    }

    if (tsp_cmd->parsed()) {
      const auto rows = tsp_input.empty() ? cutsmc::read_matrix(std::cin)
                                          : cutsmc::read_matrix_file(tsp_input);
      if (rows.empty()) {
        throw cutsmc::Error(cutsmc::ErrorKind::io, "tsp-order received no points");
      }
      const cutsmc::DistanceMetric metric = metric_from_flags(tsp_metric, tsp_scale);
      const cutsmc::CutSequence seq = sequence_from_rows(rows);
      const cutsmc::CutSequence permuted =
          cutsmc::permute_tsp(seq, metric, tsp_bottleneck);
      for (int idx : permuted.origin_index) std::cout << idx << "\n";
      return 0;
    }

    if (smc_cmd->parsed() || direct_cmd->parsed()) {
      const bool is_smc = smc_cmd->parsed();
      const cutsmc::ExperimentConfig cfg =
          load_config(is_smc ? smc_config : direct_config, seed_flag, out_flag,
                      is_smc ? "smc" : "direct");
      const int threads = resolve_threads(threads_flag);
      const cutsmc::RunSummary summary =
          cutsmc::run_experiment(cfg, threads, true, is_smc ? smc_particle_threads : 1);
      print_run_summary(summary);
      return 0;
    }

    if (compare_cmd->parsed()) {
      const auto load_rows = [](const std::string& path) {
        const std::string text = cutsmc::read_text_file(path);
        std::vector<std::vector<double>> rows;
        std::size_t pos = text.find('\n');
        cutsmc::require(pos != std::string::npos, cutsmc::ErrorKind::io,
                        "sample file has no header: " + path);
        // Count theta columns from the header.
        int theta_cols = 0;
        {
          const std::string header = text.substr(0, pos);
          std::size_t at = 0;
          while ((at = header.find("theta_", at)) != std::string::npos) {
            ++theta_cols;
            at += 6;
          }
        }
        cutsmc::require(theta_cols > 0, cutsmc::ErrorKind::io,
                        "sample file header has no theta columns: " + path);
        while (pos < text.size()) {
          const std::size_t end = text.find('\n', pos + 1);
          const std::string line = text.substr(
              pos + 1, end == std::string::npos ? std::string::npos : end - pos - 1);
          pos = end == std::string::npos ? text.size() : end;
          if (line.empty()) continue;
          std::vector<double> row;
          std::size_t begin = line.size();
          for (int k = 0; k < theta_cols; ++k) {
            const std::size_t comma = line.rfind(',', begin - 1);
            row.push_back(cutsmc::parse_double(
                line.substr(comma + 1, begin - comma - 1)));
            begin = comma;
          }
          std::reverse(row.begin(), row.end());
          rows.push_back(std::move(row));
        }
        return rows;
      };
      const auto rows_a = load_rows(cmp_a);
      const auto rows_b = load_rows(cmp_b);
      cutsmc::ComparisonThresholds thresholds;
      thresholds.ks = cmp_ks;
      thresholds.energy = cmp_ed;
      auto sub_a = cutsmc::stride_subsample(rows_a, static_cast<std::size_t>(cmp_max_rows));
      auto sub_b = cutsmc::stride_subsample(rows_b, static_cast<std::size_t>(cmp_max_rows));
      cutsmc::ComparisonReport report = cutsmc::compare_samples(rows_a, rows_b, thresholds);
      // Energy distance on the stride subsample (KS uses the full pools).
      report.energy = cutsmc::energy_distance(sub_a, sub_b);
      report.pass = report.energy <= thresholds.energy;
      for (double ks : report.marginal_ks) report.pass = report.pass && ks <= thresholds.ks;
      if (cmp_json) {
        Json doc;
        doc["marginal_ks"] = report.marginal_ks;
        doc["energy_distance"] = report.energy;
        doc["n_a"] = report.n_a;
        doc["n_b"] = report.n_b;
        doc["ks_threshold"] = thresholds.ks;
        doc["ed_threshold"] = thresholds.energy;
        doc["pass"] = report.pass;
        std::cout << doc.dump(2) << "\n";
      } else {
        std::cout << "n_a = " << report.n_a << ", n_b = " << report.n_b << "\n";
        for (std::size_t k = 0; k < report.marginal_ks.size(); ++k) {
          std::cout << "KS[theta_" << (k + 1)
                    << "] = " << cutsmc::format_double(report.marginal_ks[k]) << "\n";
        }
        std::cout << "energy distance = " << cutsmc::format_double(report.energy) << "\n"
                  << (report.pass ? "PASS" : "FAIL") << "\n";
      }
      return report.pass ? 0 : 3;
    }

    if (study_cmd->parsed()) {
      cutsmc::RandomStream rng(seed_flag.value_or(0));
      const auto sampler = cutsmc::correlated_normal_sampler(st_dim, st_rho, st_sd);
      const cutsmc::HamiltonianStudyResult result = cutsmc::hamiltonian_study(
          st_dim, st_points, st_resamples, st_threshold, sampler, rng);
      if (st_json) {
        Json doc;
        doc["prop_random_exceed"] = result.prop_random_exceed;
        doc["prop_permuted_exceed"] = result.prop_permuted_exceed;
        doc["prop_permuted_strictly_less"] = result.prop_permuted_strictly_less;
        std::cout << doc.dump(2) << "\n";
      } else {
        std::cout << "prop(random order max > threshold)   = "
                  << cutsmc::format_double(result.prop_random_exceed) << "\n"
                  << "prop(permuted order max > threshold) = "
                  << cutsmc::format_double(result.prop_permuted_exceed) << "\n"
                  << "prop(permuted max < random max)      = "
                  << cutsmc::format_double(result.prop_permuted_strictly_less) << "\n";
      }
      return 0;
    }
  } catch (const cutsmc::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    switch (e.kind()) {
      case cutsmc::ErrorKind::configuration:
      case cutsmc::ErrorKind::invalid_input:
      case cutsmc::ErrorKind::undefined_input:
        return 2;
      case cutsmc::ErrorKind::io:
        return 4;
      default:
        return 3;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
