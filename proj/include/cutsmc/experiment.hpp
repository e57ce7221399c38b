// SPDX-License-Identifier: Apache-2.0
#pragma once

// Experiment orchestration: builds the model and kernel from a parsed
// config, runs batch_count independent replications (parallel at batch
// granularity), pools retained samples, and emits the sample CSV plus a
// machine-readable summary. Output bytes of the sample file depend only on
// the config and seed, never on the thread count.

#include <chrono>
#include <cmath>
#include <cstddef>
#include <filesystem>
#include <functional>
#include <memory>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "cutsmc/baseline.hpp"
#include "cutsmc/config.hpp"
#include "cutsmc/errors.hpp"
#include "cutsmc/external_model.hpp"
#include "cutsmc/io.hpp"
#include "cutsmc/kernels.hpp"
#include "cutsmc/model.hpp"
#include "cutsmc/rng.hpp"
#include "cutsmc/smc.hpp"

namespace cutsmc {

inline std::function<CutPoint(RandomStream&)> build_cut_sampler(const CutDistConfig& cut) {
  if (cut.kind == "uniform") return uniform_box_cut(cut.lower, cut.upper);
  if (cut.kind == "normal") return normal_cut(cut.mean, cut.sd);
  return point_mass_cut(CutPoint{cut.value});
}

inline GaussianConjugateSpec build_gaussian_spec(const ModelBlockConfig& block) {
  GaussianConjugateSpec spec;
  spec.y = block.y;
  spec.sigma = block.sigma;
  spec.sigma_p = block.sigma_p;
  spec.lipschitz_delta = block.lipschitz_delta;
  if (block.f_kind == "identity") {
    spec.f = [](const CutPoint& nu) { return nu.values; };
    if (!spec.lipschitz_delta) spec.lipschitz_delta = 1.0;
  } else {
    spec.f = [matrix = block.f_matrix, offset = block.f_offset](const CutPoint& nu) {
      std::vector<double> out(matrix.size(), 0.0);
      for (std::size_t i = 0; i < matrix.size(); ++i) {
        for (std::size_t j = 0; j < matrix[i].size(); ++j)
          out[i] += matrix[i][j] * nu.values[j];
        if (!offset.empty()) out[i] += offset[i];
      }
      return out;
    };
  }
  return spec;
}

inline ConditionalTargetModel build_model(const ModelBlockConfig& block) {
  if (block.id == "gaussian-conjugate") {
    return make_gaussian_conjugate_model(build_gaussian_spec(block),
                                         build_cut_sampler(*block.cut),
                                         static_cast<int>(block.cut->dimension()));
  }
  if (block.id == "appendix-c") {
    AppendixCSpec spec;
    if (!block.y_obs.empty()) spec.y_obs = block.y_obs;
    ConditionalTargetModel model = make_appendix_c_model(spec);
    if (block.cut) model.cut_sampler = build_cut_sampler(*block.cut);
    return model;
  }
  ExternalModelSpec spec;
  spec.command = block.command;
  spec.d = block.d;
  spec.d_nu = block.d_nu;
  spec.cut_sampler = build_cut_sampler(*block.cut);
  if (block.box_lower) spec.support_box = SupportBox{*block.box_lower, *block.box_upper};
  return make_external_model(spec);
}

inline KernelConfig build_kernel(const MethodBlockConfig& method,
                                 const ConditionalTargetModel& model) {
  KernelConfig kernel;
  if (method.kernel.kind == "random-walk") {
    kernel.kind = KernelKind::random_walk;
  } else if (method.kernel.kind == "mala") {
    kernel.kind = KernelKind::mala;
  } else {
    kernel.kind = KernelKind::slice;
  }
  if (method.kernel.step_size) kernel.step_size = *method.kernel.step_size;
  if (method.kernel.slice_width) kernel.slice_width = *method.kernel.slice_width;
  kernel.slice_max_doublings = method.kernel.slice_max_doublings;
  kernel.gradient = model.gradient;
  validate_kernel_config(kernel);
  return kernel;
}

inline std::function<double(const CutPoint&, const Theta&)> build_estimator(
    const EstimatorConfig& est) {
  if (est.kind == "coordinate") {
    const std::size_t index = static_cast<std::size_t>(est.index);
    return [index](const CutPoint&, const Theta& theta) { return theta.values[index]; };
  }
  return [lower = est.lower, upper = est.upper](const CutPoint&, const Theta& theta) {
    for (std::size_t i = 0; i < lower.size(); ++i) {
      if (theta.values[i] < lower[i] || theta.values[i] > upper[i]) return 0.0;
    }
    return 1.0;
  };
}

struct BatchResult {
  int index = 0;
  std::uint64_t stream_id = 0;
  double wall_seconds = 0.0;
  double init_seconds = 0.0;
  std::string init_method;
  std::vector<double> estimates;      // one per configured estimator
  std::vector<double> max_abs_g;      // matching |g| envelopes
  std::vector<StepDiagnostics> steps; // smc only
  double max_split_rhat = 0.0;        // direct only
  // Pooled rows: (s, particle, nu, theta).
  struct Row {
    int s = 0;
    int particle = 0;
    std::vector<double> nu;
    std::vector<double> theta;
  };
  std::vector<Row> rows;
};

struct RunSummary {
  Json config_echo;
  std::string method;
  std::uint64_t seed = 0;
  int batch_count = 0;
  std::vector<BatchResult> batches;
  std::vector<std::string> estimator_names;
  std::vector<double> pooled_estimates;  // mean of per-batch estimates
  double min_batch_seconds = 0.0;
  double max_batch_seconds = 0.0;
  double total_seconds = 0.0;
  std::size_t pooled_sample_count = 0;
  std::string sample_path;
  std::string summary_path;
};

namespace detail {

inline BatchResult run_smc_batch(const ExperimentConfig& cfg,
                                 const ConditionalTargetModel& model,
                                 const KernelConfig& kernel, int batch_index,
                                 int particle_threads) {
  SmcConfig smc_cfg;
  smc_cfg.N = cfg.method.N;
  smc_cfg.t = cfg.method.t;
  smc_cfg.P = cfg.method.P;
  smc_cfg.permute = cfg.method.permute;
  smc_cfg.kernel = kernel;
  smc_cfg.seed = cfg.seed;
  smc_cfg.batch_count = cfg.batch_count;
  smc_cfg.resampling = cfg.method.resampling == "systematic"
                           ? ResamplingScheme::systematic
                           : ResamplingScheme::multinomial;
  smc_cfg.tsp_bottleneck_pass = cfg.method.tsp_bottleneck;
  smc_cfg.particle_threads = particle_threads;
  if (cfg.method.metric == "scaled-euclidean") {
    smc_cfg.metric.kind = DistanceMetric::Kind::scaled_euclidean;
    smc_cfg.metric.scale = cfg.method.metric_scale;
  }

  RandomStream rng = RandomStream(cfg.seed).substream(
      stream_label::batch_base + static_cast<std::uint64_t>(batch_index));
  SmcRun run = run_cut_smc(model, cfg.method.S, smc_cfg, rng);

  BatchResult result;
  result.index = batch_index;
  result.stream_id = run.stream_id;
  result.wall_seconds = run.total_wall_seconds;
  result.init_seconds = run.init_seconds;
  result.init_method = run.init_method;
  result.steps = run.all_step_diagnostics;
  for (const EstimatorConfig& est : cfg.estimators) {
    const auto g = build_estimator(est);
    result.estimates.push_back(estimate(run, g));
    result.max_abs_g.push_back(max_abs_g(run, g));
  }
  for (const ParticleSystem& system : run.retained_systems) {
    for (std::size_t i = 0; i < system.particles.size(); ++i) {
      BatchResult::Row row;
      row.s = system.step_index;
      row.particle = static_cast<int>(i);
      row.nu = system.nu.values;
      row.theta = system.particles[i].values;
      result.rows.push_back(std::move(row));
    }
  }
  return result;
}

inline BatchResult run_direct_batch(const ExperimentConfig& cfg,
                                    const ConditionalTargetModel& model,
                                    const KernelConfig& kernel, int batch_index) {
  RandomStream rng = RandomStream(cfg.seed).substream(
      stream_label::batch_base + static_cast<std::uint64_t>(batch_index));
  DirectRun run = run_direct(model, cfg.method.S, kernel, cfg.method.L,
                             cfg.method.burn_in, rng, cfg.method.thin);

  BatchResult result;
  result.index = batch_index;
  result.stream_id = rng.stream_id();
  result.wall_seconds = run.total_wall_seconds;
  result.init_method = "chain-start";
  for (const EstimatorConfig& est : cfg.estimators) {
    const auto g = build_estimator(est);
    double outer = 0.0;
    double worst = 0.0;
    for (const DirectChain& chain : run.chains) {
      double inner = 0.0;
      for (const Theta& theta : chain.states) {
        const double value = g(chain.nu, theta);
        require(std::isfinite(value), ErrorKind::evaluation,
                "estimator returned a non-finite value");
        inner += value;
        worst = std::max(worst, std::abs(value));
      }
      outer += inner / static_cast<double>(chain.states.size());
    }
    result.estimates.push_back(outer / static_cast<double>(run.chains.size()));
    result.max_abs_g.push_back(worst);
  }
  // Per-chain split R-hat over each theta coordinate (halves treated as two
  // chains); the max is reported as the convergence indicator.
  for (const DirectChain& chain : run.chains) {
    const std::size_t len = chain.states.size();
    if (len < 8) continue;
    const std::size_t half = len / 2;
    for (int k = 0; k < model.d; ++k) {
      std::vector<double> first(half), second(half);
      for (std::size_t i = 0; i < half; ++i) {
        first[i] = chain.states[i].values[static_cast<std::size_t>(k)];
        second[i] = chain.states[half + i].values[static_cast<std::size_t>(k)];
      }
      result.max_split_rhat =
          std::max(result.max_split_rhat, split_rhat({first, second}));
    }
  }
  for (std::size_t s = 0; s < run.chains.size(); ++s) {
    for (std::size_t i = 0; i < run.chains[s].states.size(); ++i) {
      BatchResult::Row row;
      row.s = static_cast<int>(s);
      row.particle = static_cast<int>(i);
      row.nu = run.chains[s].nu.values;
      row.theta = run.chains[s].states[i].values;
      result.rows.push_back(std::move(row));
    }
  }
  return result;
}

}  // namespace detail

/// CSV with header batch,s,particle,nu_1..nu_dnu,theta_1..theta_d; one row
/// per retained particle, UTF-8, LF line endings, round-trip exact floats.
inline std::string render_samples_csv(const std::vector<BatchResult>& batches,
                                      int d_nu, int d) {
  std::string out = "batch,s,particle";
  for (int j = 1; j <= d_nu; ++j) out += ",nu_" + std::to_string(j);
  for (int j = 1; j <= d; ++j) out += ",theta_" + std::to_string(j);
  out.push_back('\n');
  for (const BatchResult& batch : batches) {
    for (const BatchResult::Row& row : batch.rows) {
      out += std::to_string(batch.index);
      out.push_back(',');
      out += std::to_string(row.s);
      out.push_back(',');
      out += std::to_string(row.particle);
      for (double v : row.nu) {
        out.push_back(',');
        out += format_double(v);
      }
      for (double v : row.theta) {
        out.push_back(',');
        out += format_double(v);
      }
      out.push_back('\n');
    }
  }
  return out;
}

inline void emit_samples(const std::vector<BatchResult>& batches, int d_nu, int d,
                         const std::string& path) {
  write_text_file(path, render_samples_csv(batches, d_nu, d));
}

inline Json summary_json(const RunSummary& summary) {
  Json doc;
  doc["version"] = kVersion;
  doc["seed"] = summary.seed;
  doc["method"] = summary.method;
  doc["config"] = summary.config_echo;
  doc["batch_count"] = summary.batch_count;
  doc["pooled_sample_count"] = summary.pooled_sample_count;
  doc["sample_file"] = summary.sample_path;
  Json estimates;
  for (std::size_t e = 0; e < summary.estimator_names.size(); ++e) {
    Json entry;
    entry["pooled"] = summary.pooled_estimates[e];
    Json per_batch = Json::array();
    Json max_abs = Json::array();
    for (const BatchResult& batch : summary.batches) {
      per_batch.push_back(batch.estimates[e]);
      max_abs.push_back(batch.max_abs_g[e]);
    }
    entry["per_batch"] = per_batch;
    entry["max_abs_g"] = max_abs;
    estimates[summary.estimator_names[e]] = entry;
  }
  doc["estimates"] = estimates;
  Json wall;
  wall["min_batch_seconds"] = summary.min_batch_seconds;
  wall["max_batch_seconds"] = summary.max_batch_seconds;
  wall["total_seconds"] = summary.total_seconds;
  doc["wall_time"] = wall;
  Json batches = Json::array();
  for (const BatchResult& batch : summary.batches) {
    Json b;
    b["index"] = batch.index;
    b["stream_id"] = batch.stream_id;
    b["wall_seconds"] = batch.wall_seconds;
    b["init_seconds"] = batch.init_seconds;
    b["init_method"] = batch.init_method;
    b["sample_rows"] = batch.rows.size();
    if (summary.method == "direct") b["max_split_rhat"] = batch.max_split_rhat;
    if (!batch.steps.empty()) {
      Json steps = Json::array();
      for (const StepDiagnostics& diag : batch.steps) {
        Json s;
        s["seq_index"] = diag.seq_index;
        s["retained"] = diag.retained;
        if (std::isfinite(diag.ess)) s["ess"] = diag.ess;
        s["acceptance_rate"] = diag.acceptance_rate;
        s["wall_seconds"] = diag.wall_seconds;
        steps.push_back(s);
      }
      b["steps"] = steps;
    }
    batches.push_back(b);
  }
  doc["batches"] = batches;
  return doc;
}

inline void emit_summary(const RunSummary& summary, const std::string& path) {
  write_text_file(path, summary_json(summary).dump(2) + "\n");
}

/// Runs batch_count independent replications (threaded at batch granularity),
/// pools outputs in batch order, and writes samples.csv + summary.json under
/// cfg.output_dir.
inline RunSummary run_experiment(const ExperimentConfig& cfg, int threads = 1,
                                 bool write_outputs = true,
                                 int particle_threads = 1) {
  require(threads >= 1, ErrorKind::configuration, "threads must be >= 1");
  const auto start = std::chrono::steady_clock::now();
  const ConditionalTargetModel model = build_model(cfg.model);
  const KernelConfig kernel = build_kernel(cfg.method, model);

  std::vector<BatchResult> batches(static_cast<std::size_t>(cfg.batch_count));
  std::vector<std::string> batch_errors(static_cast<std::size_t>(cfg.batch_count));
  std::vector<ErrorKind> batch_error_kinds(static_cast<std::size_t>(cfg.batch_count),
                                           ErrorKind::evaluation);

  const auto worker = [&](int first_batch) {
    for (int b = first_batch; b < cfg.batch_count; b += threads) {
      try {
        batches[static_cast<std::size_t>(b)] =
            cfg.method.kind == "smc"
                ? detail::run_smc_batch(cfg, model, kernel, b, particle_threads)
                : detail::run_direct_batch(cfg, model, kernel, b);
      } catch (const Error& e) {
        batch_error_kinds[static_cast<std::size_t>(b)] = e.kind();
        batch_errors[static_cast<std::size_t>(b)] =
            "batch " + std::to_string(b) + ": " + e.what();
        return;
      } catch (const std::exception& e) {
        batch_errors[static_cast<std::size_t>(b)] =
            "batch " + std::to_string(b) + ": " + e.what();
        return;
      }
    }
  };

  if (threads == 1 || cfg.batch_count == 1) {
    worker(0);
  } else {
    std::vector<std::thread> pool;
    const int tcount = std::min(threads, cfg.batch_count);
    pool.reserve(static_cast<std::size_t>(tcount));
    for (int w = 0; w < tcount; ++w) pool.emplace_back(worker, w);
    for (auto& th : pool) th.join();
  }
  for (std::size_t b = 0; b < batch_errors.size(); ++b) {
    if (!batch_errors[b].empty()) fail(batch_error_kinds[b], batch_errors[b]);
  }

  RunSummary summary;
  summary.config_echo = canonical_config(cfg);
  summary.method = cfg.method.kind;
  summary.seed = cfg.seed;
  summary.batch_count = cfg.batch_count;
  summary.batches = std::move(batches);
  for (const EstimatorConfig& est : cfg.estimators)
    summary.estimator_names.push_back(est.name);
  summary.pooled_estimates.assign(cfg.estimators.size(), 0.0);
  summary.min_batch_seconds = summary.batches.front().wall_seconds;
  summary.max_batch_seconds = summary.batches.front().wall_seconds;
  for (const BatchResult& batch : summary.batches) {
    for (std::size_t e = 0; e < batch.estimates.size(); ++e)
      summary.pooled_estimates[e] += batch.estimates[e];
    summary.min_batch_seconds = std::min(summary.min_batch_seconds, batch.wall_seconds);
    summary.max_batch_seconds = std::max(summary.max_batch_seconds, batch.wall_seconds);
    summary.pooled_sample_count += batch.rows.size();
  }
  for (double& v : summary.pooled_estimates) v /= static_cast<double>(cfg.batch_count);

  if (write_outputs) {
    std::filesystem::path dir(cfg.output_dir);
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    require(!ec, ErrorKind::io, "cannot create output directory: " + cfg.output_dir);
    summary.sample_path = (dir / "samples.csv").string();
    summary.summary_path = (dir / "summary.json").string();
    const int d_nu = detail::model_cut_dimension(cfg.model);
    const int d = detail::model_dimension(cfg.model);
    emit_samples(summary.batches, d_nu, d, summary.sample_path);
    summary.total_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    emit_summary(summary, summary.summary_path);
  } else {
    summary.total_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  }
  return summary;
}

/// Recomputes a named estimator from an emitted sample file with the same
/// nesting as the in-memory computation (batch -> retained system -> mean),
/// so exact round-trip equality holds.
inline double estimate_from_samples_csv(const std::string& path,
                                        const EstimatorConfig& est, int d_nu, int d) {
  const std::string text = read_text_file(path);
  const auto g = build_estimator(est);
  std::vector<double> batch_estimates;
  // Grouped accumulation in file order.
  long long cur_batch = -1, cur_s = -1;
  std::vector<double> system_means;
  double system_sum = 0.0;
  long long system_count = 0;
  const auto flush_system = [&]() {
    if (system_count > 0)
      system_means.push_back(system_sum / static_cast<double>(system_count));
    system_sum = 0.0;
    system_count = 0;
  };
  const auto flush_batch = [&]() {
    flush_system();
    if (!system_means.empty()) {
      double outer = 0.0;
      for (double m : system_means) outer += m;
      batch_estimates.push_back(outer / static_cast<double>(system_means.size()));
      system_means.clear();
    }
  };

  std::size_t pos = text.find('\n');
  require(pos != std::string::npos, ErrorKind::io, "sample file has no header");
  while (pos < text.size()) {
    const std::size_t end = text.find('\n', pos + 1);
    const std::string line =
        text.substr(pos + 1, end == std::string::npos ? std::string::npos : end - pos - 1);
    pos = end == std::string::npos ? text.size() : end;
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::size_t begin = 0;
    while (begin <= line.size()) {
      const std::size_t comma = line.find(',', begin);
      cells.push_back(line.substr(begin, comma == std::string::npos ? std::string::npos
                                                                    : comma - begin));
      if (comma == std::string::npos) break;
      begin = comma + 1;
    }
    require(static_cast<int>(cells.size()) == 3 + d_nu + d, ErrorKind::io,
            "sample row has unexpected column count");
    const long long batch = std::stoll(cells[0]);
    const long long s = std::stoll(cells[1]);
    CutPoint nu;
    Theta theta;
    for (int j = 0; j < d_nu; ++j) nu.values.push_back(parse_double(cells[3 + j]));
    for (int j = 0; j < d; ++j) theta.values.push_back(parse_double(cells[3 + d_nu + j]));
    if (batch != cur_batch) {
      flush_batch();
      cur_batch = batch;
      cur_s = -1;
    }
    if (s != cur_s) {
      flush_system();
      cur_s = s;
    }
    system_sum += g(nu, theta);
    ++system_count;
  }
  flush_batch();
  require(!batch_estimates.empty(), ErrorKind::io, "sample file contains no rows");
  double pooled = 0.0;
  for (double v : batch_estimates) pooled += v;
  return pooled / static_cast<double>(batch_estimates.size());
}

}  // namespace cutsmc
