// SPDX-License-Identifier: Apache-2.0
#pragma once

// Direct-sampling baseline (one MCMC chain per cut draw, pooled), plus the
// convergence diagnostic and two-sample discrepancy metrics used to compare
// SMC output against it.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "cutsmc/errors.hpp"
#include "cutsmc/kernels.hpp"
#include "cutsmc/model.hpp"
#include "cutsmc/rng.hpp"
#include "cutsmc/smc.hpp"
#include "cutsmc/vecmath.hpp"

namespace cutsmc {

struct DirectChain {
  CutPoint nu;
  std::vector<Theta> states;  // post burn-in
};

struct DirectRun {
  std::vector<DirectChain> chains;
  int chain_length = 0;
  int burn_in = 0;
  int thin = 1;
  std::uint64_t seed = 0;
  double total_wall_seconds = 0.0;

  /// Pooled post burn-in samples tagged with their chain of origin.
  std::vector<std::pair<int, Theta>> pooled() const {
    std::vector<std::pair<int, Theta>> out;
    for (std::size_t s = 0; s < chains.size(); ++s) {
      for (const Theta& theta : chains[s].states)
        out.emplace_back(static_cast<int>(s), theta);
    }
    return out;
  }
};

/// One chain per cut draw: L kernel sweeps from an overdispersed start,
/// burn_in discarded, remainder pooled (optionally thinned).
inline DirectRun run_direct(const ConditionalTargetModel& model, int S,
                            const KernelConfig& kernel, int L, int burn_in,
                            RandomStream& rng, int thin = 1) {
  validate_model(model);
  validate_kernel_config(kernel);
  require(S >= 0, ErrorKind::invalid_input, "run_direct requires S >= 0");
  require(L > burn_in && burn_in >= 0, ErrorKind::invalid_input,
          "run_direct requires L > burn_in >= 0");
  require(thin >= 1, ErrorKind::invalid_input, "thin must be >= 1");

  const auto start = std::chrono::steady_clock::now();
  DirectRun run;
  run.chain_length = L;
  run.burn_in = burn_in;
  run.thin = thin;
  run.seed = rng.seed();

  RandomStream seq_stream = rng.substream(stream_label::sequence);
  const std::vector<CutPoint> draws = sample_cut(model, seq_stream, S + 1);

  for (int s = 0; s <= S; ++s) {
    RandomStream chain_stream =
        rng.substream(stream_label::step_base + static_cast<std::uint64_t>(s));
    const CutPoint& nu = draws[static_cast<std::size_t>(s)];

    TargetDensity target;
    target.log_density = [&model, &nu](const Theta& theta) {
      return log_unnorm_conditional(model, nu, theta);
    };
    if (kernel.gradient) {
      target.gradient = [&kernel, &nu](const Theta& theta) {
        return kernel.gradient(nu, theta);
      };
    }

    Theta state;
    if (model.overdispersed_init) {
      state = model.overdispersed_init(nu, chain_stream);
    } else if (model.support_box) {
      state.values.resize(static_cast<std::size_t>(model.d));
      for (std::size_t i = 0; i < state.values.size(); ++i)
        state.values[i] =
            chain_stream.uniform(model.support_box->lower[i], model.support_box->upper[i]);
    } else {
      state.values.assign(static_cast<std::size_t>(model.d), 0.0);
    }

    DirectChain chain;
    chain.nu = nu;
    chain.states.reserve(static_cast<std::size_t>((L - burn_in) / thin + 1));
    for (int iter = 0; iter < L; ++iter) {
      try {
        state = mutate(kernel, target, state, 1, chain_stream);
      } catch (const Error& e) {
        fail(e.kind(), "chain " + std::to_string(s) + " iteration " +
                           std::to_string(iter) + ": " + e.what());
      }
      if (iter >= burn_in && (iter - burn_in) % thin == 0) chain.states.push_back(state);
    }
    run.chains.push_back(std::move(chain));
  }
  run.total_wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return run;
}

/// Split-chain Gelman-Rubin factor: each chain is halved, and
/// R = sqrt((W (n-1)/n + B/n) / W) over the resulting half-chains.
inline double split_rhat(const std::vector<std::vector<double>>& chains) {
  require(chains.size() >= 2, ErrorKind::invalid_input, "split_rhat requires >= 2 chains");
  for (const auto& chain : chains) {
    require(chain.size() >= 4, ErrorKind::invalid_input,
            "split_rhat requires chain length >= 4");
    require(chain.size() == chains.front().size(), ErrorKind::invalid_input,
            "split_rhat requires equal-length chains");
  }
  const std::size_t half = chains.front().size() / 2;
  std::vector<std::vector<double>> halves;
  for (const auto& chain : chains) {
    halves.emplace_back(chain.begin(), chain.begin() + static_cast<std::ptrdiff_t>(half));
    halves.emplace_back(chain.begin() + static_cast<std::ptrdiff_t>(half),
                        chain.begin() + static_cast<std::ptrdiff_t>(2 * half));
  }
  const double n = static_cast<double>(half);
  std::vector<double> means;
  double w_acc = 0.0;
  for (const auto& h : halves) {
    means.push_back(mean(h));
    w_acc += sample_variance(h);
  }
  const double w_stat = w_acc / static_cast<double>(halves.size());
  require(w_stat > 0.0, ErrorKind::degenerate_chains,
          "zero within-chain variance");
  const double b_stat = n * sample_variance(means);
  return std::sqrt((w_stat * (n - 1.0) / n + b_stat / n) / w_stat);
}

/// Two-sample Kolmogorov-Smirnov statistic, sup over the pooled support of
/// |F_a - F_b|.
inline double ks_statistic(std::vector<double> a, std::vector<double> b) {
  require(!a.empty() && !b.empty(), ErrorKind::invalid_input,
          "ks_statistic requires nonempty samples");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  std::size_t i = 0, j = 0;
  double best = 0.0;
  while (i < a.size() && j < b.size()) {
    const double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= x) ++i;
    while (j < b.size() && b[j] <= x) ++j;
    best = std::max(best, std::abs(static_cast<double>(i) / na -
                                   static_cast<double>(j) / nb));
  }
  return best;
}

/// Energy distance in V-statistic form:
/// 2 mean||a_i - b_j|| - mean||a_i - a_i'|| - mean||b_j - b_j'||.
inline double energy_distance(const std::vector<std::vector<double>>& a,
                              const std::vector<std::vector<double>>& b) {
  require(!a.empty() && !b.empty(), ErrorKind::invalid_input,
          "energy_distance requires nonempty samples");
  require(a.front().size() == b.front().size(), ErrorKind::invalid_input,
          "energy_distance dimension mismatch");
  const auto mean_cross = [](const std::vector<std::vector<double>>& x,
                             const std::vector<std::vector<double>>& y) {
    double acc = 0.0;
    for (const auto& xi : x) {
      for (const auto& yj : y) acc += euclidean_distance(xi, yj);
    }
    return acc / (static_cast<double>(x.size()) * static_cast<double>(y.size()));
  };
  return 2.0 * mean_cross(a, b) - mean_cross(a, a) - mean_cross(b, b);
}

struct ComparisonThresholds {
  double ks = 0.10;
  double energy = 0.05;
};

struct ComparisonReport {
  std::vector<double> marginal_ks;
  double energy = 0.0;
  std::size_t n_a = 0;
  std::size_t n_b = 0;
  ComparisonThresholds thresholds;
  bool pass = false;
};

/// Per-marginal KS plus joint energy distance between two pooled sample
/// matrices (rows = draws).
inline ComparisonReport compare_samples(const std::vector<std::vector<double>>& a,
                                        const std::vector<std::vector<double>>& b,
                                        const ComparisonThresholds& thresholds = {}) {
  require(!a.empty() && !b.empty(), ErrorKind::invalid_input,
          "compare_samples requires nonempty pools");
  const std::size_t dim = a.front().size();
  require(dim == b.front().size(), ErrorKind::invalid_input,
          "compare_samples dimension mismatch");
  ComparisonReport report;
  report.n_a = a.size();
  report.n_b = b.size();
  report.thresholds = thresholds;
  for (std::size_t k = 0; k < dim; ++k) {
    std::vector<double> ma(a.size()), mb(b.size());
    for (std::size_t i = 0; i < a.size(); ++i) ma[i] = a[i][k];
    for (std::size_t i = 0; i < b.size(); ++i) mb[i] = b[i][k];
    report.marginal_ks.push_back(ks_statistic(std::move(ma), std::move(mb)));
  }
  report.energy = energy_distance(a, b);
  report.pass = report.energy <= thresholds.energy;
  for (double ks : report.marginal_ks) report.pass = report.pass && ks <= thresholds.ks;
  return report;
}

/// Deterministic stride subsample used to keep the O(n^2) energy distance
/// affordable on large pools.
inline std::vector<std::vector<double>> stride_subsample(
    const std::vector<std::vector<double>>& rows, std::size_t max_rows) {
  if (rows.size() <= max_rows || max_rows == 0) return rows;
  std::vector<std::vector<double>> out;
  out.reserve(max_rows);
  for (std::size_t k = 0; k < max_rows; ++k) {
    const std::size_t idx = (k * rows.size()) / max_rows;
    out.push_back(rows[idx]);
  }
  return out;
}

inline std::vector<std::vector<double>> pooled_theta_matrix(const SmcRun& run) {
  std::vector<std::vector<double>> rows;
  for (const ParticleSystem& system : run.retained_systems) {
    for (const Theta& theta : system.particles) rows.push_back(theta.values);
  }
  return rows;
}

inline std::vector<std::vector<double>> pooled_theta_matrix(const DirectRun& run) {
  std::vector<std::vector<double>> rows;
  for (const DirectChain& chain : run.chains) {
    for (const Theta& theta : chain.states) rows.push_back(theta.values);
  }
  return rows;
}

}  // namespace cutsmc
