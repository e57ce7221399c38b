// SPDX-License-Identifier: Apache-2.0
#pragma once

// Ordered cut-parameter sequences: i.i.d. draws, linear-tempering
// interpolants, and travelling-salesman permutation along an approximate
// shortest Hamiltonian path.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <numeric>
#include <utility>
#include <vector>

#include "cutsmc/errors.hpp"
#include "cutsmc/model.hpp"
#include "cutsmc/rng.hpp"
#include "cutsmc/vecmath.hpp"

namespace cutsmc {

enum class Provenance { independent, interpolant };

struct CutSequence {
  std::vector<CutPoint> points;
  std::vector<bool> retained;            // true for the S+1 independent draws
  std::vector<Provenance> provenance;
  std::vector<int> origin_index;         // index into the i.i.d. draw order; -1 for interpolants

  std::size_t size() const { return points.size(); }

  bool all_retained() const {
    return std::all_of(retained.begin(), retained.end(), [](bool r) { return r; });
  }

  int retained_count() const {
    return static_cast<int>(std::count(retained.begin(), retained.end(), true));
  }
};

struct DistanceMetric {
  enum class Kind { euclidean, scaled_euclidean };
  Kind kind = Kind::euclidean;
  std::vector<double> scale;  // per-coordinate divisors for scaled_euclidean

  double operator()(const CutPoint& a, const CutPoint& b) const {
    if (kind == Kind::euclidean) return euclidean_distance(a.values, b.values);
    require(scale.size() == a.values.size(), ErrorKind::invalid_input,
            "metric scale dimension mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < a.values.size(); ++i) {
      const double d = (a.values[i] - b.values[i]) / scale[i];
      s += d * d;
    }
    return std::sqrt(s);
  }
};

/// Scaled-euclidean metric that maps a box-uniform cut range onto [0,1]^d.
inline DistanceMetric box_scaled_metric(const std::vector<double>& lower,
                                        const std::vector<double>& upper) {
  DistanceMetric metric;
  metric.kind = DistanceMetric::Kind::scaled_euclidean;
  metric.scale.resize(lower.size());
  for (std::size_t i = 0; i < lower.size(); ++i) {
    require(upper[i] > lower[i], ErrorKind::invalid_input, "degenerate cut range");
    metric.scale[i] = upper[i] - lower[i];
  }
  return metric;
}

/// S+1 i.i.d. draws from p_nu, all retained, in draw order.
inline CutSequence draw_cut_sequence(const ConditionalTargetModel& model, int S,
                                     RandomStream& rng) {
  require(S >= 0, ErrorKind::invalid_input, "draw_cut_sequence requires S >= 0");
  CutSequence seq;
  const int count = S + 1;
  seq.points = sample_cut(model, rng, count);
  seq.retained.assign(static_cast<std::size_t>(count), true);
  seq.provenance.assign(static_cast<std::size_t>(count), Provenance::independent);
  seq.origin_index.resize(static_cast<std::size_t>(count));
  std::iota(seq.origin_index.begin(), seq.origin_index.end(), 0);
  return seq;
}

/// Inserts P evenly spaced interpolants on the segment between each pair of
/// consecutive retained draws: nu_s + (j/(P+1)) (nu_{s+1} - nu_s), j = 1..P.
inline CutSequence temper_sequence(const CutSequence& seq, int P) {
  require(P >= 0, ErrorKind::invalid_input, "temper_sequence requires P >= 0");
  require(seq.all_retained(), ErrorKind::invalid_input,
          "temper_sequence expects an all-retained sequence");
  if (P == 0 || seq.size() < 2) return seq;
  CutSequence out;
  const std::size_t n = seq.size();
  out.points.reserve((n - 1) * static_cast<std::size_t>(P + 1) + 1);
  for (std::size_t s = 0; s + 1 < n; ++s) {
    out.points.push_back(seq.points[s]);
    out.retained.push_back(true);
    out.provenance.push_back(Provenance::independent);
    out.origin_index.push_back(seq.origin_index[s]);
    const auto& a = seq.points[s].values;
    const auto& b = seq.points[s + 1].values;
    for (int j = 1; j <= P; ++j) {
      const double frac = static_cast<double>(j) / static_cast<double>(P + 1);
      CutPoint mid;
      mid.values.resize(a.size());
      for (std::size_t i = 0; i < a.size(); ++i)
        mid.values[i] = a[i] + frac * (b[i] - a[i]);
      out.points.push_back(std::move(mid));
      out.retained.push_back(false);
      out.provenance.push_back(Provenance::interpolant);
      out.origin_index.push_back(-1);
    }
  }
  out.points.push_back(seq.points[n - 1]);
  out.retained.push_back(true);
  out.provenance.push_back(Provenance::independent);
  out.origin_index.push_back(seq.origin_index[n - 1]);
  return out;
}

/// Max over adjacent pairs of metric distance.
inline double max_consecutive_distance(const CutSequence& seq,
                                       const DistanceMetric& metric) {
  require(seq.size() >= 2, ErrorKind::undefined_input,
          "max_consecutive_distance requires at least 2 points");
  double best = 0.0;
  for (std::size_t i = 0; i + 1 < seq.size(); ++i)
    best = std::max(best, metric(seq.points[i], seq.points[i + 1]));
  return best;
}

namespace detail {

inline double path_length(const std::vector<int>& order,
                          const std::vector<std::vector<double>>& dist) {
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < order.size(); ++i)
    total += dist[static_cast<std::size_t>(order[i])][static_cast<std::size_t>(order[i + 1])];
  return total;
}

// 2-opt to a local optimum on an open path with a fixed start node
// (order[0] stays put; reversing order[i..j] rewires two edges, one of which
// disappears when j is the free end).
inline void two_opt_path(std::vector<int>& order,
                         const std::vector<std::vector<double>>& dist) {
  const std::size_t n = order.size();
  if (n < 3) return;
  bool improved = true;
  while (improved) {
    improved = false;
    for (std::size_t i = 1; i + 1 < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) {
        const int a = order[i - 1], b = order[i], c = order[j];
        const double removed = dist[a][b];
        const double added = dist[a][c];
        double delta = added - removed;
        if (j + 1 < n) {
          const int d = order[j + 1];
          delta += dist[b][d] - dist[c][d];
        }
        if (delta < -1e-12) {
          std::reverse(order.begin() + static_cast<std::ptrdiff_t>(i),
                       order.begin() + static_cast<std::ptrdiff_t>(j + 1));
          improved = true;
        }
      }
    }
  }
}

// One bottleneck pass: accept reversals that strictly shrink the maximum
// edge (ties broken by total length).
inline void two_opt_bottleneck(std::vector<int>& order,
                               const std::vector<std::vector<double>>& dist) {
  const std::size_t n = order.size();
  if (n < 3) return;
  const auto max_edge = [&](const std::vector<int>& ord) {
    double worst = 0.0;
    for (std::size_t i = 0; i + 1 < ord.size(); ++i)
      worst = std::max(worst, dist[ord[i]][ord[i + 1]]);
    return worst;
  };
  bool improved = true;
  while (improved) {
    improved = false;
    const double cur_max = max_edge(order);
    for (std::size_t i = 1; i + 1 < n && !improved; ++i) {
      for (std::size_t j = i + 1; j < n && !improved; ++j) {
        std::vector<int> cand = order;
        std::reverse(cand.begin() + static_cast<std::ptrdiff_t>(i),
                     cand.begin() + static_cast<std::ptrdiff_t>(j + 1));
        if (max_edge(cand) < cur_max - 1e-12) {
          order = std::move(cand);
          improved = true;
        }
      }
    }
  }
}

}  // namespace detail

/// Reorders an all-retained sequence along an approximate shortest
/// Hamiltonian path with the start point fixed: complete graph on the draws
/// plus a dummy node at distance 0 from the start and a distance exceeding
/// any real edge sum from everything else; nearest-neighbour construction,
/// 2-opt to a local optimum, dummy removed. Falls back to improving the
/// input order when that is already shorter, so the output path length never
/// exceeds the input's.
inline CutSequence permute_tsp(const CutSequence& seq, const DistanceMetric& metric,
                               bool bottleneck_pass = false) {
  require(seq.all_retained(), ErrorKind::invalid_input,
          "permute_tsp expects an all-retained sequence");
  const std::size_t n = seq.size();
  if (n < 2) return seq;

  std::vector<std::vector<double>> dist(n + 1, std::vector<double>(n + 1, 0.0));
  double max_pairwise = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double d = metric(seq.points[i], seq.points[j]);
      dist[i][j] = dist[j][i] = d;
      max_pairwise = std::max(max_pairwise, d);
    }
  }
  // Dummy node n: free to reach the start, prohibitive to everything else.
  const double big = static_cast<double>(n + 1) * (max_pairwise + 1.0);
  for (std::size_t j = 1; j < n; ++j) dist[n][j] = dist[j][n] = big;
  dist[n][0] = dist[0][n] = 0.0;

  // Nearest-neighbour open tour anchored at the dummy (so its successor is
  // the designated start).
  std::vector<int> order;
  order.reserve(n + 1);
  order.push_back(static_cast<int>(n));
  std::vector<bool> used(n + 1, false);
  used[n] = true;
  int current = static_cast<int>(n);
  for (std::size_t k = 0; k < n; ++k) {
    int best = -1;
    double best_d = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      if (used[j]) continue;
      const double d = dist[static_cast<std::size_t>(current)][j];
      if (best < 0 || d < best_d) {
        best = static_cast<int>(j);
        best_d = d;
      }
    }
    order.push_back(best);
    used[static_cast<std::size_t>(best)] = true;
    current = best;
  }
  detail::two_opt_path(order, dist);

  std::vector<int> input_order(n + 1);
  input_order[0] = static_cast<int>(n);
  std::iota(input_order.begin() + 1, input_order.end(), 0);
  if (detail::path_length(input_order, dist) < detail::path_length(order, dist)) {
    order = input_order;
    detail::two_opt_path(order, dist);
  }
  if (bottleneck_pass) detail::two_opt_bottleneck(order, dist);

  CutSequence out;
  out.points.reserve(n);
  for (std::size_t k = 1; k < order.size(); ++k) {
    const auto idx = static_cast<std::size_t>(order[k]);
    out.points.push_back(seq.points[idx]);
    out.retained.push_back(true);
    out.provenance.push_back(Provenance::independent);
    out.origin_index.push_back(seq.origin_index[idx]);
  }
  return out;
}

struct HamiltonianStudyResult {
  double prop_random_exceed = 0.0;
  double prop_permuted_exceed = 0.0;
  /// Fraction of resamples where the permuted max consecutive distance is
  /// strictly below the draw-order one.
  double prop_permuted_strictly_less = 0.0;
};

/// Resampling study of max consecutive distance under draw order vs TSP
/// permutation (fractions exceeding `threshold`).
inline HamiltonianStudyResult hamiltonian_study(
    int dim, int n_points, int n_resamples, double threshold,
    const std::function<CutPoint(RandomStream&)>& sampler, RandomStream& rng,
    const DistanceMetric& metric = {}) {
  require(n_points >= 2, ErrorKind::invalid_input, "study requires n_points >= 2");
  require(n_resamples >= 1, ErrorKind::invalid_input, "study requires n_resamples >= 1");
  (void)dim;
  int random_exceed = 0, permuted_exceed = 0, strictly_less = 0;
  for (int r = 0; r < n_resamples; ++r) {
    RandomStream sub = rng.substream(static_cast<std::uint64_t>(r));
    CutSequence seq;
    seq.points.reserve(static_cast<std::size_t>(n_points));
    for (int i = 0; i < n_points; ++i) seq.points.push_back(sampler(sub));
    seq.retained.assign(static_cast<std::size_t>(n_points), true);
    seq.provenance.assign(static_cast<std::size_t>(n_points), Provenance::independent);
    seq.origin_index.resize(static_cast<std::size_t>(n_points));
    std::iota(seq.origin_index.begin(), seq.origin_index.end(), 0);

    const double d_random = max_consecutive_distance(seq, metric);
    const CutSequence permuted = permute_tsp(seq, metric);
    const double d_permuted = max_consecutive_distance(permuted, metric);
    if (d_random > threshold) ++random_exceed;
    if (d_permuted > threshold) ++permuted_exceed;
    if (d_permuted < d_random) ++strictly_less;
  }
  const double denom = static_cast<double>(n_resamples);
  return {random_exceed / denom, permuted_exceed / denom, strictly_less / denom};
}

/// Equicorrelated normal used by the study CLI: per-coordinate variance
/// sd^2, common positive correlation rho in [0, 1).
inline std::function<CutPoint(RandomStream&)> correlated_normal_sampler(int dim,
                                                                        double rho,
                                                                        double sd = 1.0) {
  require(rho >= 0.0 && rho < 1.0, ErrorKind::invalid_input,
          "correlation must lie in [0, 1)");
  return [dim, rho, sd](RandomStream& rng) {
    CutPoint nu;
    nu.values.resize(static_cast<std::size_t>(dim));
    const double shared = rng.normal();
    for (auto& v : nu.values)
      v = sd * (std::sqrt(rho) * shared + std::sqrt(1.0 - rho) * rng.normal());
    return nu;
  };
}

}  // namespace cutsmc
