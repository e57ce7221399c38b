// SPDX-License-Identifier: Apache-2.0
#pragma once

// Ergodic, target-invariant MCMC mutation kernels. Each step is a pure
// function of (state, rng stream), so particles can be mutated concurrently
// on disjoint substreams.

#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "cutsmc/errors.hpp"
#include "cutsmc/model.hpp"
#include "cutsmc/rng.hpp"
#include "cutsmc/vecmath.hpp"

namespace cutsmc {

enum class KernelKind { random_walk, mala, slice };

inline const char* to_string(KernelKind kind) {
  switch (kind) {
    case KernelKind::random_walk: return "random-walk";
    case KernelKind::mala: return "mala";
    case KernelKind::slice: return "slice";
  }
  return "unknown";
}

struct KernelConfig {
  KernelKind kind = KernelKind::slice;
  double step_size = 0.0;       // proposal sd (random-walk) / Langevin step (mala)
  double slice_width = 1.0;     // initial bracket width
  int slice_max_doublings = 16;
  std::function<std::vector<double>(const CutPoint&, const Theta&)> gradient;
};

using LogDensity = std::function<double(const Theta&)>;
using GradientFn = std::function<std::vector<double>(const Theta&)>;

inline void validate_kernel_config(const KernelConfig& cfg) {
  switch (cfg.kind) {
    case KernelKind::random_walk:
      require(cfg.step_size > 0.0, ErrorKind::configuration,
              "random-walk kernel requires step_size > 0");
      break;
    case KernelKind::mala:
      require(cfg.step_size > 0.0, ErrorKind::configuration,
              "mala kernel requires step_size > 0");
      require(static_cast<bool>(cfg.gradient), ErrorKind::configuration,
              "mala kernel requires a gradient");
      break;
    case KernelKind::slice:
      require(cfg.slice_width > 0.0, ErrorKind::configuration,
              "slice kernel requires slice_width > 0");
      require(cfg.slice_max_doublings >= 0, ErrorKind::configuration,
              "slice_max_doublings must be >= 0");
      break;
  }
}

/// Default tuning for a model: slice width 1/10 of the prior-box width when a
/// box exists (1.0 otherwise); MALA step c^(1/2) d^(-1/6) via make_gaussian_*.
inline KernelConfig default_kernel_config(const ConditionalTargetModel& model,
                                          KernelKind kind = KernelKind::slice) {
  KernelConfig cfg;
  cfg.kind = kind;
  cfg.step_size = 1.0;
  cfg.slice_width = 1.0;
  if (model.support_box) {
    double max_width = 0.0;
    for (std::size_t i = 0; i < model.support_box->lower.size(); ++i)
      max_width = std::max(max_width, model.support_box->width(i));
    cfg.slice_width = max_width / 10.0;
  }
  cfg.gradient = model.gradient;
  return cfg;
}

inline KernelConfig gaussian_mala_config(const GaussianConjugateSpec& spec,
                                         const ConditionalTargetModel& model) {
  KernelConfig cfg;
  cfg.kind = KernelKind::mala;
  const double c = spec.posterior_variance();
  cfg.step_size = std::sqrt(c) * std::pow(static_cast<double>(model.d), -1.0 / 6.0);
  cfg.gradient = model.gradient;
  return cfg;
}

// --- Metropolis-Hastings machinery, exposed for the transition-matrix and
// forced-uniform tests as well as the step implementations. ---

inline bool mh_accept_with_uniform(double log_ratio, double u) {
  return std::log(u) < log_ratio;
}

inline bool mh_accept(double log_ratio, RandomStream& rng) {
  if (log_ratio >= 0.0) {
    rng.uniform01_pos();  // keep the stream layout identical on both branches
    return true;
  }
  return mh_accept_with_uniform(log_ratio, rng.uniform01_pos());
}

inline double rwmh_log_accept_ratio(const LogDensity& target, double log_cur,
                                    const Theta& proposal) {
  return target(proposal) - log_cur;
}

/// Langevin drift: theta + (step^2/2) * grad log q(theta).
inline std::vector<double> mala_proposal_mean(const std::vector<double>& theta,
                                              const std::vector<double>& grad,
                                              double step) {
  std::vector<double> m(theta.size());
  const double half_step2 = 0.5 * step * step;
  for (std::size_t i = 0; i < m.size(); ++i) m[i] = theta[i] + half_step2 * grad[i];
  return m;
}

/// log N(x; mean, step^2 I) up to the additive constant shared by the
/// forward and reverse densities.
inline double mala_log_proposal_kernel(const std::vector<double>& x,
                                       const std::vector<double>& mean, double step) {
  return -squared_distance(x, mean) / (2.0 * step * step);
}

struct StepOutcome {
  Theta state;
  bool accepted = false;
};

inline StepOutcome rwmh_step_impl(const LogDensity& target, const Theta& theta,
                                  const KernelConfig& cfg, RandomStream& rng) {
  require(cfg.step_size > 0.0, ErrorKind::configuration,
          "random-walk kernel requires step_size > 0");
  const double log_cur = target(theta);
  require(std::isfinite(log_cur), ErrorKind::invalid_state,
          "random-walk step started outside the target support");
  Theta proposal = theta;
  for (double& v : proposal.values) v += cfg.step_size * rng.normal();
  const double log_ratio = rwmh_log_accept_ratio(target, log_cur, proposal);
  if (mh_accept(log_ratio, rng)) return {std::move(proposal), true};
  return {theta, false};
}

/// One Metropolis-Hastings step with an isotropic Gaussian proposal.
inline Theta rwmh_step(const LogDensity& target, const Theta& theta,
                       const KernelConfig& cfg, RandomStream& rng,
                       bool* accepted = nullptr) {
  StepOutcome out = rwmh_step_impl(target, theta, cfg, rng);
  if (accepted) *accepted = out.accepted;
  return std::move(out.state);
}

inline StepOutcome mala_step_impl(const LogDensity& target, const GradientFn& gradient,
                                  const Theta& theta, const KernelConfig& cfg,
                                  RandomStream& rng) {
  require(cfg.step_size > 0.0, ErrorKind::configuration,
          "mala kernel requires step_size > 0");
  const double log_cur = target(theta);
  require(std::isfinite(log_cur), ErrorKind::invalid_state,
          "mala step started outside the target support");
  const std::vector<double> grad_cur = gradient(theta);
  require(all_finite(grad_cur), ErrorKind::model_evaluation,
          "mala gradient non-finite at current state");
  const std::vector<double> mean_fwd =
      mala_proposal_mean(theta.values, grad_cur, cfg.step_size);
  Theta proposal;
  proposal.values.resize(theta.values.size());
  for (std::size_t i = 0; i < proposal.values.size(); ++i)
    proposal.values[i] = mean_fwd[i] + cfg.step_size * rng.normal();

  const double log_prop = target(proposal);
  double log_ratio = -std::numeric_limits<double>::infinity();
  if (log_prop > -std::numeric_limits<double>::infinity()) {
    const std::vector<double> grad_prop = gradient(proposal);
    require(all_finite(grad_prop), ErrorKind::model_evaluation,
            "mala gradient non-finite at proposal");
    const std::vector<double> mean_rev =
        mala_proposal_mean(proposal.values, grad_prop, cfg.step_size);
    // Full MH correction with the asymmetric proposal ratio.
    log_ratio = log_prop - log_cur +
                mala_log_proposal_kernel(theta.values, mean_rev, cfg.step_size) -
                mala_log_proposal_kernel(proposal.values, mean_fwd, cfg.step_size);
  }
  if (mh_accept(log_ratio, rng)) return {std::move(proposal), true};
  return {theta, false};
}

/// One MALA step: Langevin drift proposal plus asymmetric MH correction.
inline Theta mala_step(const LogDensity& target, const GradientFn& gradient,
                       const Theta& theta, const KernelConfig& cfg, RandomStream& rng,
                       bool* accepted = nullptr) {
  StepOutcome out = mala_step_impl(target, gradient, theta, cfg, rng);
  if (accepted) *accepted = out.accepted;
  return std::move(out.state);
}

namespace detail {

// Univariate slice update following Neal (2003): doubling expansion capped at
// cfg.slice_max_doublings, shrinkage with the doubling acceptance test.
inline double slice_update_coordinate(const std::function<double(double)>& logf,
                                      double x0, double log_fx0,
                                      const KernelConfig& cfg, RandomStream& rng) {
  const double w = cfg.slice_width;
  const double log_level = std::log(rng.uniform01_open()) + log_fx0;

  double left = x0 - w * rng.uniform01();
  double right = left + w;
  double log_left = logf(left);
  double log_right = logf(right);
  int doublings = 0;
  while (log_left > log_level || log_right > log_level) {
    if (doublings >= cfg.slice_max_doublings) {
      // A slice still open on both sides after the cap means the density is
      // flat along an unbounded direction; truncating it silently would
      // corrupt the invariant distribution. One open side is the normal
      // capped-doubling case, which the acceptance test below handles.
      if (log_left > log_level && log_right > log_level) {
        fail(ErrorKind::kernel_failure,
             "slice bracket expansion exceeded slice_max_doublings on a flat "
             "unbounded direction");
      }
      break;
    }
    if (rng.uniform01() < 0.5) {
      left -= (right - left);
      log_left = logf(left);
    } else {
      right += (right - left);
      log_right = logf(right);
    }
    ++doublings;
  }

  // Acceptance test for points found via doubling (Neal 2003, fig. 6).
  const auto doubling_acceptable = [&](double x1) {
    double lo = left, hi = right;
    bool differ = false;
    while (hi - lo > 1.1 * w) {
      const double mid = 0.5 * (lo + hi);
      if ((x0 < mid && x1 >= mid) || (x0 >= mid && x1 < mid)) differ = true;
      if (x1 < mid) {
        hi = mid;
      } else {
        lo = mid;
      }
      if (differ && log_level >= logf(lo) && log_level >= logf(hi)) return false;
    }
    return true;
  };

  double lo = left, hi = right;
  for (int iter = 0; iter < 10000; ++iter) {
    const double x1 = lo + rng.uniform01() * (hi - lo);
    if (logf(x1) > log_level && doubling_acceptable(x1)) return x1;
    if (x1 < x0) {
      lo = x1;
    } else {
      hi = x1;
    }
  }
  fail(ErrorKind::kernel_failure, "slice shrinkage failed to terminate");
}

}  // namespace detail

/// One full sweep of univariate slice sampling over each coordinate of theta
/// in ascending index order.
inline Theta slice_step(const LogDensity& target, const Theta& theta,
                        const KernelConfig& cfg, RandomStream& rng) {
  require(cfg.slice_width > 0.0, ErrorKind::configuration,
          "slice kernel requires slice_width > 0");
  Theta state = theta;
  double log_cur = target(state);
  require(std::isfinite(log_cur), ErrorKind::invalid_state,
          "slice step started outside the target support");
  for (std::size_t k = 0; k < state.values.size(); ++k) {
    const double x_cur = state.values[k];
    const auto logf = [&](double x) {
      state.values[k] = x;
      const double v = target(state);
      state.values[k] = x_cur;
      return v;
    };
    const double x_new =
        detail::slice_update_coordinate(logf, x_cur, log_cur, cfg, rng);
    state.values[k] = x_new;
    log_cur = target(state);
  }
  return state;
}

struct MutateResult {
  Theta state;
  int accepted = 0;   // accepted MH proposals (slice sweeps always count)
  int proposals = 0;  // kernel steps applied
};

struct TargetDensity {
  LogDensity log_density;
  GradientFn gradient;  // required by mala only
};

inline MutateResult mutate_impl(const KernelConfig& kernel, const TargetDensity& target,
                                Theta theta, int t, RandomStream& rng) {
  require(t >= 0, ErrorKind::invalid_input, "mutate requires t >= 0");
  MutateResult result;
  result.proposals = t;
  for (int i = 0; i < t; ++i) {
    switch (kernel.kind) {
      case KernelKind::random_walk: {
        StepOutcome out = rwmh_step_impl(target.log_density, theta, kernel, rng);
        theta = std::move(out.state);
        result.accepted += out.accepted ? 1 : 0;
        break;
      }
      case KernelKind::mala: {
        require(static_cast<bool>(target.gradient), ErrorKind::configuration,
                "mala kernel requires a gradient");
        StepOutcome out =
            mala_step_impl(target.log_density, target.gradient, theta, kernel, rng);
        theta = std::move(out.state);
        result.accepted += out.accepted ? 1 : 0;
        break;
      }
      case KernelKind::slice: {
        theta = slice_step(target.log_density, theta, kernel, rng);
        result.accepted += 1;
        break;
      }
    }
  }
  result.state = std::move(theta);
  return result;
}

/// t successive kernel steps drawn sequentially from rng; t = 0 returns the
/// input unchanged.
inline Theta mutate(const KernelConfig& kernel, const TargetDensity& target,
                    const Theta& theta, int t, RandomStream& rng) {
  return mutate_impl(kernel, target, theta, t, rng).state;
}

}  // namespace cutsmc
