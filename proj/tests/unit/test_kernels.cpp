// SPDX-License-Identifier: Apache-2.0
#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <limits>
#include <vector>

#include "../support/test_utils.hpp"
#include "cutsmc/cutsmc.hpp"

using namespace cutsmc;

namespace {

const LogDensity std_normal = [](const Theta& theta) {
  return -0.5 * squared_norm(theta.values);
};
const GradientFn std_normal_grad = [](const Theta& theta) {
  std::vector<double> g(theta.values.size());
  for (std::size_t i = 0; i < g.size(); ++i) g[i] = -theta.values[i];
  return g;
};

KernelConfig rw_config(double step) {
  KernelConfig cfg;
  cfg.kind = KernelKind::random_walk;
  cfg.step_size = step;
  return cfg;
}

KernelConfig mala_config(double step) {
  KernelConfig cfg;
  cfg.kind = KernelKind::mala;
  cfg.step_size = step;
  return cfg;
}

KernelConfig slice_config(double width) {
  KernelConfig cfg;
  cfg.kind = KernelKind::slice;
  cfg.slice_width = width;
  return cfg;
}

}  // namespace

TEST_CASE("degenerate step sizes are rejected as configuration", "[kernels]") {
  REQUIRE_THROWS_MATCHES(validate_kernel_config(rw_config(0.0)), Error,
                         Catch::Matchers::Predicate<Error>([](const Error& e) {
                           return e.kind() == ErrorKind::configuration;
                         }));
  KernelConfig mala = mala_config(0.5);  // no gradient
  REQUIRE_THROWS_AS(validate_kernel_config(mala), Error);
  KernelConfig slice = slice_config(0.0);
  REQUIRE_THROWS_AS(validate_kernel_config(slice), Error);
}

TEST_CASE("MH rule accepts nonnegative log ratios at u just below one", "[kernels]") {
  const double u = 1.0 - 1e-16;
  REQUIRE(mh_accept_with_uniform(0.0, u));
  REQUIRE(mh_accept_with_uniform(0.3, u));
  REQUIRE_FALSE(mh_accept_with_uniform(-1e-9, u));
  REQUIRE(mh_accept_with_uniform(-1.0, 0.1));  // log(0.1) < -1
}

TEST_CASE("random walk at a zero-density state is invalid", "[kernels]") {
  const LogDensity box = [](const Theta& theta) {
    return std::abs(theta.values[0]) <= 1.0 ? 0.0
                                            : -std::numeric_limits<double>::infinity();
  };
  RandomStream rng(1);
  REQUIRE_THROWS_MATCHES(rwmh_step(box, Theta{{5.0}}, rw_config(0.5), rng), Error,
                         Catch::Matchers::Predicate<Error>([](const Error& e) {
                           return e.kind() == ErrorKind::invalid_state;
                         }));
}

TEST_CASE("random walk chain reaches N(0,1) stationarity", "[kernels]") {
  RandomStream rng(17);
  Theta state{{0.0}};
  const KernelConfig cfg = rw_config(2.4);
  const int n = 1000000;
  double sum = 0.0, sum_sq = 0.0;
  for (int i = 0; i < n; ++i) {
    state = rwmh_step(std_normal, state, cfg, rng);
    sum += state.values[0];
    sum_sq += state.values[0] * state.values[0];
  }
  const double mean = sum / n;
  const double var = sum_sq / n - mean * mean;
  REQUIRE(std::abs(var - 1.0) < 0.03);
}

TEST_CASE("mala drift follows (step^2/2) grad log q", "[kernels]") {
  // Quadratic target -||theta||^2/2 at theta = (2,0) with step^2 = 0.1.
  const std::vector<double> theta{2.0, 0.0};
  const std::vector<double> grad{-2.0, 0.0};
  const auto mean = mala_proposal_mean(theta, grad, std::sqrt(0.1));
  REQUIRE(mean[0] == Catch::Approx(1.9).margin(1e-15));
  REQUIRE(mean[1] == 0.0);

  // Zero gradient reduces the proposal to a random walk centred at theta.
  const auto flat = mala_proposal_mean(theta, {0.0, 0.0}, 0.7);
  REQUIRE(flat == theta);
}

TEST_CASE("mala rejects non-finite gradients", "[kernels]") {
  const GradientFn bad = [](const Theta& theta) {
    return std::vector<double>(theta.values.size(),
                               std::numeric_limits<double>::quiet_NaN());
  };
  RandomStream rng(3);
  REQUIRE_THROWS_MATCHES(
      mala_step(std_normal, bad, Theta{{0.5}}, mala_config(0.4), rng), Error,
      Catch::Matchers::Predicate<Error>([](const Error& e) {
        return e.kind() == ErrorKind::model_evaluation;
      }));
}

TEST_CASE("mala chain reaches N(0,1) stationarity", "[kernels]") {
  RandomStream rng(18);
  Theta state{{0.0}};
  const KernelConfig cfg = mala_config(1.0);
  const int n = 1000000;
  double sum = 0.0, sum_sq = 0.0;
  for (int i = 0; i < n; ++i) {
    state = mala_step(std_normal, std_normal_grad, state, cfg, rng);
    sum += state.values[0];
    sum_sq += state.values[0] * state.values[0];
  }
  const double mean = sum / n;
  const double var = sum_sq / n - mean * mean;
  REQUIRE(std::abs(var - 1.0) < 0.03);
}

TEST_CASE("slice sweep preserves bounded support", "[kernels]") {
  const LogDensity unit_box = [](const Theta& theta) {
    return (theta.values[0] >= 0.0 && theta.values[0] <= 1.0)
               ? 0.0
               : -std::numeric_limits<double>::infinity();
  };
  RandomStream rng(4);
  Theta state{{0.5}};
  for (int i = 0; i < 2000; ++i) {
    state = slice_step(unit_box, state, slice_config(0.3), rng);
    REQUIRE(state.values[0] >= 0.0);
    REQUIRE(state.values[0] <= 1.0);
  }
}

TEST_CASE("slice chain reaches N(0,1) stationarity", "[kernels]") {
  RandomStream rng(19);
  Theta state{{0.0}};
  const KernelConfig cfg = slice_config(1.0);
  const int n = 100000;
  double sum = 0.0, sum_sq = 0.0;
  for (int i = 0; i < n; ++i) {
    state = slice_step(std_normal, state, cfg, rng);
    sum += state.values[0];
    sum_sq += state.values[0] * state.values[0];
  }
  const double mean = sum / n;
  const double var = sum_sq / n - mean * mean;
  REQUIRE(std::abs(mean) < 0.02);
  REQUIRE(std::abs(var - 1.0) < 0.03);
}

TEST_CASE("slice stays near a point support", "[kernels]") {
  const double center = 0.37;
  const LogDensity spike = [&](const Theta& theta) {
    return std::abs(theta.values[0] - center) <= 1e-9
               ? 0.0
               : -std::numeric_limits<double>::infinity();
  };
  RandomStream rng(5);
  Theta state{{center}};
  for (int i = 0; i < 50; ++i) state = slice_step(spike, state, slice_config(0.5), rng);
  REQUIRE(std::abs(state.values[0] - center) <= 1e-9);
}

TEST_CASE("slice reports unbounded flat directions as kernel failures", "[kernels]") {
  const LogDensity flat = [](const Theta&) { return 0.0; };
  RandomStream rng(6);
  KernelConfig cfg = slice_config(1.0);
  cfg.slice_max_doublings = 8;
  REQUIRE_THROWS_MATCHES(slice_step(flat, Theta{{0.0}}, cfg, rng), Error,
                         Catch::Matchers::Predicate<Error>([](const Error& e) {
                           return e.kind() == ErrorKind::kernel_failure;
                         }));
}

TEST_CASE("mutate composes bit-exactly and t=0 is the identity", "[kernels]") {
  TargetDensity target{std_normal, std_normal_grad};
  const Theta start{{0.4, -1.1}};
  const KernelConfig cfg = rw_config(0.8);

  RandomStream rng(21);
  REQUIRE(mutate(cfg, target, start, 0, rng) == start);

  RandomStream direct(22);
  bool accepted = false;
  const Theta one_step = rwmh_step(target.log_density, start, cfg, direct, &accepted);
  RandomStream via_mutate(22);
  REQUIRE(mutate(cfg, target, start, 1, via_mutate) == one_step);

  // mutate(a + b) on one stream equals mutate(a) then mutate(b) on a copy.
  RandomStream whole(23);
  const Theta combined = mutate(cfg, target, start, 7, whole);
  RandomStream split(23);
  const Theta first = mutate(cfg, target, start, 3, split);
  const Theta second = mutate(cfg, target, first, 4, split);
  REQUIRE(combined == second);
}

TEST_CASE("mutate mixes a warm start toward the target", "[kernels]") {
  // 10^4 replicas initialized N(0, sd = sqrt(2)), 50 rwmh steps each,
  // compared against an exact N(0,1) sample by KS.
  const int replicas = 10000;
  RandomStream root(31);
  TargetDensity target{std_normal, nullptr};
  const KernelConfig cfg = rw_config(2.4);
  std::vector<double> mixed(replicas), exact(replicas);
  RandomStream exact_stream = root.substream(1);
  for (int r = 0; r < replicas; ++r) {
    RandomStream sub = root.substream(1000 + static_cast<std::uint64_t>(r));
    Theta state{{std::sqrt(2.0) * sub.normal()}};
    state = mutate(cfg, target, state, 50, sub);
    mixed[static_cast<std::size_t>(r)] = state.values[0];
    exact[static_cast<std::size_t>(r)] = exact_stream.normal();
  }
  REQUIRE(ks_statistic(mixed, exact) < 0.02);
}

TEST_CASE("one kernel step preserves stationary Gaussian moments", "[kernels]") {
  // 10^5 chains started at exact draws; first and second moments must stay
  // within 5 standard errors after a single step.
  const int replicas = 100000;
  const double se_mean = 5.0 / std::sqrt(static_cast<double>(replicas));
  const double se_second = 5.0 * std::sqrt(2.0 / static_cast<double>(replicas));
  TargetDensity target{std_normal, std_normal_grad};

  const auto run = [&](const KernelConfig& cfg, std::uint64_t seed) {
    RandomStream root(seed);
    double sum = 0.0, sum_sq = 0.0;
    for (int r = 0; r < replicas; ++r) {
      RandomStream sub = root.substream(static_cast<std::uint64_t>(r));
      Theta state{{sub.normal()}};
      state = mutate(cfg, target, state, 1, sub);
      sum += state.values[0];
      sum_sq += state.values[0] * state.values[0];
    }
    const double mean = sum / replicas;
    const double second = sum_sq / replicas;
    REQUIRE(std::abs(mean) < se_mean);
    REQUIRE(std::abs(second - 1.0) < se_second);
  };
  run(rw_config(2.4), 41);
  run(mala_config(1.0), 42);
  run(slice_config(1.0), 43);
}

TEST_CASE("rwmh and mala satisfy detailed balance on a 3-point target", "[kernels]") {
  // Grid target with unnormalized log density; proposals restricted to the
  // grid with a common lazy factor so self-transitions absorb the remainder.
  const std::vector<double> grid{-1.0, 0.2, 0.9};
  const auto logq = [](double x) { return -0.5 * x * x + 0.3 * x; };
  const auto gradq = [](double x) { return -x + 0.3; };
  const double h = 0.8;

  std::vector<double> pi(3);
  double z = 0.0;
  for (int i = 0; i < 3; ++i) {
    pi[static_cast<std::size_t>(i)] = std::exp(logq(grid[static_cast<std::size_t>(i)]));
    z += pi[static_cast<std::size_t>(i)];
  }
  for (double& p : pi) p /= z;

  const auto check_balance = [&](const auto& log_g, const auto& log_ratio) {
    // beta keeps every row substochastic; implied residual is a self-loop.
    double max_row = 0.0;
    for (int i = 0; i < 3; ++i) {
      double row = 0.0;
      for (int j = 0; j < 3; ++j) {
        if (i != j) row += std::exp(log_g(i, j));
      }
      max_row = std::max(max_row, row);
    }
    const double beta = 0.5 / max_row;
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) {
        if (i == j) continue;
        const double p_ij = beta * std::exp(log_g(i, j)) *
                            std::min(1.0, std::exp(log_ratio(i, j)));
        const double p_ji = beta * std::exp(log_g(j, i)) *
                            std::min(1.0, std::exp(log_ratio(j, i)));
        REQUIRE(std::abs(pi[static_cast<std::size_t>(i)] * p_ij -
                         pi[static_cast<std::size_t>(j)] * p_ji) < 1e-12);
      }
    }
  };

  SECTION("rwmh: symmetric proposal, ratio from the target alone") {
    const auto log_g = [&](int i, int j) {
      const double d = grid[static_cast<std::size_t>(j)] - grid[static_cast<std::size_t>(i)];
      return -d * d / (2.0 * h * h);
    };
    const LogDensity target = [&](const Theta& theta) { return logq(theta.values[0]); };
    const auto log_ratio = [&](int i, int j) {
      return rwmh_log_accept_ratio(target, logq(grid[static_cast<std::size_t>(i)]),
                                   Theta{{grid[static_cast<std::size_t>(j)]}});
    };
    check_balance(log_g, log_ratio);
  }

  SECTION("mala: drifted proposal with asymmetric correction") {
    const auto drift_mean = [&](int i) {
      return mala_proposal_mean({grid[static_cast<std::size_t>(i)]},
                                {gradq(grid[static_cast<std::size_t>(i)])}, h)[0];
    };
    const auto log_g = [&](int i, int j) {
      return mala_log_proposal_kernel({grid[static_cast<std::size_t>(j)]},
                                      {drift_mean(i)}, h);
    };
    const auto log_ratio = [&](int i, int j) {
      return logq(grid[static_cast<std::size_t>(j)]) -
             logq(grid[static_cast<std::size_t>(i)]) + log_g(j, i) - log_g(i, j);
    };
    check_balance(log_g, log_ratio);
  }
}
