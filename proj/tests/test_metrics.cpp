#include <algorithm>
#include <cmath>
#include <vector>

#include <doctest.h>

#include "test_oracles.hpp"
#include "weightflow/config.hpp"
#include "weightflow/ensemble.hpp"
#include "weightflow/errors.hpp"
#include "weightflow/metrics.hpp"
#include "weightflow/rng.hpp"

using namespace wf;
using wf_test::ot3_enumerate;
using wf_test::w1_cdf_sweep;

namespace {

const Domain kBox{1, 1.0};

WeightedEnsemble make_1d(std::vector<double> xs, std::vector<double> ws,
                         double half_width = 1.0) {
  WeightedEnsemble e;
  e.domain = Domain{1, half_width};
  e.positions = std::move(xs);
  e.weights = std::move(ws);
  return e;
}

WeightedEnsemble random_ensemble(std::size_t n, Rng& rng, int d = 1) {
  WeightedEnsemble e;
  e.domain = Domain{d, 1.0};
  e.positions.resize(n * static_cast<std::size_t>(d));
  e.weights.resize(n);
  for (double& c : e.positions) c = rng.uniform(-1.0, 1.0);
  for (double& w : e.weights) w = std::exp(rng.uniform(-1.0, 1.0));
  normalize_weights_in_place(e.weights);
  return e;
}

}  // namespace

TEST_CASE("one-dimensional Wasserstein basics") {
  const WeightedEnsemble d0 = make_1d({0.0}, {1.0});
  const WeightedEnsemble d1 = make_1d({1.0}, {1.0});
  CHECK(wasserstein_1d(d0, d1, 1) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(wasserstein_1d(d0, d1, 2) == doctest::Approx(1.0).epsilon(1e-14));

  const WeightedEnsemble split = make_1d({0.0, 1.0}, {1.0, 1.0});
  const WeightedEnsemble mid = make_1d({0.5}, {1.0});
  CHECK(wasserstein_1d(split, mid, 1) == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(wasserstein_1d(split, mid, 2) == doctest::Approx(0.5).epsilon(1e-14));

  Rng rng(41, 0);
  const WeightedEnsemble mu = random_ensemble(30, rng);
  CHECK(wasserstein_1d(mu, mu, 2) == doctest::Approx(0.0).epsilon(1e-14));

  const WeightedEnsemble planar = random_ensemble(4, rng, 2);
  CHECK_THROWS_AS(wasserstein_1d(planar, planar, 2), ConfigError);
}

TEST_CASE("quantile coupling matches the CDF sweep oracle") {
  Rng rng(42, 0);
  for (int rep = 0; rep < 50; ++rep) {
    const WeightedEnsemble mu = random_ensemble(1 + rng.below(64), rng);
    const WeightedEnsemble nu = random_ensemble(1 + rng.below(64), rng);
    CHECK(wasserstein_1d(mu, nu, 1) ==
          doctest::Approx(w1_cdf_sweep(mu, nu)).epsilon(1e-11));
  }
}

TEST_CASE("exact solver agrees with the quantile formula in d=1") {
  Rng rng(43, 0);
  for (int rep = 0; rep < 25; ++rep) {
    const WeightedEnsemble mu = random_ensemble(64, rng);
    const WeightedEnsemble nu = random_ensemble(64, rng);
    for (int p : {1, 2}) {
      const double exact = wasserstein_exact(mu, nu, p);
      CHECK(exact == doctest::Approx(wasserstein_1d(mu, nu, p)).epsilon(1e-9));
    }
  }
}

TEST_CASE("exact solver agrees with brute-force vertex enumeration") {
  Rng rng(44, 0);
  for (int rep = 0; rep < 60; ++rep) {
    const int d = rep % 2 == 0 ? 1 : 2;
    const WeightedEnsemble mu = random_ensemble(3, rng, d);
    const WeightedEnsemble nu = random_ensemble(3, rng, d);
    const int p = rep % 3 == 0 ? 1 : 2;

    std::array<double, 3> a{}, b{};
    std::array<std::array<double, 3>, 3> cost{};
    for (int i = 0; i < 3; ++i) {
      a[i] = mu.weights[i] / 3.0;
      b[i] = nu.weights[i] / 3.0;
      for (int j = 0; j < 3; ++j) {
        double dist2 = 0.0;
        for (int k = 0; k < d; ++k) {
          const double diff = mu.position(i)[k] - nu.position(j)[k];
          dist2 += diff * diff;
        }
        const double dist = std::sqrt(dist2);
        cost[i][j] = p == 1 ? dist : dist2;
      }
    }
    const double brute = ot3_enumerate(a, b, cost);
    double solver = wasserstein_exact(mu, nu, p);
    if (p == 2) solver = solver * solver;  // compare transport costs
    CHECK(solver == doctest::Approx(brute).epsilon(1e-10));
  }
}

TEST_CASE("transport plans carry consistent marginals and cost") {
  Rng rng(45, 0);
  const WeightedEnsemble mu = random_ensemble(20, rng, 2);
  const WeightedEnsemble nu = random_ensemble(33, rng, 2);
  TransportPlan plan;
  const double w2 = wasserstein_exact(mu, nu, 2, &plan);

  std::vector<double> row(mu.size(), 0.0), col(nu.size(), 0.0);
  double cost = 0.0;
  for (const TransportPlan::Entry& e : plan.entries) {
    row[e.source] += e.mass;
    col[e.target] += e.mass;
    double dist2 = 0.0;
    for (int k = 0; k < 2; ++k) {
      const double diff = mu.position(e.source)[k] - nu.position(e.target)[k];
      dist2 += diff * diff;
    }
    cost += e.mass * dist2;
  }
  for (std::size_t i = 0; i < mu.size(); ++i)
    CHECK(row[i] == doctest::Approx(mu.weights[i] / static_cast<double>(mu.size()))
                        .epsilon(1e-9));
  for (std::size_t j = 0; j < nu.size(); ++j)
    CHECK(col[j] == doctest::Approx(nu.weights[j] / static_cast<double>(nu.size()))
                        .epsilon(1e-9));
  CHECK(plan.cost == doctest::Approx(cost).epsilon(1e-10));
  CHECK(w2 == doctest::Approx(std::sqrt(cost)).epsilon(1e-10));

  // Identity for a measure against itself.
  CHECK(wasserstein_exact(mu, mu, 2) == doctest::Approx(0.0).epsilon(1e-12));

  WeightedEnsemble big = random_ensemble(4097, rng);
  CHECK_THROWS_AS(wasserstein_exact(big, mu, 2), ConfigError);
}

TEST_CASE("metric axioms hold on random triples") {
  Rng rng(46, 0);
  for (int rep = 0; rep < 200; ++rep) {
    const WeightedEnsemble x = random_ensemble(1 + rng.below(24), rng);
    const WeightedEnsemble y = random_ensemble(1 + rng.below(24), rng);
    const WeightedEnsemble z = random_ensemble(1 + rng.below(24), rng);
    for (int p : {1, 2}) {
      const double xy = wasserstein_1d(x, y, p);
      const double yx = wasserstein_1d(y, x, p);
      const double yz = wasserstein_1d(y, z, p);
      const double xz = wasserstein_1d(x, z, p);
      CHECK(std::abs(xy - yx) <= 1e-9);
      CHECK(xz <= xy + yz + 1e-9);
    }
  }
}

TEST_CASE("projection stability for lifted ensembles") {
  Rng rng(47, 0);
  for (int rep = 0; rep < 50; ++rep) {
    const std::size_t n = 2 + rng.below(16);
    WeightedEnsemble mu = random_ensemble(n, rng);
    WeightedEnsemble nu = random_ensemble(n, rng);
    const LiftedEnsemble ln = lift(mu), lm = lift(nu);
    double weight_cap = 0.0;
    for (double w : mu.weights) weight_cap = std::max(weight_cap, w);
    for (double w : nu.weights) weight_cap = std::max(weight_cap, w);

    const double lifted = lifted_wasserstein(ln, lm, 2);
    const double projected = wasserstein_exact(mu, nu, 2);
    CHECK(projected <= weight_cap * lifted + 1e-9);
  }

  // Single-atom pairs reduce to the Euclidean product distance.
  LiftedEnsemble one, two;
  one.domain = two.domain = kBox;
  one.positions = {0.1};
  one.weights = {0.5};
  two.positions = {0.4};
  two.weights = {0.9};
  CHECK(lifted_wasserstein(one, two, 2) ==
        doctest::Approx(std::hypot(0.3, 0.4)).epsilon(1e-12));
}

TEST_CASE("path supremum over stored marginals") {
  Rng rng(48, 0);
  const WeightedEnsemble a0 = random_ensemble(12, rng);
  WeightedEnsemble a1 = a0;
  for (double& w : a1.weights) w = std::exp(rng.uniform(-0.5, 0.5));
  normalize_weights_in_place(a1.weights);

  Trajectory ta, tb;
  ta.times = {0.0, 0.5, 1.0};
  ta.states = {a0, a0, a0};
  tb.times = {0.0, 0.5, 1.0};
  tb.states = {a1, a0, a0};

  CHECK(path_sup_wasserstein(ta, ta, 2) == 0.0);
  // The trajectories differ only at t=0.
  CHECK(path_sup_wasserstein(ta, tb, 2) ==
        doctest::Approx(wasserstein_1d(a0, a1, 2)).epsilon(1e-12));

  // A sup over fewer stored times can only shrink.
  Trajectory coarse_a = ta, coarse_b = tb;
  coarse_a.times = {0.5, 1.0};
  coarse_a.states = {a0, a0};
  coarse_b.times = {0.5, 1.0};
  coarse_b.states = {a0, a0};
  CHECK(path_sup_wasserstein(coarse_a, coarse_b, 2) <=
        path_sup_wasserstein(ta, tb, 2));

  // Every stored marginal sits below the path statistic.
  const double sup = path_sup_wasserstein(ta, tb, 2);
  for (std::size_t s = 0; s < ta.states.size(); ++s)
    CHECK(wasserstein_1d(ta.states[s], tb.states[s], 2) <= sup + 1e-15);

  Trajectory mismatched = tb;
  mismatched.times = {0.0, 0.6, 1.0};
  CHECK_THROWS_AS(path_sup_wasserstein(ta, mismatched, 2), ConfigError);
}

TEST_CASE("grid divergences") {
  const Domain half{1, 0.5};  // [-1/2, 1/2], unit length
  const GridDensity uniform =
      grid_from_function(half, 2, [](const double*) { return 1.0; });
  const GridDensity skewed = grid_from_function(
      half, 2, [](const double* x) { return x[0] < 0.0 ? 1.5 : 0.5; });

  SUBCASE("two-cell closed form") {
    // KL(uniform | skewed) = 0.5 ln(1/1.5) + 0.5 ln(1/0.5).
    const double expected = 0.5 * std::log(1.0 / 1.5) + 0.5 * std::log(2.0);
    CHECK(kl_grid(uniform, skewed) == doctest::Approx(expected).epsilon(1e-13));
    CHECK(kl_grid(uniform, uniform) == doctest::Approx(0.0).epsilon(1e-14));
    // chi^2(uniform | skewed) = (1/1.5-1)^2 * 0.75 + (1/0.5-1)^2 * 0.25.
    const double chi = (1.0 / 1.5 - 1.0) * (1.0 / 1.5 - 1.0) * 0.75 + 0.25;
    CHECK(chi2_grid(uniform, skewed) == doctest::Approx(chi).epsilon(1e-13));
  }

  SUBCASE("nonnegativity on random pairs") {
    Rng rng(49, 0);
    for (int rep = 0; rep < 100; ++rep) {
      const double a = rng.uniform(0.2, 2.0), b = rng.uniform(0.2, 2.0);
      const GridDensity p = grid_from_function(
          kBox, 128, [&](const double* x) { return a + x[0] * x[0]; });
      const GridDensity q = grid_from_function(
          kBox, 128, [&](const double* x) { return b + std::abs(x[0]); });
      CHECK(kl_grid(p, q) >= -1e-12);
      CHECK(chi2_grid(p, q) >= 0.0);
    }
  }

  SUBCASE("vanishing target cell is rejected") {
    const GridDensity flat =
        grid_from_function(kBox, 64, [](const double*) { return 1.0; });
    const GridDensity hole = grid_from_function(
        kBox, 64, [](const double* x) { return x[0] > 0.0 ? 1.0 : 0.0; },
        false);
    CHECK_THROWS_AS(kl_grid(flat, hole), NumericalError);
  }
}

TEST_CASE("energy evaluations") {
  RunConfig config;
  config.energy_kind = "zero";
  const DriftStrategy strategy = config_strategy(config);

  SUBCASE("grid energy of the reference is zero for zero F") {
    const GridDensity pi_grid = grid_from_function(
        kBox, 2048,
        [&](const double* x) { return strategy.reference.density(x); });
    const double v =
        energy_grid(strategy.functional, strategy.reference, 1.0, pi_grid);
    CHECK(std::abs(v) < 1e-10);

    // For a non-reference density the divergence term scales linearly in
    // sigma.
    const GridDensity m = grid_from_function(
        kBox, 2048, [](const double* x) { return 1.5 - x[0] * x[0]; });
    const double v1 = energy_grid(strategy.functional, strategy.reference, 1.0, m);
    const double v2 = energy_grid(strategy.functional, strategy.reference, 2.0, m);
    CHECK(v1 > 0.0);
    CHECK(v2 == doctest::Approx(2.0 * v1).epsilon(1e-12));
  }

  SUBCASE("kernelized single-atom energy closed form") {
    WeightedEnsemble atom;
    atom.domain = kBox;
    atom.positions = {0.3};
    atom.weights = {1.0};
    const double x0 = 0.3, zero = 0.0;
    const double expected =
        std::log(kernel_eval(&zero, strategy.kernel) /
                 strategy.reference.density(&x0));
    CHECK(energy_eval(strategy, atom) ==
          doctest::Approx(expected).epsilon(1e-9));
  }
}

TEST_CASE("entropy lower bound") {
  SUBCASE("frozen Gaussian values") {
    const GridDensity rho = grid_from_function(
        Domain{1, 6.0}, 4096,
        [](const double* x) { return std::exp(-0.5 * x[0] * x[0]); });
    const EntropyBoundCheck chk = entropy_lower_bound_check(rho, 1.0);
    CHECK(chk.lhs == doctest::Approx(-1.41894).epsilon(2e-4));
    CHECK(chk.rhs == doctest::Approx(-3.50663).epsilon(1e-4));
    CHECK(chk.holds);
  }

  SUBCASE("uniform closed form") {
    const GridDensity uni =
        grid_from_function(kBox, 512, [](const double*) { return 1.0; });
    for (double delta : {0.1, 0.5, 1.0}) {
      const EntropyBoundCheck chk = entropy_lower_bound_check(uni, delta);
      CHECK(chk.lhs == doctest::Approx(-std::log(2.0)).epsilon(1e-10));
      CHECK(chk.holds);
    }
  }

  SUBCASE("random mixtures never violate the bound") {
    Rng rng(50, 0);
    for (int rep = 0; rep < 100; ++rep) {
      const double c1 = rng.uniform(-0.8, 0.8), c2 = rng.uniform(-0.8, 0.8);
      const double s1 = rng.uniform(0.05, 0.5), s2 = rng.uniform(0.05, 0.5);
      const double mix = rng.uniform(0.1, 0.9);
      const GridDensity rho = grid_from_function(kBox, 512, [&](const double* x) {
        const double g1 = std::exp(-0.5 * (x[0] - c1) * (x[0] - c1) / (s1 * s1));
        const double g2 = std::exp(-0.5 * (x[0] - c2) * (x[0] - c2) / (s2 * s2));
        return mix * g1 + (1.0 - mix) * g2;
      });
      for (double delta : {0.1, 1.0, 10.0})
        CHECK(entropy_lower_bound_check(rho, delta).holds);
    }
  }
}
