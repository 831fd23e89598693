#include <cmath>
#include <cstring>
#include <vector>

#include <doctest.h>

#include "weightflow/drift.hpp"
#include "weightflow/dynamics.hpp"
#include "weightflow/ensemble.hpp"
#include "weightflow/errors.hpp"
#include "weightflow/functional.hpp"
#include "weightflow/metrics.hpp"
#include "weightflow/rng.hpp"

using namespace wf;

namespace {

const Domain kBox{1, 1.0};

DriftStrategy make_strategy(DriftVariant variant, double sigma,
                            const std::string& energy_kind = "linear",
                            const std::string& energy_param = "square",
                            bool centered = true) {
  DriftStrategy s;
  s.variant = variant;
  s.sigma = sigma;
  s.kernel = MollifierSpec{0.25, kBox, MollifierMode::FreeGaussian, 0.0};
  s.functional = make_energy(energy_kind, energy_param, 4, centered, kBox);
  s.reference = make_reference("quadratic", 0.5, kBox, 2048);
  s.centering = CenteringMode::EmpiricalMean;
  return s;
}

WeightedEnsemble random_ensemble(std::size_t n, Rng& rng) {
  WeightedEnsemble e;
  e.domain = kBox;
  e.positions.resize(n);
  e.weights.resize(n);
  for (double& c : e.positions) c = rng.uniform(-1.0, 1.0);
  for (double& w : e.weights) w = std::exp(rng.uniform(-0.5, 0.5));
  normalize_weights_in_place(e.weights);
  return e;
}

bool bit_identical(const std::vector<double>& a, const std::vector<double>& b) {
  return a.size() == b.size() &&
         (a.empty() ||
          std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0);
}

}  // namespace

TEST_CASE("zero drift leaves the ensemble untouched") {
  Rng rng(71, 0);
  const WeightedEnsemble initial = random_ensemble(20, rng);
  const DriftStrategy s = make_strategy(DriftVariant::K3_KernelEnergyLu, 0.0,
                                        "zero", "");
  SimulationConfig cfg;
  cfg.horizon = 1.0;
  cfg.dt = 0.05;
  const Trajectory traj = simulate_interacting(s, initial, cfg);
  REQUIRE(!traj.states.empty());
  CHECK(bit_identical(traj.states.back().weights, initial.weights));
  CHECK(bit_identical(traj.states.back().positions, initial.positions));
  for (const StepDiagnostics& d : traj.diagnostics)
    CHECK(std::abs(d.drift_mean) <= 1e-14);
}

TEST_CASE("a constant drift cancels against renormalization") {
  // An uncentered linear energy over atoms at +-1/2 gives a(mu, x) = 1/4 at
  // both atoms, so the multiplicative update rescales uniformly and the
  // renormalization restores the weights exactly.
  WeightedEnsemble initial;
  initial.domain = kBox;
  initial.positions = {-0.5, 0.5};
  initial.weights = {1.0, 1.0};
  const DriftStrategy s = make_strategy(DriftVariant::K3_KernelEnergyLu, 0.0,
                                        "linear", "square", false);
  SimulationConfig cfg;
  cfg.horizon = 0.5;
  cfg.dt = 0.01;
  const Trajectory traj = simulate_interacting(s, initial, cfg);
  CHECK(traj.states.back().weights[0] == 1.0);
  CHECK(traj.states.back().weights[1] == 1.0);
  for (const StepDiagnostics& d : traj.diagnostics)
    CHECK(d.drift_mean == doctest::Approx(0.25).epsilon(1e-12));
}

TEST_CASE("the two schemes agree to second order over one step") {
  Rng rng(72, 0);
  const WeightedEnsemble initial = random_ensemble(16, rng);
  DriftContext ctx(make_strategy(DriftVariant::K3_KernelEnergyLu, 1.0));

  auto one_step_gap = [&](double dt) {
    WeightedEnsemble expo = initial, lin = initial;
    step(ctx, expo, dt, Scheme::ExponentialEuler, false);
    step(ctx, lin, dt, Scheme::LinearEuler, false);
    double gap = 0.0;
    for (std::size_t i = 0; i < expo.size(); ++i)
      gap = std::max(gap, std::abs(expo.weights[i] - lin.weights[i]));
    return gap;
  };

  const double gap_h = one_step_gap(0.02);
  const double gap_half = one_step_gap(0.01);
  CHECK(gap_h / gap_half == doctest::Approx(4.0).epsilon(0.25));
}

TEST_CASE("trajectory bookkeeping") {
  Rng rng(73, 0);
  const WeightedEnsemble initial = random_ensemble(24, rng);
  const DriftStrategy s = make_strategy(DriftVariant::Chi2, 0.8);

  SUBCASE("zero horizon stores only the initial state") {
    SimulationConfig cfg;
    cfg.horizon = 0.0;
    const Trajectory traj = simulate_interacting(s, initial, cfg);
    CHECK(traj.states.size() == 1);
    CHECK(traj.times == std::vector<double>{0.0});
    CHECK(traj.diagnostics.empty());
    CHECK(bit_identical(traj.states[0].weights, initial.weights));
  }

  SUBCASE("negative horizon is rejected") {
    SimulationConfig cfg;
    cfg.horizon = -1.0;
    CHECK_THROWS_AS(simulate_interacting(s, initial, cfg), ConfigError);
  }

  SUBCASE("stride stores every k-th step plus the final state") {
    SimulationConfig cfg;
    cfg.horizon = 1.0;
    cfg.dt = 0.1;  // 10 steps
    cfg.output_stride = 3;
    const Trajectory traj = simulate_interacting(s, initial, cfg);
    // Steps 0, 3, 6, 9 plus the final step 10.
    const std::vector<double> expected = {0.0, 0.3, 0.6, 0.9, 1.0};
    REQUIRE(traj.times.size() == expected.size());
    for (std::size_t i = 0; i < expected.size(); ++i)
      CHECK(traj.times[i] == doctest::Approx(expected[i]).epsilon(1e-12));
    CHECK(traj.diagnostics.size() == 10);
    for (std::size_t i = 1; i < traj.times.size(); ++i)
      CHECK(traj.times[i] > traj.times[i - 1]);
  }

  SUBCASE("mass, positivity, and positions are preserved at every stored state") {
    SimulationConfig cfg;
    cfg.horizon = 2.0;
    cfg.dt = 0.02;
    const Trajectory traj = simulate_interacting(s, initial, cfg);
    for (const WeightedEnsemble& state : traj.states) {
      CHECK(bit_identical(state.positions, initial.positions));
      double mass = 0.0;
      for (double w : state.weights) {
        CHECK(w > 0.0);
        mass += w;
      }
      CHECK(mass == doctest::Approx(static_cast<double>(initial.size()))
                        .epsilon(1e-10));
    }
  }

  SUBCASE("reruns are bit-identical") {
    SimulationConfig cfg;
    cfg.horizon = 1.0;
    cfg.dt = 0.05;
    const Trajectory a = simulate_interacting(s, initial, cfg);
    const Trajectory b = simulate_interacting(s, initial, cfg);
    REQUIRE(a.states.size() == b.states.size());
    for (std::size_t k = 0; k < a.states.size(); ++k)
      CHECK(bit_identical(a.states[k].weights, b.states[k].weights));
  }
}

TEST_CASE("linear Euler refuses steps that would cross zero") {
  Rng rng(74, 0);
  const WeightedEnsemble initial = random_ensemble(16, rng);
  const DriftStrategy s = make_strategy(DriftVariant::K3_KernelEnergyLu, 1.0);
  SimulationConfig cfg;
  cfg.scheme = Scheme::LinearEuler;
  cfg.horizon = 10.0;
  cfg.dt = 5.0;
  CHECK_THROWS_AS(simulate_interacting(s, initial, cfg), NumericalError);
}

TEST_CASE("mean-field reference solver") {
  const DriftStrategy s = make_strategy(DriftVariant::K3_KernelEnergyLu, 1.0);
  const GridDensity m0 =
      grid_from_function(kBox, 1024, [](const double*) { return 0.5; });

  SUBCASE("atom budget is validated") {
    SimulationConfig cfg;
    CHECK_THROWS_AS(solve_mean_field(s, m0, 32, cfg), ConfigError);
  }

  SUBCASE("zero drift is stationary") {
    const DriftStrategy still = make_strategy(DriftVariant::K3_KernelEnergyLu,
                                              0.0, "zero", "");
    SimulationConfig cfg;
    cfg.horizon = 0.5;
    cfg.dt = 0.01;
    const Trajectory traj = solve_mean_field(still, m0, 128, cfg);
    const WeightedEnsemble& first = traj.states.front();
    const WeightedEnsemble& last = traj.states.back();
    for (std::size_t i = 0; i < first.size(); ++i)
      CHECK(last.weights[i] == doctest::Approx(first.weights[i]).epsilon(1e-12));
  }

  SUBCASE("energy decreases along the flow") {
    SimulationConfig cfg;
    cfg.horizon = 1.0;
    cfg.dt = 0.01;
    const Trajectory traj = solve_mean_field(s, m0, 256, cfg);
    REQUIRE(traj.diagnostics.size() > 10);
    const double first = traj.diagnostics.front().energy;
    const double last = traj.diagnostics.back().energy;
    CHECK(last < first);
    // The regularized energy is a Lyapunov function for the exact flow;
    // allow a tiny slack for the time discretization.
    for (std::size_t k = 1; k < traj.diagnostics.size(); ++k)
      CHECK(traj.diagnostics[k].energy <=
            traj.diagnostics[k - 1].energy + 1e-8);
  }
}

TEST_CASE("fixed-point iteration matches direct integration") {
  const DriftStrategy s = make_strategy(DriftVariant::K3_KernelEnergyLu, 1.0);
  const GridDensity m0 =
      grid_from_function(kBox, 1024, [](const double*) { return 0.5; });
  SimulationConfig cfg;
  cfg.horizon = 0.5;
  cfg.dt = 0.005;
  const double tol = 1e-6;

  const PicardResult fixed = picard_iterate(s, m0, 128, cfg, tol);
  REQUIRE(!fixed.window_residuals.empty());
  CHECK(fixed.window_residuals.back() <= tol);
  CHECK(fixed.total_iterations >= 2);

  const Trajectory direct = solve_mean_field(s, m0, 128, cfg);
  const double gap = path_sup_wasserstein(fixed.trajectory, direct, 2);
  CHECK(gap <= 200.0 * tol);

  // The final sweep of each window contracts below the first one.
  CHECK(fixed.window_residuals.back() <= fixed.window_residuals.front());
}

TEST_CASE("frozen-drift sub-problems converge on the first resweep") {
  // With sigma = 0 the drift does not depend on the evolving law, so the
  // second sweep reproduces the first one exactly.
  const DriftStrategy s = make_strategy(DriftVariant::K3_KernelEnergyLu, 0.0);
  const GridDensity m0 =
      grid_from_function(kBox, 1024, [](const double*) { return 0.5; });
  SimulationConfig cfg;
  cfg.horizon = 0.5;
  cfg.dt = 0.01;
  const PicardResult fixed = picard_iterate(s, m0, 128, cfg, 1e-9);
  CHECK(fixed.window_residuals.back() <= 1e-9);
  CHECK(fixed.total_iterations <= 4);
}

TEST_CASE("un-renormalized weights obey the certified envelope") {
  Rng rng(75, 0);
  const WeightedEnsemble initial = random_ensemble(32, rng);
  DriftStrategy s = make_strategy(DriftVariant::Chi2, 1.0);
  SimulationConfig cfg;
  cfg.horizon = 1.0;
  cfg.dt = 0.01;
  cfg.renormalize_every_step = false;

  const KernelConstants kc = kernel_constants(s.kernel, 2.0);
  const ReferenceConstants rc{s.reference.pi_min, s.reference.pi_max,
                              s.reference.l_pi};
  const double c =
      drift_bound_constant(s.variant, s.sigma, kc, rc, s.functional.c_f);
  const Trajectory traj = simulate_interacting(s, initial, cfg);
  const double cap = std::exp(c * cfg.horizon) + 1e-6;
  for (const WeightedEnsemble& state : traj.states)
    for (double w : state.weights) {
      CHECK(w <= cap);
      CHECK(w >= 1.0 / cap * (1.0 - 1e-12));
    }
}
