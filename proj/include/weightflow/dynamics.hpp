#pragma once

#include <cstdint>
#include <vector>

#include "weightflow/drift.hpp"
#include "weightflow/ensemble.hpp"

namespace wf {

// Time discretization of dw_i/dt = -w_i a(mu, x_i) with frozen positions.
//
// ExponentialEuler applies w <- w * exp(-a dt), which preserves positivity
// unconditionally; LinearEuler applies w <- w * (1 - a dt) and refuses to
// produce negative weights.
enum class Scheme {
  ExponentialEuler,
  LinearEuler,
};

struct SimulationConfig {
  double horizon = 2.0;
  double dt = 0.01;
  Scheme scheme = Scheme::ExponentialEuler;
  bool renormalize_every_step = true;
  std::uint64_t seed = 0;
  // States are stored every output_stride steps (plus the initial and final
  // states); diagnostics are recorded every step.
  int output_stride = 1;
};

struct StepDiagnostics {
  double t = 0.0;
  double drift_mean = 0.0;
  double min_weight = 0.0;
  double max_weight = 0.0;
  double energy = 0.0;
};

struct Trajectory {
  std::vector<double> times;             // times of the stored states
  std::vector<WeightedEnsemble> states;  // stored every output_stride steps
  std::vector<StepDiagnostics> diagnostics;  // one entry per step taken
};

// One explicit step. The drift is evaluated once at the current state; the
// ensemble's weights are updated in place and, if requested, renormalized to
// sum N. Positions are never touched. Returns the pre-step drift mean.
double step(DriftContext& drift, WeightedEnsemble& state, double dt,
            Scheme scheme, bool renormalize);

// Runs the weight flow from the given initial ensemble. Positions in every
// stored state are bit-identical to the initial ones.
Trajectory simulate_interacting(const DriftStrategy& strategy,
                                const WeightedEnsemble& initial,
                                const SimulationConfig& config);

// Mean-field reference: the same weight flow on a deterministic quadrature
// discretization of initial_density, integrated with classical RK4 so the
// reference error is dominated by quadrature rather than time stepping.
// Stage evaluations use normalized copies of the intermediate weights so
// every drift call sees a probability measure; the state is renormalized
// after each full step. Requires n_atoms >= 64.
Trajectory solve_mean_field(const DriftStrategy& strategy,
                            const GridDensity& initial_density, int n_atoms,
                            const SimulationConfig& config);

struct PicardResult {
  Trajectory trajectory;
  // Sup-Wasserstein gap between consecutive sweeps, one entry per sweep,
  // concatenated across time windows.
  std::vector<double> window_residuals;
  int total_iterations = 0;
};

// Fixed-point iteration for the mean-field flow: freeze the law along the
// previous sweep's path, re-integrate the per-atom weight ODEs against it,
// and repeat until consecutive sweeps differ by at most tol in sup-over-time
// W_2. Iteration runs on time windows of 0.5 so each sub-problem is a
// contraction; each window starts from the previous window's fixed point.
PicardResult picard_iterate(const DriftStrategy& strategy,
                            const GridDensity& initial_density, int n_atoms,
                            const SimulationConfig& config, double tol,
                            int max_sweeps = 50);

}  // namespace wf
