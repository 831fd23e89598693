#include "weightflow/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "weightflow/errors.hpp"
#include "weightflow/metrics.hpp"
#include "weightflow/numerics.hpp"

namespace wf {

namespace {

long step_count(const SimulationConfig& config) {
  if (config.horizon < 0.0)
    throw ConfigError("simulation.horizon must be nonnegative");
  if (!(config.dt > 0.0)) throw ConfigError("simulation.dt must be positive");
  return static_cast<long>(std::llround(config.horizon / config.dt));
}

double weighted_mean(const WeightedEnsemble& mu, const std::vector<double>& v) {
  const std::size_t n = mu.size();
  std::vector<double> terms(n);
  for (std::size_t i = 0; i < n; ++i) terms[i] = mu.weights[i] * v[i];
  return pairwise_sum(terms) / static_cast<double>(n);
}

StepDiagnostics make_diagnostics(DriftContext& drift,
                                 const WeightedEnsemble& state, double t) {
  StepDiagnostics diag;
  diag.t = t;
  diag.drift_mean = drift.mean(state);
  const auto [lo, hi] =
      std::minmax_element(state.weights.begin(), state.weights.end());
  diag.min_weight = *lo;
  diag.max_weight = *hi;
  diag.energy = drift.energy_value(state);
  return diag;
}

// Guard for fourth-order combinations that undershoot zero by rounding.
void clamp_tiny_negative_weights(WeightedEnsemble& state, const char* solver) {
  double max_w = 0.0;
  for (double w : state.weights) max_w = std::max(max_w, std::abs(w));
  for (double& w : state.weights) {
    if (w < 0.0) {
      if (w < -1e-12 * std::max(1.0, max_w)) {
        std::ostringstream os;
        os << solver << " produced a negative weight (" << w
           << "); reduce simulation.dt";
        throw NumericalError(os.str());
      }
      w = 0.0;
    }
  }
}

}  // namespace

double step(DriftContext& drift, WeightedEnsemble& state, double dt,
            Scheme scheme, bool renormalize) {
  std::vector<double> a;
  drift.eval_at_atoms(state, a);
  const double mean = weighted_mean(state, a);
  const std::size_t n = state.size();
  if (scheme == Scheme::ExponentialEuler) {
    for (std::size_t i = 0; i < n; ++i)
      state.weights[i] *= std::exp(-a[i] * dt);
  } else {
    for (std::size_t i = 0; i < n; ++i) {
      const double factor = 1.0 - a[i] * dt;
      if (factor < 0.0) {
        std::ostringstream os;
        os << "linear Euler step produced a negative weight at atom " << i
           << " (drift " << a[i] << ", dt " << dt
           << "); choose simulation.dt <= 1/(2 C) with C the variant's "
              "drift bound constant, or use the exponential scheme";
        throw NumericalError(os.str());
      }
      state.weights[i] *= factor;
    }
  }
  if (renormalize) normalize_weights_in_place(state.weights);
  return mean;
}

Trajectory simulate_interacting(const DriftStrategy& strategy,
                                const WeightedEnsemble& initial,
                                const SimulationConfig& config) {
  validate_ensemble(initial, true);
  const long j_steps = step_count(config);
  const long stride = std::max(1, config.output_stride);
  DriftContext drift(strategy);

  Trajectory traj;
  WeightedEnsemble state = initial;
  traj.times.push_back(0.0);
  traj.states.push_back(state);
  for (long j = 1; j <= j_steps; ++j) {
    StepDiagnostics diag =
        make_diagnostics(drift, state, static_cast<double>(j - 1) * config.dt);
    step(drift, state, config.dt, config.scheme, config.renormalize_every_step);
    traj.diagnostics.push_back(diag);
    if (j % stride == 0 || j == j_steps) {
      traj.times.push_back(static_cast<double>(j) * config.dt);
      traj.states.push_back(state);
    }
  }
  return traj;
}

namespace {

// One classical fourth-order step of dw/dt = -a(mu(w), x) .* w on frozen
// atoms. Stage measures are renormalized copies so the drift always sees a
// probability measure.
void rk4_mean_field_step(DriftContext& drift, WeightedEnsemble& state,
                         double dt) {
  const std::size_t n = state.size();
  WeightedEnsemble stage = state;
  std::vector<double> a(n);
  std::vector<double> k1(n), k2(n), k3(n), k4(n);

  auto rate = [&](const std::vector<double>& w, std::vector<double>& k) {
    stage.weights = w;
    normalize_weights_in_place(stage.weights);
    drift.eval_at_atoms(stage, a);
    for (std::size_t i = 0; i < n; ++i) k[i] = -a[i] * w[i];
  };

  std::vector<double> w = state.weights;
  std::vector<double> tmp(n);
  rate(w, k1);
  for (std::size_t i = 0; i < n; ++i) tmp[i] = w[i] + 0.5 * dt * k1[i];
  rate(tmp, k2);
  for (std::size_t i = 0; i < n; ++i) tmp[i] = w[i] + 0.5 * dt * k2[i];
  rate(tmp, k3);
  for (std::size_t i = 0; i < n; ++i) tmp[i] = w[i] + dt * k3[i];
  rate(tmp, k4);
  for (std::size_t i = 0; i < n; ++i)
    state.weights[i] =
        w[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
  clamp_tiny_negative_weights(state, "mean-field solver");
}

}  // namespace

Trajectory solve_mean_field(const DriftStrategy& strategy,
                            const GridDensity& initial_density, int n_atoms,
                            const SimulationConfig& config) {
  if (n_atoms < 64)
    throw ConfigError("mean-field reference needs at least 64 atoms");
  WeightedEnsemble state = quadrature_from_density(initial_density, n_atoms);
  const long j_steps = step_count(config);
  const long stride = std::max(1, config.output_stride);
  DriftContext drift(strategy);

  Trajectory traj;
  traj.times.push_back(0.0);
  traj.states.push_back(state);
  for (long j = 1; j <= j_steps; ++j) {
    traj.diagnostics.push_back(
        make_diagnostics(drift, state, static_cast<double>(j - 1) * config.dt));
    rk4_mean_field_step(drift, state, config.dt);
    if (config.renormalize_every_step) normalize_weights_in_place(state.weights);
    if (j % stride == 0 || j == j_steps) {
      traj.times.push_back(static_cast<double>(j) * config.dt);
      traj.states.push_back(state);
    }
  }
  return traj;
}

namespace {

double marginal_distance(const WeightedEnsemble& a, const WeightedEnsemble& b) {
  if (a.domain.dimension == 1) return wasserstein_1d(a, b, 2);
  return wasserstein_exact(a, b, 2);
}

}  // namespace

PicardResult picard_iterate(const DriftStrategy& strategy,
                            const GridDensity& initial_density, int n_atoms,
                            const SimulationConfig& config, double tol,
                            int max_sweeps) {
  if (!(tol > 0.0)) throw ConfigError("picard tolerance must be positive");
  if (max_sweeps < 1) throw ConfigError("picard needs at least one sweep");
  if (n_atoms < 64)
    throw ConfigError("mean-field reference needs at least 64 atoms");
  WeightedEnsemble state = quadrature_from_density(initial_density, n_atoms);
  const long j_total = step_count(config);
  const long window_steps =
      std::max<long>(1, static_cast<long>(std::llround(0.5 / config.dt)));
  DriftContext drift(strategy);
  const std::size_t n = state.size();

  PicardResult result;
  std::vector<std::vector<double>> law;       // weights at window-local steps
  std::vector<std::vector<double>> next_law;  // the re-solved sweep
  std::vector<double> a0(n), a_half(n), a1(n);
  std::vector<std::vector<double>> all_weights;  // per global step, converged
  all_weights.push_back(state.weights);

  WeightedEnsemble probe = state;  // scratch measure on the frozen atoms

  long done = 0;
  while (done < j_total) {
    const long jw = std::min(window_steps, j_total - done);
    law.assign(static_cast<std::size_t>(jw) + 1, state.weights);
    double residual = 0.0;
    bool converged = false;
    for (int sweep = 1; sweep <= max_sweeps; ++sweep) {
      next_law.assign(static_cast<std::size_t>(jw) + 1, state.weights);
      std::vector<double> w = state.weights;
      for (long s = 0; s < jw; ++s) {
        // Drift along the frozen law, with the midpoint interpolated
        // linearly in the weights (positions are shared and fixed).
        probe.weights = law[s];
        normalize_weights_in_place(probe.weights);
        drift.eval_at_atoms(probe, a0);
        for (std::size_t i = 0; i < n; ++i)
          probe.weights[i] = 0.5 * (law[s][i] + law[s + 1][i]);
        normalize_weights_in_place(probe.weights);
        drift.eval_at_atoms(probe, a_half);
        probe.weights = law[s + 1];
        normalize_weights_in_place(probe.weights);
        drift.eval_at_atoms(probe, a1);

        std::vector<double>& out = next_law[static_cast<std::size_t>(s) + 1];
        for (std::size_t i = 0; i < n; ++i) {
          const double k1 = -a0[i] * w[i];
          const double k2 = -a_half[i] * (w[i] + 0.5 * config.dt * k1);
          const double k3 = -a_half[i] * (w[i] + 0.5 * config.dt * k2);
          const double k4 = -a1[i] * (w[i] + config.dt * k3);
          out[i] = w[i] + config.dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        }
        probe.weights = out;
        clamp_tiny_negative_weights(probe, "picard sweep");
        normalize_weights_in_place(probe.weights);
        out = probe.weights;
        w = out;
      }
      // Sup over the window of the marginal distance between sweeps.
      residual = 0.0;
      WeightedEnsemble prev = state;
      for (long s = 1; s <= jw; ++s) {
        prev.weights = law[static_cast<std::size_t>(s)];
        probe.weights = next_law[static_cast<std::size_t>(s)];
        residual = std::max(residual, marginal_distance(prev, probe));
      }
      law.swap(next_law);
      result.window_residuals.push_back(residual);
      ++result.total_iterations;
      if (residual <= tol) {
        converged = true;
        break;
      }
    }
    if (!converged) {
      std::ostringstream os;
      os << "picard iteration did not reach tolerance " << tol << " within "
         << max_sweeps << " sweeps; last residual " << residual;
      throw NumericalError(os.str());
    }
    for (long s = 1; s <= jw; ++s)
      all_weights.push_back(law[static_cast<std::size_t>(s)]);
    state.weights = law[static_cast<std::size_t>(jw)];
    done += jw;
  }

  // Assemble the trajectory on the configured stride, with per-step
  // diagnostics evaluated along the converged path.
  const long stride = std::max(1, config.output_stride);
  Trajectory traj;
  probe.weights = all_weights[0];
  traj.times.push_back(0.0);
  traj.states.push_back(probe);
  for (long j = 1; j <= j_total; ++j) {
    probe.weights = all_weights[static_cast<std::size_t>(j - 1)];
    traj.diagnostics.push_back(
        make_diagnostics(drift, probe, static_cast<double>(j - 1) * config.dt));
    if (j % stride == 0 || j == j_total) {
      probe.weights = all_weights[static_cast<std::size_t>(j)];
      traj.times.push_back(static_cast<double>(j) * config.dt);
      traj.states.push_back(probe);
    }
  }
  result.trajectory = std::move(traj);
  return result;
}

}  // namespace wf
