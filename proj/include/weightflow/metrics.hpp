#pragma once

#include <cstddef>
#include <vector>

#include "weightflow/drift.hpp"
#include "weightflow/dynamics.hpp"
#include "weightflow/ensemble.hpp"

namespace wf {

// An explicit coupling between two weighted ensembles, produced by
// wasserstein_exact. Masses are probability masses (they sum to 1 on each
// side), not the sum-N weight convention.
struct TransportPlan {
  struct Entry {
    std::size_t source = 0;
    std::size_t target = 0;
    double mass = 0.0;
  };
  std::vector<Entry> entries;
  double cost = 0.0;  // sum of mass * |x - y|^p
  int order = 2;
};

// Exact W_p for one-dimensional ensembles via the sorted quantile coupling.
// Ensembles of dimension != 1 are rejected with a pointer to
// wasserstein_exact.
double wasserstein_1d(const WeightedEnsemble& mu, const WeightedEnsemble& nu,
                      int p);

// Exact W_p in any dimension by a network-simplex solve on the bipartite
// cost matrix |x_i - y_j|^p. Combined atom count is capped at 4096; larger
// inputs are rejected with a suggestion to subsample.
double wasserstein_exact(const WeightedEnsemble& mu,
                         const WeightedEnsemble& nu, int p,
                         TransportPlan* plan = nullptr);

// W_p between lifted ensembles on X x R_+, using the Euclidean product
// metric on (position, weight) pairs with uniform atom masses.
double lifted_wasserstein(const LiftedEnsemble& nu_a, const LiftedEnsemble& nu_b,
                          int p, TransportPlan* plan = nullptr);

// Sup over the shared stored time grid of W_p between marginals. A lower
// bound for the path distance; the trajectories must store identical times.
double path_sup_wasserstein(const Trajectory& traj_a, const Trajectory& traj_b,
                            int p);

// Riemann-sum divergences on a shared grid. q must be strictly positive on
// every cell; p log(p/q) terms with p = 0 contribute zero.
double kl_grid(const GridDensity& p, const GridDensity& q);
double chi2_grid(const GridDensity& p, const GridDensity& q);

// Regularized energy of a weighted ensemble under the given strategy's
// variant. Delegates to DriftContext::energy_value; the context overload
// reuses its caches across calls.
double energy_eval(const DriftStrategy& strategy, const WeightedEnsemble& mu);
double energy_eval(DriftContext& context, const WeightedEnsemble& mu);

// Unkernelized V^sigma(m) = F(m) + sigma KL(m|pi) for grid densities, with
// pi evaluated on m's grid and normalized there.
double energy_grid(const EnergyFunctional& functional,
                   const ReferenceMeasure& reference, double sigma,
                   const GridDensity& m);

struct EntropyBoundCheck {
  double lhs = 0.0;   // grid value of int rho log rho
  double rhs = 0.0;   // -(2 pi / delta)^{d/2} - delta M_2(rho)
  bool holds = false; // lhs >= rhs - 1e-6
};

EntropyBoundCheck entropy_lower_bound_check(const GridDensity& density,
                                            double delta);

}  // namespace wf
