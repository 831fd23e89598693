// Energy term F with its flat derivative, and the Gibbs-type reference
// measure pi = e^{-U}/Z with certified bound constants.
#pragma once

#include <functional>
#include <string>
#include <vector>

#include "weightflow/ensemble.hpp"

namespace wf {

enum class EnergyKind { Zero, Linear, QuadraticInteraction, TwoLayerRegression };

// F : P(X) -> R together with the analytic constants
//   C_F >= sup |dF/dmu|   and   L_F >= Lipschitz constant of dF/dmu
// for the built-in instances.  The centered flag makes the flat derivative
// integrate to zero against its own measure, which is the convention the
// weight dynamics rely on for mass preservation.
struct EnergyFunctional {
  EnergyKind kind = EnergyKind::Zero;
  bool centered = true;
  double c_f = 0.0;
  double l_f = 0.0;

  ScalarFn f;  // Linear: the integrand
  std::function<double(const double*, const double*)> k;  // QuadraticInteraction

  // TwoLayerRegression: least squares on predictions y_hat_j = int tanh(<x, t_j>) dmu.
  std::vector<std::vector<double>> features;  // t_j, each of size d
  std::vector<double> targets;                // y_j
};

// Reusable per-atom evaluations for a frozen position set.  The weight-only
// dynamics re-evaluate flat derivatives thousands of times on the same atoms,
// so pairwise k(x_i, x_j) and feature activations are computed once.
struct EnergyAtomCache {
  std::vector<double> positions;  // cache key: the exact position buffer
  std::vector<double> pair_values;  // QuadraticInteraction: k(x_i, x_j), row-major
  std::vector<double> activations;  // TwoLayerRegression: phi[j * N + i]
  std::vector<double> point_values;  // Linear: f(x_i)
};

// Named built-ins. Linear functions: "square" (|x|^2), "first_coordinate".
// Interaction kernels: "product" (<x, y>), "squared_distance" (|x - y|^2).
// TwoLayerRegression ignores `param` and uses a fixed toy dataset of
// n_features <= 8 points.
EnergyFunctional make_energy(const std::string& kind, const std::string& param,
                             int n_features, bool centered,
                             const Domain& domain);

double evaluate_F(const EnergyFunctional& functional,
                  const WeightedEnsemble& measure);
double evaluate_F(const EnergyFunctional& functional, const GridDensity& density);

double flat_derivative(const EnergyFunctional& functional,
                       const WeightedEnsemble& measure, const double* x);

// Flat derivative at every atom of the measure itself, sharing the
// measure-level aggregates across atoms.
void flat_derivative_at_atoms(const EnergyFunctional& functional,
                              const WeightedEnsemble& measure,
                              EnergyAtomCache& cache, std::vector<double>& out);

// Residual |F(m2) - F(m) - int_0^1 int dF/dmu(m + l (m2 - m), a) (m2 - m)(da) dl|
// with the l-integral on an n_lambda-point Gauss-Legendre rule.  Both
// ensembles must share the same atom positions.
double verify_flat_derivative(const EnergyFunctional& functional,
                              const WeightedEnsemble& m,
                              const WeightedEnsemble& m2, int n_lambda);

// Reference measure pi = e^{-U}/Z on the box, with constants certified by a
// dense grid scan polished by local line searches.  The potential is a global
// formula, so the density extends smoothly outside the box; the certified
// constants apply on the box only.
struct ReferenceMeasure {
  Domain domain;
  ScalarFn potential;                 // U
  std::function<double(const double*, double*)> potential_gradient;  // optional
  double z = 1.0;                     // int_X e^{-U}
  double pi_min = 0.0;
  double pi_max = 0.0;
  double l_pi = 0.0;
  int grid_points = 2048;

  double density(const double* x) const;
  double log_density(const double* x) const;
};

// Built-in potentials: "zero", "quadratic" (scale * |x|^2),
// "double_well" (scale * sum_k (x_k^2 - 0.25)^2).
ReferenceMeasure make_reference(const std::string& potential,
                                double potential_scale, const Domain& domain,
                                int grid_points);

double reference_density(const ReferenceMeasure& ref, const double* x);

}  // namespace wf
