#pragma once

#include <cstddef>
#include <functional>
#include <vector>

#include "weightflow/rng.hpp"

namespace wf {

// The compact box X = [-L, L]^d.
struct Domain {
  int dimension = 1;
  double half_width = 1.0;

  bool contains(const double* x) const;
  // Largest distance between two points of the box, 2L*sqrt(d).
  double diameter() const;
};

// A scalar test function on the domain.
using ScalarFn = std::function<double(const double*)>;

// Discrete state (1/N) sum_i w_i delta_{x_i}. Weights follow the convention
// sum w_i = N; the 1/N measure factor is applied inside integrate/project.
// Positions are a flat row-major array and are immutable under the dynamics.
struct WeightedEnsemble {
  Domain domain;
  std::vector<double> positions;  // size N * d
  std::vector<double> weights;    // size N

  std::size_t size() const { return weights.size(); }
  const double* position(std::size_t i) const {
    return positions.data() + i * static_cast<std::size_t>(domain.dimension);
  }
};

// Atomic measure on X x R_+ with uniform atom mass 1/N; the weight coordinate
// carries the local mass that projection turns into ensemble weights.
struct LiftedEnsemble {
  Domain domain;
  std::vector<double> positions;  // size N * d
  std::vector<double> weights;    // size N

  std::size_t size() const { return weights.size(); }
  const double* position(std::size_t i) const {
    return positions.data() + i * static_cast<std::size_t>(domain.dimension);
  }
};

// Piecewise-constant density on the uniform tensor grid of cell centers,
// n_per_axis cells per axis.
struct GridDensity {
  Domain domain;
  int n_per_axis = 0;
  std::vector<double> values;  // size n_per_axis^d
  double cell_volume = 0.0;

  std::size_t size() const { return values.size(); }
  // Writes the d coordinates of cell c into out.
  void cell_center(std::size_t c, double* out) const;
  double total_mass() const;
};

// Throws ConfigError/NumericalError if the ensemble breaks its invariants
// (size mismatch, negative weight, position outside the box, and, when
// require_normalized is set, sum of weights != N within 1e-10 relative).
void validate_ensemble(const WeightedEnsemble& e, bool require_normalized);

// Projection h: pairing against phi becomes (1/N) sum_i w_i phi(x_i).
WeightedEnsemble project(const LiftedEnsemble& lifted);

// Inverse of project on atom multisets.
LiftedEnsemble lift(const WeightedEnsemble& ensemble);

// Rescales weights to sum N, preserving ratios. Throws NumericalError
// ("degenerate ensemble") when every weight is zero.
WeightedEnsemble normalize_weights(const WeightedEnsemble& ensemble);
void normalize_weights_in_place(std::vector<double>& weights);

// (1/N) sum_i w_i f(x_i); throws NumericalError naming the offending atom if
// f evaluates non-finite.
double integrate(const WeightedEnsemble& ensemble, const ScalarFn& f);
double integrate(const GridDensity& density, const ScalarFn& f);

// Second moment M_2 = integral of |x|^2.
double second_moment(const WeightedEnsemble& ensemble);
double second_moment(const GridDensity& density);

// Builds a density from pointwise values of f on the cell centers,
// normalized to integrate to 1 when normalize is set.
GridDensity grid_from_function(const Domain& domain, int n_per_axis,
                               const ScalarFn& f, bool normalize = true);

// Deterministic quadrature discretization: n_atoms cells, atoms at their
// centers, weights proportional to the density mass per cell and normalized
// to sum n_atoms. Exact piecewise-constant overlap masses in d = 1; cells of
// the density grid are binned by center in d >= 2.
WeightedEnsemble quadrature_from_density(const GridDensity& density,
                                         std::size_t n_atoms);

// Inverse-CDF draw from a one-dimensional grid density.
double sample_from_density_1d(const GridDensity& density, Rng& rng);

}  // namespace wf
