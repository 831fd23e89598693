#include "weightflow/ensemble.hpp"

#include <cmath>
#include <cstddef>
#include <sstream>

#include "weightflow/errors.hpp"
#include "weightflow/numerics.hpp"

namespace wf {

bool Domain::contains(const double* x) const {
  for (int k = 0; k < dimension; ++k) {
    if (!(std::abs(x[k]) <= half_width)) return false;
  }
  return true;
}

double Domain::diameter() const {
  return 2.0 * half_width * std::sqrt(static_cast<double>(dimension));
}

void GridDensity::cell_center(std::size_t c, double* out) const {
  const double h = 2.0 * domain.half_width / n_per_axis;
  for (int k = domain.dimension - 1; k >= 0; --k) {
    const std::size_t idx = c % n_per_axis;
    c /= n_per_axis;
    out[k] = -domain.half_width + (static_cast<double>(idx) + 0.5) * h;
  }
}

double GridDensity::total_mass() const {
  return pairwise_sum(values) * cell_volume;
}

void validate_ensemble(const WeightedEnsemble& e, bool require_normalized) {
  const std::size_t n = e.weights.size();
  if (n == 0) throw ConfigError("ensemble is empty");
  if (e.positions.size() != n * static_cast<std::size_t>(e.domain.dimension))
    throw ConfigError("ensemble position/weight size mismatch");
  if (e.domain.dimension < 1 || !(e.domain.half_width > 0.0))
    throw ConfigError("invalid domain");
  for (std::size_t i = 0; i < n; ++i) {
    if (!(e.weights[i] >= 0.0) || !std::isfinite(e.weights[i]))
      throw NumericalError("negative or non-finite ensemble weight");
    if (!e.domain.contains(e.position(i)))
      throw ConfigError("ensemble position outside the domain box");
  }
  if (require_normalized) {
    const double sum = pairwise_sum(e.weights);
    const double n_d = static_cast<double>(n);
    if (std::abs(sum - n_d) > 1e-10 * n_d)
      throw NumericalError("ensemble weights do not sum to N");
  }
}

WeightedEnsemble project(const LiftedEnsemble& lifted) {
  if (lifted.size() == 0) throw ConfigError("lifted ensemble is empty");
  return WeightedEnsemble{lifted.domain, lifted.positions, lifted.weights};
}

LiftedEnsemble lift(const WeightedEnsemble& ensemble) {
  return LiftedEnsemble{ensemble.domain, ensemble.positions, ensemble.weights};
}

void normalize_weights_in_place(std::vector<double>& weights) {
  const double sum = pairwise_sum(weights);
  if (!(sum > 0.0)) throw NumericalError("degenerate ensemble");
  const double scale = static_cast<double>(weights.size()) / sum;
  for (double& w : weights) w *= scale;
}

WeightedEnsemble normalize_weights(const WeightedEnsemble& ensemble) {
  WeightedEnsemble out = ensemble;
  normalize_weights_in_place(out.weights);
  return out;
}

namespace {

double checked_eval(const ScalarFn& f, const double* x, int d) {
  const double v = f(x);
  if (!std::isfinite(v)) {
    std::ostringstream oss;
    oss << "non-finite integrand value at point (";
    for (int k = 0; k < d; ++k) oss << (k ? ", " : "") << x[k];
    oss << ")";
    throw NumericalError(oss.str());
  }
  return v;
}

}  // namespace

double integrate(const WeightedEnsemble& ensemble, const ScalarFn& f) {
  const std::size_t n = ensemble.size();
  std::vector<double> terms(n);
  for (std::size_t i = 0; i < n; ++i)
    terms[i] = ensemble.weights[i] *
               checked_eval(f, ensemble.position(i), ensemble.domain.dimension);
  return pairwise_sum(terms) / static_cast<double>(n);
}

double integrate(const GridDensity& density, const ScalarFn& f) {
  std::vector<double> terms(density.size());
  std::vector<double> x(density.domain.dimension);
  for (std::size_t c = 0; c < density.size(); ++c) {
    density.cell_center(c, x.data());
    terms[c] = density.values[c] *
               checked_eval(f, x.data(), density.domain.dimension);
  }
  return pairwise_sum(terms) * density.cell_volume;
}

namespace {

double squared_norm(const double* x, int d) {
  double s = 0.0;
  for (int k = 0; k < d; ++k) s += x[k] * x[k];
  return s;
}

}  // namespace

double second_moment(const WeightedEnsemble& ensemble) {
  const int d = ensemble.domain.dimension;
  return integrate(ensemble, [d](const double* x) { return squared_norm(x, d); });
}

double second_moment(const GridDensity& density) {
  const int d = density.domain.dimension;
  return integrate(density, [d](const double* x) { return squared_norm(x, d); });
}

GridDensity grid_from_function(const Domain& domain, int n_per_axis,
                               const ScalarFn& f, bool normalize) {
  if (n_per_axis < 1) throw ConfigError("grid needs at least one cell per axis");
  GridDensity g;
  g.domain = domain;
  g.n_per_axis = n_per_axis;
  std::size_t cells = 1;
  for (int k = 0; k < domain.dimension; ++k) cells *= n_per_axis;
  g.values.resize(cells);
  const double h = 2.0 * domain.half_width / n_per_axis;
  g.cell_volume = std::pow(h, domain.dimension);
  std::vector<double> x(domain.dimension);
  for (std::size_t c = 0; c < cells; ++c) {
    g.cell_center(c, x.data());
    const double v = f(x.data());
    if (!std::isfinite(v) || v < 0.0)
      throw NumericalError("grid density requires finite nonnegative values");
    g.values[c] = v;
  }
  if (normalize) {
    const double mass = g.total_mass();
    if (!(mass > 0.0)) throw NumericalError("grid density has zero mass");
    for (double& v : g.values) v /= mass;
  }
  return g;
}

WeightedEnsemble quadrature_from_density(const GridDensity& density,
                                         std::size_t n_atoms) {
  if (n_atoms < 2) throw ConfigError("quadrature needs at least two atoms");
  const int d = density.domain.dimension;
  const double L = density.domain.half_width;
  WeightedEnsemble out;
  out.domain = density.domain;

  if (d == 1) {
    const std::size_t n_src = density.size();
    const double h_src = 2.0 * L / static_cast<double>(n_src);
    const double h_dst = 2.0 * L / static_cast<double>(n_atoms);
    out.positions.resize(n_atoms);
    out.weights.assign(n_atoms, 0.0);
    for (std::size_t i = 0; i < n_atoms; ++i)
      out.positions[i] = -L + (static_cast<double>(i) + 0.5) * h_dst;
    // Exact overlap of source cells with destination cells.
    for (std::size_t s = 0; s < n_src; ++s) {
      const double a = -L + static_cast<double>(s) * h_src;
      const double b = a + h_src;
      std::size_t i = static_cast<std::size_t>((a + L) / h_dst);
      if (i >= n_atoms) i = n_atoms - 1;
      for (; i < n_atoms; ++i) {
        const double lo = -L + static_cast<double>(i) * h_dst;
        const double hi = lo + h_dst;
        if (lo >= b) break;
        const double overlap = std::min(b, hi) - std::max(a, lo);
        if (overlap > 0.0) out.weights[i] += density.values[s] * overlap;
      }
    }
  } else {
    // Bin source cells by center into a per-axis m, m^d atom grid.
    std::size_t m = static_cast<std::size_t>(
        std::llround(std::pow(static_cast<double>(n_atoms), 1.0 / d)));
    if (m < 2) m = 2;
    std::size_t cells = 1;
    for (int k = 0; k < d; ++k) cells *= m;
    const double h_dst = 2.0 * L / static_cast<double>(m);
    GridDensity shape;
    shape.domain = density.domain;
    shape.n_per_axis = static_cast<int>(m);
    shape.cell_volume = std::pow(h_dst, d);
    out.positions.resize(cells * d);
    out.weights.assign(cells, 0.0);
    std::vector<double> x(d);
    for (std::size_t c = 0; c < cells; ++c) {
      shape.cell_center(c, x.data());
      for (int k = 0; k < d; ++k) out.positions[c * d + k] = x[k];
    }
    for (std::size_t s = 0; s < density.size(); ++s) {
      density.cell_center(s, x.data());
      std::size_t idx = 0;
      for (int k = 0; k < d; ++k) {
        std::size_t j = static_cast<std::size_t>((x[k] + L) / h_dst);
        if (j >= m) j = m - 1;
        idx = idx * m + j;
      }
      out.weights[idx] += density.values[s] * density.cell_volume;
    }
  }
  normalize_weights_in_place(out.weights);
  return out;
}

double sample_from_density_1d(const GridDensity& density, Rng& rng) {
  if (density.domain.dimension != 1)
    throw ConfigError("inverse-CDF sampling implemented for d = 1 only");
  const double target = rng.uniform() * density.total_mass();
  const double L = density.domain.half_width;
  const double h = 2.0 * L / density.n_per_axis;
  double acc = 0.0;
  for (std::size_t c = 0; c < density.size(); ++c) {
    const double cell_mass = density.values[c] * density.cell_volume;
    if (acc + cell_mass >= target && cell_mass > 0.0) {
      const double frac = (target - acc) / cell_mass;
      return -L + (static_cast<double>(c) + frac) * h;
    }
    acc += cell_mass;
  }
  return L;
}

}  // namespace wf
