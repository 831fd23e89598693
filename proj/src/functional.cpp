#include "weightflow/functional.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>

#include "weightflow/errors.hpp"
#include "weightflow/numerics.hpp"

namespace wf {

namespace {

void require_finite(double v, const char* what) {
  if (!std::isfinite(v)) {
    throw NumericalError(std::string(what) + " evaluated to a non-finite value");
  }
}

double dot(const double* a, const double* b, int d) {
  double s = 0.0;
  for (int k = 0; k < d; ++k) s += a[k] * b[k];
  return s;
}

// Fixed toy dataset for the two-layer regression energy.  Feature j points
// along axis j mod d with a growing magnitude; targets come from a two-atom
// ground-truth measure inside the box, so they are realizable.
void build_two_layer_data(int n_features, const Domain& domain,
                          std::vector<std::vector<double>>& features,
                          std::vector<double>& targets) {
  const int d = domain.dimension;
  const double g1 = 0.9 * domain.half_width;
  const double g2 = -0.4 * domain.half_width;
  features.assign(n_features, std::vector<double>(d, 0.0));
  targets.assign(n_features, 0.0);
  for (int j = 0; j < n_features; ++j) {
    const double magnitude = 0.6 + 0.35 * j;
    features[j][j % d] = magnitude;
    targets[j] =
        0.5 * std::tanh(magnitude * g1) + 0.5 * std::tanh(magnitude * g2);
  }
}

// Prediction y_hat_j = int tanh(<x, t_j>) dmu for every feature.
std::vector<double> two_layer_predictions(const EnergyFunctional& fn,
                                          const WeightedEnsemble& measure) {
  const int d = measure.domain.dimension;
  std::vector<double> preds(fn.features.size());
  for (std::size_t j = 0; j < fn.features.size(); ++j) {
    const double* t = fn.features[j].data();
    preds[j] = integrate(measure, [&](const double* x) {
      return std::tanh(dot(x, t, d));
    });
  }
  return preds;
}

}  // namespace

EnergyFunctional make_energy(const std::string& kind, const std::string& param,
                             int n_features, bool centered,
                             const Domain& domain) {
  const int d = domain.dimension;
  const double L = domain.half_width;
  const double box_radius = L * std::sqrt(static_cast<double>(d));

  EnergyFunctional fn;
  fn.centered = centered;

  if (kind == "zero") {
    fn.kind = EnergyKind::Zero;
    return fn;
  }

  if (kind == "linear") {
    fn.kind = EnergyKind::Linear;
    if (param == "square") {
      fn.f = [d](const double* x) {
        double s = 0.0;
        for (int k = 0; k < d; ++k) s += x[k] * x[k];
        return s;
      };
      // values in [0, d L^2]; gradient norm at most 2 L sqrt(d)
      fn.c_f = d * L * L;
      fn.l_f = 2.0 * box_radius;
    } else if (param == "first_coordinate") {
      fn.f = [](const double* x) { return x[0]; };
      fn.c_f = centered ? 2.0 * L : L;
      fn.l_f = 1.0;
    } else {
      throw ConfigError("unknown linear energy function: " + param);
    }
    return fn;
  }

  if (kind == "quadratic_interaction") {
    fn.kind = EnergyKind::QuadraticInteraction;
    double sup_k = 0.0;
    double lip_k = 0.0;
    if (param == "product") {
      fn.k = [d](const double* x, const double* y) { return dot(x, y, d); };
      sup_k = box_radius * box_radius;
      lip_k = box_radius;
    } else if (param == "squared_distance") {
      fn.k = [d](const double* x, const double* y) {
        double s = 0.0;
        for (int k = 0; k < d; ++k) s += (x[k] - y[k]) * (x[k] - y[k]);
        return s;
      };
      sup_k = 4.0 * box_radius * box_radius;
      lip_k = 4.0 * box_radius;
    } else {
      throw ConfigError("unknown interaction kernel: " + param);
    }
    fn.c_f = (centered ? 4.0 : 2.0) * sup_k;
    fn.l_f = (centered ? 6.0 : 2.0) * lip_k;
    return fn;
  }

  if (kind == "two_layer") {
    if (n_features < 1 || n_features > 8)
      throw ConfigError("two_layer energy supports 1..8 features");
    fn.kind = EnergyKind::TwoLayerRegression;
    build_two_layer_data(n_features, domain, fn.features, fn.targets);
    double sum_residual = 0.0;  // (2/n) sum (1 + |y_j|), |tanh| <= 1
    double sum_lip = 0.0;
    for (int j = 0; j < n_features; ++j) {
      const double ty = std::abs(fn.targets[j]);
      double t_norm = 0.0;
      for (double c : fn.features[j]) t_norm += c * c;
      t_norm = std::sqrt(t_norm);
      sum_residual += 1.0 + ty;
      sum_lip += t_norm * (2.0 + ty);
    }
    const double inv_n = 2.0 / n_features;
    fn.c_f = inv_n * sum_residual * (centered ? 2.0 : 1.0);
    fn.l_f = inv_n * sum_lip * (centered ? 2.0 : 1.0);
    return fn;
  }

  throw ConfigError("unknown energy kind: " + kind);
}

double evaluate_F(const EnergyFunctional& functional,
                  const WeightedEnsemble& measure) {
  double value = 0.0;
  switch (functional.kind) {
    case EnergyKind::Zero:
      return 0.0;
    case EnergyKind::Linear:
      value = integrate(measure, functional.f);
      break;
    case EnergyKind::QuadraticInteraction: {
      const std::size_t n = measure.size();
      std::vector<double> rows(n);
      std::vector<double> terms(n);
      for (std::size_t i = 0; i < n; ++i) {
        const double* xi = measure.position(i);
        for (std::size_t j = 0; j < n; ++j)
          terms[j] = measure.weights[j] * functional.k(xi, measure.position(j));
        rows[i] = measure.weights[i] * pairwise_sum(terms);
      }
      const double n_d = static_cast<double>(n);
      value = pairwise_sum(rows) / (n_d * n_d);
      break;
    }
    case EnergyKind::TwoLayerRegression: {
      const std::vector<double> preds = two_layer_predictions(functional, measure);
      std::vector<double> sq(preds.size());
      for (std::size_t j = 0; j < preds.size(); ++j) {
        const double r = preds[j] - functional.targets[j];
        sq[j] = r * r;
      }
      value = pairwise_sum(sq) / static_cast<double>(preds.size());
      break;
    }
  }
  require_finite(value, "energy");
  return value;
}

double evaluate_F(const EnergyFunctional& functional,
                  const GridDensity& density) {
  double value = 0.0;
  switch (functional.kind) {
    case EnergyKind::Zero:
      return 0.0;
    case EnergyKind::Linear:
      value = integrate(density, functional.f);
      break;
    case EnergyKind::QuadraticInteraction: {
      const int d = density.domain.dimension;
      const std::size_t n = density.size();
      std::vector<double> centers(n * d);
      for (std::size_t c = 0; c < n; ++c)
        density.cell_center(c, centers.data() + c * d);
      std::vector<double> rows(n);
      std::vector<double> terms(n);
      for (std::size_t i = 0; i < n; ++i) {
        const double* xi = centers.data() + i * d;
        for (std::size_t j = 0; j < n; ++j)
          terms[j] = density.values[j] * functional.k(xi, centers.data() + j * d);
        rows[i] = density.values[i] * pairwise_sum(terms);
      }
      value = pairwise_sum(rows) * density.cell_volume * density.cell_volume;
      break;
    }
    case EnergyKind::TwoLayerRegression: {
      const int d = density.domain.dimension;
      std::vector<double> sq(functional.features.size());
      for (std::size_t j = 0; j < functional.features.size(); ++j) {
        const double* t = functional.features[j].data();
        const double pred = integrate(density, [&](const double* x) {
          return std::tanh(dot(x, t, d));
        });
        const double r = pred - functional.targets[j];
        sq[j] = r * r;
      }
      value = pairwise_sum(sq) / static_cast<double>(sq.size());
      break;
    }
  }
  require_finite(value, "energy");
  return value;
}

namespace {

// Uncentered flat derivative as a function of x, with the measure-level
// aggregates already folded in.
double flat_derivative_raw(const EnergyFunctional& fn,
                           const WeightedEnsemble& measure, const double* x,
                           const std::vector<double>* two_layer_preds) {
  switch (fn.kind) {
    case EnergyKind::Zero:
      return 0.0;
    case EnergyKind::Linear:
      return fn.f(x);
    case EnergyKind::QuadraticInteraction:
      return 2.0 * integrate(measure, [&](const double* y) { return fn.k(x, y); });
    case EnergyKind::TwoLayerRegression: {
      const int d = measure.domain.dimension;
      double s = 0.0;
      for (std::size_t j = 0; j < fn.features.size(); ++j) {
        const double residual = (*two_layer_preds)[j] - fn.targets[j];
        s += residual * std::tanh(dot(x, fn.features[j].data(), d));
      }
      return 2.0 * s / static_cast<double>(fn.features.size());
    }
  }
  return 0.0;
}

}  // namespace

double flat_derivative(const EnergyFunctional& functional,
                       const WeightedEnsemble& measure, const double* x) {
  std::vector<double> preds;
  if (functional.kind == EnergyKind::TwoLayerRegression)
    preds = two_layer_predictions(functional, measure);
  const double raw = flat_derivative_raw(functional, measure, x, &preds);
  if (!functional.centered) {
    require_finite(raw, "flat derivative");
    return raw;
  }
  const double mean = integrate(measure, [&](const double* y) {
    return flat_derivative_raw(functional, measure, y, &preds);
  });
  const double value = raw - mean;
  require_finite(value, "flat derivative");
  return value;
}

void flat_derivative_at_atoms(const EnergyFunctional& functional,
                              const WeightedEnsemble& measure,
                              EnergyAtomCache& cache,
                              std::vector<double>& out) {
  const std::size_t n = measure.size();
  const int d = measure.domain.dimension;
  out.assign(n, 0.0);

  const bool fresh = cache.positions != measure.positions;
  if (fresh) {
    cache.positions = measure.positions;
    cache.pair_values.clear();
    cache.activations.clear();
    cache.point_values.clear();
  }

  switch (functional.kind) {
    case EnergyKind::Zero:
      return;
    case EnergyKind::Linear: {
      if (cache.point_values.empty()) {
        cache.point_values.resize(n);
        for (std::size_t i = 0; i < n; ++i)
          cache.point_values[i] = functional.f(measure.position(i));
      }
      out = cache.point_values;
      break;
    }
    case EnergyKind::QuadraticInteraction: {
      if (cache.pair_values.empty()) {
        cache.pair_values.resize(n * n);
        for (std::size_t i = 0; i < n; ++i) {
          const double* xi = measure.position(i);
          for (std::size_t j = i; j < n; ++j) {
            const double v = functional.k(xi, measure.position(j));
            cache.pair_values[i * n + j] = v;
            cache.pair_values[j * n + i] = functional.k(measure.position(j), xi);
          }
        }
      }
      std::vector<double> terms(n);
      for (std::size_t i = 0; i < n; ++i) {
        const double* row = cache.pair_values.data() + i * n;
        for (std::size_t j = 0; j < n; ++j)
          terms[j] = measure.weights[j] * row[j];
        out[i] = 2.0 * pairwise_sum(terms) / static_cast<double>(n);
      }
      break;
    }
    case EnergyKind::TwoLayerRegression: {
      const std::size_t m = functional.features.size();
      if (cache.activations.empty()) {
        cache.activations.resize(m * n);
        for (std::size_t j = 0; j < m; ++j) {
          const double* t = functional.features[j].data();
          for (std::size_t i = 0; i < n; ++i)
            cache.activations[j * n + i] =
                std::tanh(dot(measure.position(i), t, d));
        }
      }
      std::vector<double> terms(n);
      for (std::size_t j = 0; j < m; ++j) {
        const double* act = cache.activations.data() + j * n;
        for (std::size_t i = 0; i < n; ++i)
          terms[i] = measure.weights[i] * act[i];
        const double pred = pairwise_sum(terms) / static_cast<double>(n);
        const double residual = pred - functional.targets[j];
        for (std::size_t i = 0; i < n; ++i)
          out[i] += 2.0 * residual * act[i] / static_cast<double>(m);
      }
      break;
    }
  }

  for (double v : out) require_finite(v, "flat derivative");

  if (functional.centered) {
    std::vector<double> terms(n);
    for (std::size_t i = 0; i < n; ++i) terms[i] = measure.weights[i] * out[i];
    const double mean = pairwise_sum(terms) / static_cast<double>(n);
    for (double& v : out) v -= mean;
  }
}

double verify_flat_derivative(const EnergyFunctional& functional,
                              const WeightedEnsemble& m,
                              const WeightedEnsemble& m2, int n_lambda) {
  if (m.positions != m2.positions)
    throw ConfigError("flat-derivative check needs matching atom positions");
  if (n_lambda < 1) throw ConfigError("n_lambda must be at least 1");

  const double lhs = evaluate_F(functional, m2) - evaluate_F(functional, m);

  const std::size_t n = m.size();
  const Quadrature& rule = gauss_legendre(n_lambda);
  WeightedEnsemble blend = m;
  std::vector<double> lambda_terms(rule.nodes.size());
  std::vector<double> inner(n);
  EnergyAtomCache cache;
  std::vector<double> derivs;
  for (std::size_t q = 0; q < rule.nodes.size(); ++q) {
    const double lambda = 0.5 * (rule.nodes[q] + 1.0);
    for (std::size_t i = 0; i < n; ++i)
      blend.weights[i] = m.weights[i] + lambda * (m2.weights[i] - m.weights[i]);
    flat_derivative_at_atoms(functional, blend, cache, derivs);
    // The difference measure has zero total mass, so centering cancels here.
    for (std::size_t i = 0; i < n; ++i)
      inner[i] = (m2.weights[i] - m.weights[i]) * derivs[i];
    lambda_terms[q] =
        0.5 * rule.weights[q] * pairwise_sum(inner) / static_cast<double>(n);
  }
  const double rhs = pairwise_sum(lambda_terms);
  return std::abs(lhs - rhs);
}

double ReferenceMeasure::density(const double* x) const {
  return std::exp(-potential(x)) / z;
}

double ReferenceMeasure::log_density(const double* x) const {
  return -potential(x) - std::log(z);
}

double reference_density(const ReferenceMeasure& ref, const double* x) {
  return ref.density(x);
}

namespace {

struct AxisPotential {
  std::function<double(double)> u;
  std::function<double(double)> du;
};

AxisPotential make_axis_potential(const std::string& name, double scale) {
  if (name == "zero")
    return {[](double) { return 0.0; }, [](double) { return 0.0; }};
  if (name == "quadratic")
    return {[scale](double t) { return scale * t * t; },
            [scale](double t) { return 2.0 * scale * t; }};
  if (name == "double_well")
    return {[scale](double t) {
              const double q = t * t - 0.25;
              return scale * q * q;
            },
            [scale](double t) { return 4.0 * scale * t * (t * t - 0.25); }};
  throw ConfigError("unknown reference potential: " + name);
}

// Golden-section refinement of an extremum already bracketed by a dense scan.
double polish_extremum(const std::function<double(double)>& g, double a,
                       double b, bool maximize) {
  const double phi = 0.6180339887498949;
  double x1 = b - phi * (b - a);
  double x2 = a + phi * (b - a);
  double f1 = g(x1), f2 = g(x2);
  for (int it = 0; it < 200 && b - a > 1e-14; ++it) {
    const bool keep_left = maximize ? (f1 > f2) : (f1 < f2);
    if (keep_left) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - phi * (b - a);
      f1 = g(x1);
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + phi * (b - a);
      f2 = g(x2);
    }
  }
  return maximize ? std::max(f1, f2) : std::min(f1, f2);
}

// Scan g over [lo, hi] on a dense grid, then polish around the best bracket.
double scan_extremum(const std::function<double(double)>& g, double lo,
                     double hi, int points, bool maximize) {
  double best = g(lo);
  int best_i = 0;
  const double h = (hi - lo) / points;
  for (int i = 1; i <= points; ++i) {
    const double v = g(lo + i * h);
    if (maximize ? (v > best) : (v < best)) {
      best = v;
      best_i = i;
    }
  }
  const double a = lo + std::max(0, best_i - 1) * h;
  const double b = lo + std::min(points, best_i + 1) * h;
  const double polished = polish_extremum(g, a, b, maximize);
  return maximize ? std::max(best, polished) : std::min(best, polished);
}

}  // namespace

ReferenceMeasure make_reference(const std::string& potential,
                                double potential_scale, const Domain& domain,
                                int grid_points) {
  const int d = domain.dimension;
  const double L = domain.half_width;
  if (grid_points < 2) throw ConfigError("reference.grid_points must be >= 2");

  AxisPotential axis = make_axis_potential(potential, potential_scale);

  ReferenceMeasure ref;
  ref.domain = domain;
  ref.grid_points = grid_points;
  ref.potential = [axis, d](const double* x) {
    double s = 0.0;
    for (int k = 0; k < d; ++k) s += axis.u(x[k]);
    return s;
  };
  ref.potential_gradient = [axis, d](const double* x, double* out) {
    double norm2 = 0.0;
    for (int k = 0; k < d; ++k) {
      out[k] = axis.du(x[k]);
      norm2 += out[k] * out[k];
    }
    return std::sqrt(norm2);
  };

  // Normalizer by midpoint quadrature on the configured grid.
  {
    GridDensity unnorm = grid_from_function(
        domain, grid_points,
        [&](const double* x) { return std::exp(-ref.potential(x)); },
        /*normalize=*/false);
    ref.z = unnorm.total_mass();
  }

  // Separable potential: box extremes of U are sums of per-axis extremes.
  const double u_min = scan_extremum(axis.u, -L, L, grid_points, false);
  const double u_max = scan_extremum(axis.u, -L, L, grid_points, true);
  ref.pi_max = std::exp(-d * u_min) / ref.z;
  ref.pi_min = std::exp(-d * u_max) / ref.z;

  if (d == 1) {
    ref.l_pi = scan_extremum(
        [&](double t) { return std::abs(axis.du(t)) * std::exp(-axis.u(t)); },
        -L, L, grid_points, true) / ref.z;
  } else if (d == 2) {
    // Dense scan of |grad pi|, then coordinate-wise polish from the best cell.
    const int g = std::max(grid_points, 256);
    const double h = 2.0 * L / g;
    double best = 0.0;
    double bx = 0.0, by = 0.0;
    for (int i = 0; i <= g; ++i) {
      const double x0 = -L + i * h;
      const double e0 = std::exp(-axis.u(x0));
      const double du0 = axis.du(x0);
      for (int j = 0; j <= g; ++j) {
        const double x1 = -L + j * h;
        const double du1 = axis.du(x1);
        const double v = e0 * std::exp(-axis.u(x1)) *
                         std::sqrt(du0 * du0 + du1 * du1);
        if (v > best) {
          best = v;
          bx = x0;
          by = x1;
        }
      }
    }
    // Nested golden polish inside the 2h cell around the best grid point.
    const auto grad_pi = [&](double t0, double t1) {
      const double du0 = axis.du(t0), du1 = axis.du(t1);
      return std::exp(-axis.u(t0) - axis.u(t1)) *
             std::sqrt(du0 * du0 + du1 * du1);
    };
    const double lo1 = std::max(-L, by - h), hi1 = std::min(L, by + h);
    best = std::max(best, polish_extremum(
        [&](double t0) {
          return polish_extremum([&](double t1) { return grad_pi(t0, t1); },
                                 lo1, hi1, true);
        },
        std::max(-L, bx - h), std::min(L, bx + h), true));
    ref.l_pi = best / ref.z;
  } else {
    throw ConfigError("reference constants certification supports d <= 2");
  }

  return ref;
}

}  // namespace wf
