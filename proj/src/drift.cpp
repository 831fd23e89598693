#include "weightflow/drift.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <sstream>
#include <utility>

#include "weightflow/errors.hpp"
#include "weightflow/numerics.hpp"

namespace wf {

namespace {

// Grid-kernel matrices above this entry count are not cached; the
// convolution on the divergence grid falls back to direct summation.
constexpr std::size_t kGridMatrixCap = 8u << 20;

std::string format_point(const double* x, int d) {
  std::ostringstream os;
  os << "(";
  for (int k = 0; k < d; ++k) {
    if (k > 0) os << ", ";
    os << x[k];
  }
  os << ")";
  return os.str();
}

double weighted_mean(const WeightedEnsemble& mu, const std::vector<double>& v) {
  const std::size_t n = mu.size();
  std::vector<double> terms(n);
  for (std::size_t i = 0; i < n; ++i) terms[i] = mu.weights[i] * v[i];
  return pairwise_sum(terms) / static_cast<double>(n);
}

}  // namespace

const char* drift_variant_name(DriftVariant variant) {
  switch (variant) {
    case DriftVariant::K1_SmoothEvolving:
      return "K1_SmoothEvolving";
    case DriftVariant::K2_SmoothBoth:
      return "K2_SmoothBoth";
    case DriftVariant::K3_KernelEnergyLu:
      return "K3_KernelEnergyLu";
    case DriftVariant::K4_KernelEnergyCarrillo:
      return "K4_KernelEnergyCarrillo";
    case DriftVariant::Chi2:
      return "Chi2";
  }
  return "unknown";
}

namespace {

void check_constant_inputs(double sigma, const KernelConstants& kernel,
                           const ReferenceConstants& reference) {
  if (sigma < 0.0) throw ConfigError("drift.sigma must be nonnegative");
  if (!(kernel.k_min > 0.0) || !(kernel.k_max > 0.0))
    throw ConfigError("kernel constants must be positive; certify k_min first");
  if (!(reference.pi_min > 0.0) || !(reference.pi_max > 0.0))
    throw ConfigError("reference density bounds must be positive");
}

}  // namespace

double drift_bound_constant(DriftVariant variant, double sigma,
                            const KernelConstants& kernel,
                            const ReferenceConstants& reference, double c_f) {
  check_constant_inputs(sigma, kernel, reference);
  const double max_log = std::max(std::log(reference.pi_max / kernel.k_min),
                                  std::log(kernel.k_max / reference.pi_min));
  switch (variant) {
    case DriftVariant::K1_SmoothEvolving:
    case DriftVariant::K2_SmoothBoth:
      return c_f + sigma * max_log +
             sigma * std::log(kernel.k_max / reference.pi_min);
    case DriftVariant::K3_KernelEnergyLu:
      return c_f + 2.0 * sigma * max_log +
             sigma * (kernel.k_max / kernel.k_min + 1.0);
    case DriftVariant::K4_KernelEnergyCarrillo:
      return c_f + sigma * max_log;
    case DriftVariant::Chi2:
      return c_f + 4.0 * sigma * kernel.k_max / reference.pi_min;
  }
  throw ConfigError("unknown drift variant");
}

double drift_lipschitz_constant(DriftVariant variant, double sigma,
                                const KernelConstants& kernel,
                                const ReferenceConstants& reference,
                                double l_f) {
  check_constant_inputs(sigma, kernel, reference);
  switch (variant) {
    case DriftVariant::K1_SmoothEvolving:
    case DriftVariant::K2_SmoothBoth:
    case DriftVariant::K4_KernelEnergyCarrillo:
      return l_f + sigma * (3.0 * kernel.lip / kernel.k_min +
                            2.0 * reference.l_pi / reference.pi_min);
    case DriftVariant::K3_KernelEnergyLu:
      return l_f +
             (4.0 * kernel.lip / kernel.k_min +
              2.0 * reference.l_pi / reference.pi_min) +
             2.0 * kernel.k_max * kernel.lip / (kernel.k_min * kernel.k_min);
    case DriftVariant::Chi2:
      return l_f + 6.0 * sigma * kernel.lip / reference.pi_min;
  }
  throw ConfigError("unknown drift variant");
}

std::string drift_lipschitz_note(DriftVariant variant) {
  if (variant == DriftVariant::K3_KernelEnergyLu) {
    return "kernel terms carry no sigma prefactor, so this constant is not "
           "homogeneous in sigma and stays bounded away from L_F as sigma -> 0";
  }
  return "";
}

// Weight-dependent values for one frozen position set. Position-keyed parts
// (reference logs, grid-kernel matrix) survive weight updates between steps.
struct DriftContext::AtomTables {
  std::vector<double> positions;
  std::vector<double> weights;
  bool weights_valid = false;

  // keyed by positions
  std::vector<double> log_pi;       // log pi(x_i)
  std::vector<double> k_pi;         // (K * pi)(x_i), K2 only
  std::vector<double> kernel_grid;  // K(grid_g - x_i), row-major G x N
  bool kernel_grid_built = false;

  // recomputed whenever weights change
  std::vector<double> conv;       // (K * mu)(x_i)
  std::vector<double> df;         // flat derivative of F at atoms
  std::vector<double> log_ratio;  // log(conv / pi) (K2: against K * pi)
  std::vector<double> main_term;  // the variant's divergence term at atoms
  double log_ratio_mean = 0.0;
  double centering = 0.0;
};

DriftContext::DriftContext(const DriftStrategy& strategy)
    : strategy_(strategy), smoother_(strategy.kernel) {
  if (strategy_.sigma < 0.0) throw ConfigError("drift.sigma must be nonnegative");
  if (strategy_.quadrature_nodes < 2)
    throw ConfigError("drift.quadrature_nodes must be at least 2");
  if (strategy_.kl_grid_points < 2)
    throw ConfigError("drift.kl_grid_points must be at least 2");
  const Domain& kd = strategy_.kernel.domain;
  const Domain& rd = strategy_.reference.domain;
  if (kd.dimension != rd.dimension || kd.half_width != rd.half_width)
    throw ConfigError("kernel and reference measure must share the domain");
  const bool nested = strategy_.variant == DriftVariant::K4_KernelEnergyCarrillo ||
                      strategy_.variant == DriftVariant::Chi2;
  if (nested && strategy_.kernel.mode == MollifierMode::FreeGaussian &&
      strategy_.kernel.kappa > 0.0) {
    throw ConfigError(
        "kernel.kappa > 0 with mode=free_gaussian is incompatible with the "
        "convolved divergence variants: the outer convolution runs over an "
        "unbounded range where the offset does not integrate; use "
        "mode=truncated_gaussian or kappa = 0");
  }
}

DriftContext::~DriftContext() = default;

void DriftContext::ensure_pi_grid() {
  if (pi_grid_.size() > 0) return;
  const ReferenceMeasure& ref = strategy_.reference;
  pi_grid_ = grid_from_function(
      ref.domain, ref.grid_points,
      [&ref](const double* x) { return ref.density(x); }, true);
}

void DriftContext::ensure_kl_grid() {
  if (grid_cells_ > 0) return;
  const Domain& domain = strategy_.reference.domain;
  const int d = domain.dimension;
  const int per_axis =
      d == 1 ? strategy_.kl_grid_points
             : std::max<int>(32, static_cast<int>(std::llround(std::pow(
                                     static_cast<double>(strategy_.kl_grid_points),
                                     1.0 / static_cast<double>(d)))));
  GridDensity pi_cells = grid_from_function(
      domain, per_axis,
      [this](const double* x) { return strategy_.reference.density(x); }, true);
  grid_cells_ = pi_cells.size();
  grid_cell_volume_ = pi_cells.cell_volume;
  grid_points_.resize(grid_cells_ * static_cast<std::size_t>(d));
  pi_grid_values_ = pi_cells.values;
  log_pi_grid_.resize(grid_cells_);
  for (std::size_t c = 0; c < grid_cells_; ++c) {
    pi_cells.cell_center(c, grid_points_.data() + c * static_cast<std::size_t>(d));
    log_pi_grid_[c] = std::log(pi_grid_values_[c]);
  }
  if (strategy_.variant == DriftVariant::K2_SmoothBoth) {
    ensure_pi_grid();
    k_pi_grid_.resize(grid_cells_);
    for (std::size_t c = 0; c < grid_cells_; ++c) {
      k_pi_grid_[c] = kernel_convolve(
          pi_grid_, grid_points_.data() + c * static_cast<std::size_t>(d),
          strategy_.kernel);
      if (!(k_pi_grid_[c] > 0.0))
        throw NumericalError(
            "kernel floor violated: smoothed reference vanishes on the "
            "divergence grid; increase kernel.kappa");
    }
  }
}

void DriftContext::ensure_grid_kernel(const WeightedEnsemble& mu) {
  AtomTables& t = *tables_;
  if (t.kernel_grid_built) return;
  const std::size_t n = mu.size();
  const int d = mu.domain.dimension;
  if (grid_cells_ * n > kGridMatrixCap) return;  // leave unbuilt, sum directly
  t.kernel_grid.resize(grid_cells_ * n);
  std::vector<double> z(d);
  for (std::size_t g = 0; g < grid_cells_; ++g) {
    const double* xg = grid_points_.data() + g * static_cast<std::size_t>(d);
    double* row = t.kernel_grid.data() + g * n;
    for (std::size_t i = 0; i < n; ++i) {
      const double* xi = mu.position(i);
      for (int k = 0; k < d; ++k) z[k] = xg[k] - xi[k];
      row[i] = kernel_eval(z.data(), strategy_.kernel);
    }
  }
  t.kernel_grid_built = true;
}

void DriftContext::conv_on_grid(const WeightedEnsemble& mu,
                                std::vector<double>& out) {
  ensure_kl_grid();
  ensure_grid_kernel(mu);
  const AtomTables& t = *tables_;
  const std::size_t n = mu.size();
  if (t.kernel_grid_built) {
    out.resize(grid_cells_);
    std::vector<double> terms(n);
    for (std::size_t g = 0; g < grid_cells_; ++g) {
      const double* row = t.kernel_grid.data() + g * n;
      for (std::size_t i = 0; i < n; ++i) terms[i] = row[i] * mu.weights[i];
      out[g] = pairwise_sum(terms) / static_cast<double>(n);
    }
  } else {
    smoother_.convolve_at(mu, grid_points_, grid_cells_, out);
  }
}

double DriftContext::grid_divergence(const WeightedEnsemble& mu, bool chi_square) {
  std::vector<double> conv;
  conv_on_grid(mu, conv);
  const bool against_smoothed =
      strategy_.variant == DriftVariant::K2_SmoothBoth && !chi_square;
  std::vector<double> terms(grid_cells_);
  for (std::size_t g = 0; g < grid_cells_; ++g) {
    if (chi_square) {
      const double r = conv[g] / pi_grid_values_[g] - 1.0;
      terms[g] = grid_cell_volume_ * r * r * pi_grid_values_[g];
    } else if (conv[g] > 0.0) {
      const double log_q =
          against_smoothed ? std::log(k_pi_grid_[g]) : log_pi_grid_[g];
      terms[g] = grid_cell_volume_ * conv[g] * (std::log(conv[g]) - log_q);
    } else {
      terms[g] = 0.0;
    }
  }
  return pairwise_sum(terms);
}

double DriftContext::lebesgue_kl(const WeightedEnsemble& mu) {
  return grid_divergence(mu, false);
}

double DriftContext::smoothed_value(const WeightedEnsemble& mu, const double* x) {
  std::vector<double> targets(x, x + mu.domain.dimension);
  std::vector<double> out;
  smoother_.convolve_at(mu, targets, 1, out);
  return out[0];
}

// Outer convolution of the divergence integrand: for FreeGaussian kernels a
// Gauss-Hermite rule after the substitution z = x + 2 eps t (exact weight
// match with the kernel's per-axis variance 2 eps^2, integrand extended
// beyond the box by the global density formulas); for TruncatedGaussian a
// tensor Gauss-Legendre rule over the box with the full kernel, so the
// kappa offset integrates over a bounded range.
void DriftContext::nested_at_targets(const WeightedEnsemble& mu,
                                     const std::vector<double>& targets,
                                     std::size_t n_targets,
                                     std::vector<double>& out) {
  const int d = mu.domain.dimension;
  const int q_nodes = strategy_.quadrature_nodes;
  const bool chi = strategy_.variant == DriftVariant::Chi2;
  const bool free_mode = strategy_.kernel.mode == MollifierMode::FreeGaussian;
  const double eps = strategy_.kernel.epsilon;
  const double half_width = mu.domain.half_width;

  double cells_d = 1.0;
  for (int k = 0; k < d; ++k) cells_d *= static_cast<double>(q_nodes);
  if (cells_d > 1e6)
    throw ConfigError("drift.quadrature_nodes^d exceeds 1e6 nodes; reduce it");
  const std::size_t n_nodes = static_cast<std::size_t>(cells_d);

  const Quadrature& rule =
      free_mode ? gauss_hermite(q_nodes) : gauss_legendre(q_nodes);

  // Node offsets (free mode) or absolute coordinates (truncated mode) with
  // their tensor weights, shared by every target.
  std::vector<double> node_coord(n_nodes * static_cast<std::size_t>(d));
  std::vector<double> node_weight(n_nodes, 1.0);
  std::vector<int> idx(d, 0);
  const double inv_sqrt_pi = 1.0 / std::sqrt(M_PI);
  for (std::size_t q = 0; q < n_nodes; ++q) {
    double w = 1.0;
    for (int k = 0; k < d; ++k) {
      const int j = idx[k];
      if (free_mode) {
        node_coord[q * d + k] = 2.0 * eps * rule.nodes[j];
        w *= rule.weights[j] * inv_sqrt_pi;
      } else {
        node_coord[q * d + k] = half_width * rule.nodes[j];
        w *= half_width * rule.weights[j];
      }
    }
    node_weight[q] = w;
    for (int k = d - 1; k >= 0; --k) {
      if (++idx[k] < q_nodes) break;
      idx[k] = 0;
    }
  }

  // The smoothed density at every quadrature point of every target, in one
  // batched convolution.
  std::vector<double> eval_points;
  if (free_mode) {
    eval_points.resize(n_targets * n_nodes * static_cast<std::size_t>(d));
    for (std::size_t tgt = 0; tgt < n_targets; ++tgt) {
      const double* x = targets.data() + tgt * static_cast<std::size_t>(d);
      double* block = eval_points.data() + tgt * n_nodes * static_cast<std::size_t>(d);
      for (std::size_t q = 0; q < n_nodes; ++q)
        for (int k = 0; k < d; ++k)
          block[q * d + k] = x[k] + node_coord[q * d + k];
    }
  } else {
    eval_points = node_coord;  // shared grid for all targets
  }
  const std::size_t n_eval = eval_points.size() / static_cast<std::size_t>(d);
  std::vector<double> conv_nodes;
  smoother_.convolve_at(mu, eval_points, n_eval, conv_nodes);

  // g at the evaluation points.
  std::vector<double> g_nodes(n_eval);
  for (std::size_t e = 0; e < n_eval; ++e) {
    const double* z = eval_points.data() + e * static_cast<std::size_t>(d);
    const double log_pi = strategy_.reference.log_density(z);
    if (chi) {
      g_nodes[e] = conv_nodes[e] * std::exp(-log_pi);
    } else {
      if (!(conv_nodes[e] > 0.0))
        throw NumericalError(
            std::string("kernel floor violated: smoothed density vanishes at "
                        "quadrature point ") +
            format_point(z, d) + " for " + drift_variant_name(strategy_.variant) +
            "; increase kernel.kappa or use mode=free_gaussian");
      g_nodes[e] = std::log(conv_nodes[e]) - log_pi;
    }
  }

  out.resize(n_targets);
  std::vector<double> terms(n_nodes);
  std::vector<double> z(d);
  for (std::size_t tgt = 0; tgt < n_targets; ++tgt) {
    if (free_mode) {
      const double* block = g_nodes.data() + tgt * n_nodes;
      for (std::size_t q = 0; q < n_nodes; ++q)
        terms[q] = node_weight[q] * block[q];
    } else {
      const double* x = targets.data() + tgt * static_cast<std::size_t>(d);
      for (std::size_t q = 0; q < n_nodes; ++q) {
        for (int k = 0; k < d; ++k) z[k] = x[k] - node_coord[q * d + k];
        terms[q] = node_weight[q] * smoother_.kernel_value(z.data()) *
                   g_nodes[q];
      }
    }
    out[tgt] = pairwise_sum(terms);
  }
}

void DriftContext::refresh_atom_tables(const WeightedEnsemble& mu) {
  const std::size_t n = mu.size();
  const int d = mu.domain.dimension;
  if (d != strategy_.reference.domain.dimension)
    throw ConfigError("ensemble dimension does not match the drift strategy");
  if (!tables_) tables_ = std::make_unique<AtomTables>();
  AtomTables& t = *tables_;

  if (t.positions != mu.positions) {
    t.positions = mu.positions;
    t.log_pi.resize(n);
    for (std::size_t i = 0; i < n; ++i)
      t.log_pi[i] = strategy_.reference.log_density(mu.position(i));
    if (strategy_.variant == DriftVariant::K2_SmoothBoth) {
      ensure_pi_grid();
      t.k_pi.resize(n);
      for (std::size_t i = 0; i < n; ++i) {
        t.k_pi[i] = kernel_convolve(pi_grid_, mu.position(i), strategy_.kernel);
        if (!(t.k_pi[i] > 0.0))
          throw NumericalError(
              std::string("kernel floor violated: smoothed reference "
                          "vanishes at atom ") +
              format_point(mu.position(i), d) + "; increase kernel.kappa");
      }
    }
    t.kernel_grid.clear();
    t.kernel_grid_built = false;
    t.weights_valid = false;
  }
  if (t.weights_valid && t.weights == mu.weights) return;
  t.weights = mu.weights;
  t.weights_valid = false;

  flat_derivative_at_atoms(strategy_.functional, mu, energy_cache_, t.df);

  if (strategy_.sigma == 0.0) {
    t.conv.assign(n, 0.0);
    t.log_ratio.assign(n, 0.0);
    t.main_term.assign(n, 0.0);
    t.log_ratio_mean = 0.0;
    t.centering = 0.0;
    t.weights_valid = true;
    return;
  }

  smoother_.convolve_at_atoms(mu, t.conv);
  t.log_ratio.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (!(t.conv[i] > 0.0))
      throw NumericalError(
          std::string("kernel floor violated: smoothed density vanishes at "
                      "atom ") +
          format_point(mu.position(i), d) + " for " +
          drift_variant_name(strategy_.variant) + "; increase kernel.kappa");
    const double log_target =
        strategy_.variant == DriftVariant::K2_SmoothBoth ? std::log(t.k_pi[i])
                                                         : t.log_pi[i];
    t.log_ratio[i] = std::log(t.conv[i]) - log_target;
  }
  t.log_ratio_mean = weighted_mean(mu, t.log_ratio);

  switch (strategy_.variant) {
    case DriftVariant::K1_SmoothEvolving:
    case DriftVariant::K2_SmoothBoth: {
      t.main_term = t.log_ratio;
      t.centering = strategy_.centering == CenteringMode::LebesgueKl
                        ? lebesgue_kl(mu)
                        : t.log_ratio_mean;
      break;
    }
    case DriftVariant::K3_KernelEnergyLu: {
      // (K * (mu / K*mu))(x_i) reuses the cached kernel matrix by convolving
      // the same positions with weights w_j / conv_j.
      WeightedEnsemble scaled = mu;
      for (std::size_t j = 0; j < n; ++j) scaled.weights[j] = mu.weights[j] / t.conv[j];
      std::vector<double> ratio;
      smoother_.convolve_at_atoms(scaled, ratio);
      t.main_term.resize(n);
      for (std::size_t i = 0; i < n; ++i)
        t.main_term[i] = t.log_ratio[i] + ratio[i] - 1.0;
      t.centering = t.log_ratio_mean;
      break;
    }
    case DriftVariant::K4_KernelEnergyCarrillo: {
      nested_at_targets(mu, mu.positions, n, t.main_term);
      t.centering = strategy_.centering == CenteringMode::LebesgueKl
                        ? lebesgue_kl(mu)
                        : weighted_mean(mu, t.main_term);
      break;
    }
    case DriftVariant::Chi2: {
      nested_at_targets(mu, mu.positions, n, t.main_term);
      t.centering = weighted_mean(mu, t.main_term);
      break;
    }
  }
  t.weights_valid = true;
}

void DriftContext::eval_at_atoms(const WeightedEnsemble& mu,
                                 std::vector<double>& out) {
  refresh_atom_tables(mu);
  const AtomTables& t = *tables_;
  const std::size_t n = mu.size();
  const double factor =
      strategy_.variant == DriftVariant::Chi2 ? 2.0 * strategy_.sigma : strategy_.sigma;
  out.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    out[i] = t.df[i] + factor * (t.main_term[i] - t.centering);
    if (!std::isfinite(out[i]))
      throw NumericalError(
          std::string("non-finite drift for ") +
          drift_variant_name(strategy_.variant) + " at atom " +
          format_point(mu.position(i), mu.domain.dimension));
  }
}

double DriftContext::eval(const WeightedEnsemble& mu, const double* x) {
  refresh_atom_tables(mu);
  const AtomTables& t = *tables_;
  const int d = mu.domain.dimension;
  const double df = flat_derivative(strategy_.functional, mu, x);
  if (strategy_.sigma == 0.0) return df;

  double main = 0.0;
  switch (strategy_.variant) {
    case DriftVariant::K1_SmoothEvolving:
    case DriftVariant::K2_SmoothBoth:
    case DriftVariant::K3_KernelEnergyLu: {
      const double conv_x = smoothed_value(mu, x);
      if (!(conv_x > 0.0))
        throw NumericalError(
            std::string("kernel floor violated: smoothed density vanishes "
                        "at ") +
            format_point(x, d) + " for " + drift_variant_name(strategy_.variant) +
            "; increase kernel.kappa");
      double log_target;
      if (strategy_.variant == DriftVariant::K2_SmoothBoth) {
        ensure_pi_grid();
        const double k_pi = kernel_convolve(pi_grid_, x, strategy_.kernel);
        if (!(k_pi > 0.0))
          throw NumericalError(
              std::string("kernel floor violated: smoothed reference "
                          "vanishes at ") +
              format_point(x, d) + "; increase kernel.kappa");
        log_target = std::log(k_pi);
      } else {
        log_target = strategy_.reference.log_density(x);
      }
      main = std::log(conv_x) - log_target;
      if (strategy_.variant == DriftVariant::K3_KernelEnergyLu) {
        const std::size_t n = mu.size();
        WeightedEnsemble scaled = mu;
        for (std::size_t j = 0; j < n; ++j)
          scaled.weights[j] = mu.weights[j] / t.conv[j];
        std::vector<double> targets(x, x + d);
        std::vector<double> ratio;
        smoother_.convolve_at(scaled, targets, 1, ratio);
        main += ratio[0] - 1.0;
      }
      break;
    }
    case DriftVariant::K4_KernelEnergyCarrillo:
    case DriftVariant::Chi2: {
      std::vector<double> targets(x, x + d);
      std::vector<double> nested;
      nested_at_targets(mu, targets, 1, nested);
      main = nested[0];
      break;
    }
  }
  const double factor =
      strategy_.variant == DriftVariant::Chi2 ? 2.0 * strategy_.sigma : strategy_.sigma;
  const double a = df + factor * (main - t.centering);
  if (!std::isfinite(a))
    throw NumericalError(std::string("non-finite drift for ") +
                         drift_variant_name(strategy_.variant) + " at " +
                         format_point(x, d));
  return a;
}

double DriftContext::mean(const WeightedEnsemble& mu) {
  std::vector<double> values;
  eval_at_atoms(mu, values);
  return weighted_mean(mu, values);
}

double DriftContext::energy_value(const WeightedEnsemble& mu) {
  refresh_atom_tables(mu);
  const double f_value = evaluate_F(strategy_.functional, mu);
  if (strategy_.sigma == 0.0) return f_value;
  switch (strategy_.variant) {
    case DriftVariant::K1_SmoothEvolving:
    case DriftVariant::K4_KernelEnergyCarrillo:
    case DriftVariant::K2_SmoothBoth:
      return f_value + strategy_.sigma * grid_divergence(mu, false);
    case DriftVariant::K3_KernelEnergyLu:
      return f_value + strategy_.sigma * tables_->log_ratio_mean;
    case DriftVariant::Chi2:
      return f_value + strategy_.sigma * grid_divergence(mu, true);
  }
  throw ConfigError("unknown drift variant");
}

double DriftContext::centering_value(const WeightedEnsemble& mu) {
  refresh_atom_tables(mu);
  return tables_->centering;
}

double DriftContext::empirical_log_ratio_mean(const WeightedEnsemble& mu) {
  refresh_atom_tables(mu);
  return tables_->log_ratio_mean;
}

double drift_eval(const DriftStrategy& strategy, const WeightedEnsemble& mu,
                  const double* x) {
  DriftContext context(strategy);
  return context.eval(mu, x);
}

double drift_mean(const DriftStrategy& strategy, const WeightedEnsemble& mu) {
  DriftContext context(strategy);
  return context.mean(mu);
}

}  // namespace wf
