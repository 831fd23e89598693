// The reaction-rate function a(mu, x) for the five kernelization strategies,
// plus the certified bound and Lipschitz constant calculators.
#pragma once

#include <memory>
#include <string>
#include <vector>

#include "weightflow/ensemble.hpp"
#include "weightflow/functional.hpp"
#include "weightflow/kernel.hpp"

namespace wf {

enum class DriftVariant {
  K1_SmoothEvolving,        // smooth only the evolving measure
  K2_SmoothBoth,            // smooth evolving and target measures
  K3_KernelEnergyLu,        // kernelized energy, per-atom form
  K4_KernelEnergyCarrillo,  // kernelized energy, convolved-log form
  Chi2,                     // chi-square divergence in place of KL
};

// The normalizing scalar subtracted from the divergence part of the drift:
// either the Lebesgue-grid KL of the smoothed density (the analytical form)
// or the measure-weighted average of the variant's own divergence term (the
// discrete algorithm's surrogate, which preserves mass exactly).
enum class CenteringMode { LebesgueKl, EmpiricalMean };

struct DriftStrategy {
  DriftVariant variant = DriftVariant::K3_KernelEnergyLu;
  double sigma = 1.0;
  MollifierSpec kernel;
  EnergyFunctional functional;
  ReferenceMeasure reference;
  CenteringMode centering = CenteringMode::EmpiricalMean;
  int quadrature_nodes = 64;  // nested-convolution rule (K4, Chi2)
  int kl_grid_points = 2048;  // per-axis Lebesgue KL grid
};

struct ReferenceConstants {
  double pi_min = 0.0;
  double pi_max = 0.0;
  double l_pi = 0.0;
};

struct DriftConstants {
  double bound = 0.0;      // C such that |a| <= C
  double lipschitz = 0.0;  // L such that |a(mu,x)-a(nu,y)| <= L (W_2 + |x-y|)
};

double drift_bound_constant(DriftVariant variant, double sigma,
                            const KernelConstants& kernel,
                            const ReferenceConstants& reference, double c_f);

double drift_lipschitz_constant(DriftVariant variant, double sigma,
                                const KernelConstants& kernel,
                                const ReferenceConstants& reference,
                                double l_f);

// Non-empty for variants whose Lipschitz formula has a quirk worth surfacing
// in constant tables (K3's kernel terms carry no sigma prefactor, so the
// bound is not homogeneous in sigma like the other variants').
std::string drift_lipschitz_note(DriftVariant variant);

const char* drift_variant_name(DriftVariant variant);

// Evaluation engine with caches tied to a frozen position set: the dense
// kernel matrix, flat-derivative tables, reference log-densities at atoms,
// and the Lebesgue KL grid.  Not safe for concurrent use of one instance.
class DriftContext {
 public:
  explicit DriftContext(const DriftStrategy& strategy);
  ~DriftContext();
  DriftContext(const DriftContext&) = delete;
  DriftContext& operator=(const DriftContext&) = delete;

  // a(mu, x_i) for every atom of mu, sharing all measure-level work.
  void eval_at_atoms(const WeightedEnsemble& mu, std::vector<double>& out);

  // a(mu, x) at an arbitrary point.
  double eval(const WeightedEnsemble& mu, const double* x);

  // (1/N) sum_i w_i a(mu, x_i).
  double mean(const WeightedEnsemble& mu);

  // Regularized energy of the configured variant, evaluated with the same
  // cached tables as eval_at_atoms. Used for per-step diagnostics.
  double energy_value(const WeightedEnsemble& mu);

  // The centering scalar c(mu) used by the last evaluation pipeline
  // (KL surrogate or grid KL, depending on the centering mode).
  double centering_value(const WeightedEnsemble& mu);

  // Divergence part of the drift's energy: int log(K*mu / pi) dmu for K3,
  // used by the per-step diagnostics.
  double empirical_log_ratio_mean(const WeightedEnsemble& mu);

  const DriftStrategy& strategy() const { return strategy_; }
  SmoothingOperator& smoother() { return smoother_; }

 private:
  struct AtomTables;  // per-position cached values

  void refresh_atom_tables(const WeightedEnsemble& mu);
  void ensure_pi_grid();
  void ensure_kl_grid();
  void ensure_grid_kernel(const WeightedEnsemble& mu);
  void conv_on_grid(const WeightedEnsemble& mu, std::vector<double>& out);
  double grid_divergence(const WeightedEnsemble& mu, bool chi_square);
  double lebesgue_kl(const WeightedEnsemble& mu);
  void nested_at_targets(const WeightedEnsemble& mu,
                         const std::vector<double>& targets,
                         std::size_t n_targets, std::vector<double>& out);
  double smoothed_value(const WeightedEnsemble& mu, const double* x);

  DriftStrategy strategy_;
  SmoothingOperator smoother_;
  EnergyAtomCache energy_cache_;

  // Reference density resampled onto its own declared grid, for the K2
  // smoothed-target convolutions.
  GridDensity pi_grid_;

  // Lebesgue divergence grid, built on demand.
  std::vector<double> grid_points_;   // row-major cell centers
  std::vector<double> log_pi_grid_;
  std::vector<double> pi_grid_values_;
  std::vector<double> k_pi_grid_;     // (K * pi) on the grid, for K2
  double grid_cell_volume_ = 0.0;
  std::size_t grid_cells_ = 0;

  std::unique_ptr<AtomTables> tables_;
};

// One-shot conveniences over a freshly built context.
double drift_eval(const DriftStrategy& strategy, const WeightedEnsemble& mu,
                  const double* x);
double drift_mean(const DriftStrategy& strategy, const WeightedEnsemble& mu);

}  // namespace wf
