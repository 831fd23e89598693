// Mollifier and smoothing-kernel machinery: the bandwidth-eps mollifier
// xi_eps, the kernel K_eps = xi_eps * xi_eps, and certified bound constants
// (K_min, K_max, Lipschitz) used by the drift bound audits.
#pragma once

#include <memory>
#include <vector>

#include "weightflow/ensemble.hpp"
#include "weightflow/numerics.hpp"

namespace wf {

enum class MollifierMode {
  // Gaussian base density truncated to the box and renormalized by
  // (2 Phi(L/eps) - 1)^d.  Literal construction used by the constants audit.
  TruncatedGaussian,
  // Plain Gaussian on all of R^d.  Default for dynamics: K_eps stays strictly
  // positive over the whole difference set, so log terms never blow up.
  FreeGaussian,
};

struct MollifierSpec {
  double epsilon = 0.25;          // bandwidth
  Domain domain;                  // box the measures live on
  MollifierMode mode = MollifierMode::FreeGaussian;
  double kappa = 0.0;             // additive positivity floor on K_eps
};

// Certified constants for K_eps over displacements |z| <= eval_radius.
struct KernelConstants {
  double k_min = 0.0;
  double k_max = 0.0;
  double lip = 0.0;
};

// (2 Phi(L/eps) - 1)^d, the mass the Gaussian base keeps inside the box.
double normalization_constant(double epsilon, const Domain& domain);

// xi_eps(x).  TruncatedGaussian mode rejects x outside the box.
double mollifier_density(const double* x, const MollifierSpec& spec);

// K_eps(z) = (xi_eps * xi_eps)(z) + kappa for a displacement z.
// FreeGaussian: closed form (Gaussian with variance 2 eps^2 per axis).
// TruncatedGaussian: per-axis adaptive quadrature to relative tol 1e-8.
double kernel_eval(const double* z, const MollifierSpec& spec);

// One axis of the separable kernel, without the kappa floor.
double kernel_eval_axis(double z, const MollifierSpec& spec);

// (K_eps * mu)(x) = (1/N) sum_i w_i K_eps(x - x_i), or the grid Riemann sum.
double kernel_convolve(const WeightedEnsemble& measure, const double* x,
                       const MollifierSpec& spec);
double kernel_convolve(const GridDensity& density, const double* x,
                       const MollifierSpec& spec);

// Bound constants valid for displacements |z| <= eval_radius.  Throws
// NumericalError when the floor k_min would be nonpositive.
KernelConstants kernel_constants(const MollifierSpec& spec, double eval_radius);

// Read-only cubic-interpolation cache of the one-axis kernel profile on
// [0, 2L].  Only worth building in TruncatedGaussian mode, where each direct
// evaluation runs an adaptive quadrature.
class KernelTable {
 public:
  static constexpr int kPoints = 4096;

  explicit KernelTable(const MollifierSpec& spec);

  double eval_axis(double z) const;
  double eval(const double* z) const;  // tensor product plus kappa floor

  const MollifierSpec& spec() const { return spec_; }

 private:
  MollifierSpec spec_;
  UniformCubicTable table_;
};

// Applies mu -> K_eps * mu evaluated at many points at once, picking the
// cheapest backend for the job:
//  - FFT Toeplitz product when both source and targets sit on the same
//    uniform 1-d grid (the mean-field reference path),
//  - a cached dense kernel matrix when targets coincide with the ensemble's
//    own atoms (the interacting-particle inner loop),
//  - direct summation otherwise.
class SmoothingOperator {
 public:
  explicit SmoothingOperator(const MollifierSpec& spec);

  // (K_eps * mu)(x_i) for every atom x_i of the ensemble itself.  The dense
  // kernel matrix is cached on first use for a given position set.
  void convolve_at_atoms(const WeightedEnsemble& ensemble,
                         std::vector<double>& out);

  // (K_eps * mu)(t_j) for an arbitrary target list (row-major, size n*d).
  void convolve_at(const WeightedEnsemble& ensemble,
                   const std::vector<double>& targets, std::size_t n_targets,
                   std::vector<double>& out);

  // Raw Toeplitz product for atoms on a fixed uniform 1-d grid:
  // out_j = sum_i masses_i K_eps(x_j - x_i), x_j = x_0 + j * spacing.
  // The caller applies its own measure scaling (1/N or cell volume).
  // Requires d == 1; backed by an FFT circulant embedding.
  void convolve_uniform_grid(const std::vector<double>& masses, double spacing,
                             std::vector<double>& out);

  // K_eps(z) through the cached profile table when one exists (truncated
  // mode), otherwise the closed form. For callers that need single kernel
  // values inside loops already tied to this operator.
  double kernel_value(const double* z) const { return eval_kernel(z); }

  const MollifierSpec& spec() const { return spec_; }

 private:
  double eval_kernel(const double* z) const;
  void ensure_matrix(const WeightedEnsemble& ensemble);
  void ensure_grid(std::size_t n, double spacing);

  MollifierSpec spec_;
  std::unique_ptr<KernelTable> table_;  // truncated mode only

  // Dense-matrix cache keyed by the exact position buffer.
  std::vector<double> cached_positions_;
  std::vector<double> kernel_matrix_;

  // FFT cache for the uniform-grid path.
  std::unique_ptr<ToeplitzConvolver> convolver_;
  std::size_t grid_n_ = 0;
  double grid_spacing_ = 0.0;
};

}  // namespace wf
