// Run configuration: the union of every module's tunables, read from a single
// key = value file with dotted section prefixes, canonically serialized, and
// hashed so every output artifact can be traced back to the exact settings
// that produced it.
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "weightflow/drift.hpp"
#include "weightflow/dynamics.hpp"
#include "weightflow/ensemble.hpp"
#include "weightflow/functional.hpp"
#include "weightflow/kernel.hpp"

namespace wf {

// How initial atom positions are drawn for interacting runs.
enum class InitialSampler { UniformBox, Reference };

struct RunConfig {
  // domain
  int domain_dimension = 1;
  double domain_half_width = 1.0;

  // kernel
  MollifierMode kernel_mode = MollifierMode::FreeGaussian;
  double kernel_epsilon = 0.25;
  double kernel_kappa = 0.0;

  // reference measure
  std::string reference_potential = "quadratic";
  double reference_scale = 0.5;
  int reference_grid_points = 2048;

  // energy term
  std::string energy_kind = "linear";
  std::string energy_form = "square";
  int energy_features = 4;
  bool energy_centered = true;

  // drift
  DriftVariant drift_variant = DriftVariant::K3_KernelEnergyLu;
  double drift_sigma = 1.0;
  CenteringMode drift_centering = CenteringMode::EmpiricalMean;
  int drift_quadrature_nodes = 64;
  int drift_kl_grid_points = 2048;

  // simulation
  double simulation_horizon = 2.0;
  double simulation_dt = 0.01;
  Scheme simulation_scheme = Scheme::ExponentialEuler;
  bool simulation_renormalize = true;
  std::uint64_t simulation_seed = 1;
  int simulation_atoms = 256;
  InitialSampler simulation_sampler = InitialSampler::UniformBox;
  int simulation_output_stride = 10;

  // mean-field reference solve
  int meanfield_atoms = 2048;
  double meanfield_dt = 0.0025;

  // fixed-point cross-check
  double picard_tol = 1e-6;
  int picard_max_sweeps = 50;

  // output
  std::string output_dir = "out";

  // propagation-of-chaos study
  std::vector<int> poc_n_list = {16, 64, 256, 1024};
  int poc_seeds = 32;
  int poc_reference_factor = 8;

  // bandwidth sweep study
  std::vector<double> sweep_epsilons = {0.4, 0.2, 0.1, 0.05};
  int sweep_oracle_grid = 2048;
  double sweep_horizon = 12.0;
  int sweep_polish_steps = 4000;
  // Tolerance on sqrt((1/N) sum w_i a_i^2). The smoothed energy has no
  // spectral gap (its Hessian inherits the kernel's decaying spectrum), so
  // demanding sup-precision stationarity would never terminate.
  double sweep_polish_tol = 1e-4;

  // constants audit study
  int audit_bound_samples = 1000;
  int audit_lipschitz_samples = 1000;
  int audit_max_atoms = 64;

  // warm-start study
  std::vector<double> warmstart_overlaps = {0.25, 0.5, 0.75, 1.0};
  double warmstart_horizon = 6.0;
};

// One row of the key registry, for --help and the docs.
struct ConfigKeyInfo {
  std::string key;
  std::string value;   // default, rendered canonically
  std::string module;  // owning module
  std::string summary;
};

// Parses and validates; reports every error at once (ConfigError details
// carry one entry per problem, each naming the offending key and line).
RunConfig parse_config(const std::string& path);
RunConfig parse_config_text(const std::string& text,
                            const std::string& origin = "<config>");

// Canonical form: every key in registry order, shortest round-trip floats.
// parse(serialize(c)) == c exactly.
std::string serialize_config(const RunConfig& config);

// FNV-1a over the canonical serialization; the hex form is stamped into
// every CSV/JSON artifact.
std::uint64_t config_hash(const RunConfig& config);
std::string config_hash_hex(const RunConfig& config);

bool operator==(const RunConfig& a, const RunConfig& b);
inline bool operator!=(const RunConfig& a, const RunConfig& b) {
  return !(a == b);
}

// Registry listing with defaults, for --help.
std::vector<ConfigKeyInfo> config_keys();
std::string config_help();

// Builders from a validated config to module objects.
Domain config_domain(const RunConfig& config);
MollifierSpec config_mollifier(const RunConfig& config);
ReferenceMeasure config_reference(const RunConfig& config);
EnergyFunctional config_energy(const RunConfig& config);
DriftStrategy config_strategy(const RunConfig& config);
SimulationConfig config_simulation(const RunConfig& config);

}  // namespace wf
