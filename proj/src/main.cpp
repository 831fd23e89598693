// Command-line entry point: config parsing, subcommand dispatch, and
// deterministic artifact emission. Exit codes: 0 success, 1 config error,
// 2 numerical failure, 3 failed study verdict.
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <iostream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "weightflow/config.hpp"
#include "weightflow/csv.hpp"
#include "weightflow/drift.hpp"
#include "weightflow/dynamics.hpp"
#include "weightflow/ensemble.hpp"
#include "weightflow/errors.hpp"
#include "weightflow/experiments.hpp"
#include "weightflow/kernel.hpp"
#include "weightflow/rng.hpp"

namespace {

void emit_error(const char* type, const std::string& message,
                const std::vector<std::string>& details) {
  nlohmann::json j;
  j["error"]["type"] = type;
  j["error"]["message"] = message;
  if (!details.empty()) j["error"]["details"] = details;
  std::cerr << j.dump(2) << std::endl;
}

// i.i.d. initial positions from the configured sampler, unit weights.
wf::WeightedEnsemble sample_initial(const wf::RunConfig& config) {
  const wf::Domain domain = wf::config_domain(config);
  const int d = domain.dimension;
  const std::size_t n = static_cast<std::size_t>(config.simulation_atoms);

  wf::WeightedEnsemble e;
  e.domain = domain;
  e.positions.resize(n * static_cast<std::size_t>(d));
  e.weights.assign(n, 1.0);

  wf::Rng rng(config.simulation_seed, 0);
  if (config.simulation_sampler == wf::InitialSampler::Reference) {
    if (d != 1)
      throw wf::ConfigError(
          "simulation.sampler = reference requires domain.dimension = 1");
    const wf::ReferenceMeasure ref = wf::config_reference(config);
    const wf::GridDensity law = wf::grid_from_function(
        domain, config.reference_grid_points,
        [&ref](const double* x) { return ref.density(x); }, true);
    for (std::size_t i = 0; i < n; ++i)
      e.positions[i] = wf::sample_from_density_1d(law, rng);
  } else {
    for (double& c : e.positions)
      c = rng.uniform(-domain.half_width, domain.half_width);
  }
  return e;
}

void write_trajectory_files(const wf::Trajectory& traj,
                            const wf::RunConfig& config,
                            const std::string& prefix) {
  const std::string hash = wf::config_hash_hex(config);
  const std::string dir = config.output_dir;
  wf::write_text_file(dir + "/" + prefix + "trajectory.csv",
                      wf::trajectory_csv(traj, hash));
  wf::write_text_file(dir + "/" + prefix + "positions.csv",
                      wf::positions_csv(traj.states.front(), hash));
  wf::write_text_file(dir + "/" + prefix + "diagnostics.csv",
                      wf::diagnostics_csv(traj, hash));
  wf::write_text_file(dir + "/config.txt", wf::serialize_config(config));
}

int cmd_run(const wf::RunConfig& config) {
  const wf::DriftStrategy strategy = wf::config_strategy(config);
  const wf::SimulationConfig sim = wf::config_simulation(config);
  const wf::WeightedEnsemble init = sample_initial(config);
  const wf::Trajectory traj = wf::simulate_interacting(strategy, init, sim);
  write_trajectory_files(traj, config, "");
  std::printf("run: %zu atoms, %zu steps, %zu stored states, drift %s\n",
              init.size(), traj.diagnostics.size(), traj.states.size(),
              wf::drift_variant_name(strategy.variant));
  std::printf("outputs: %s/{trajectory,positions,diagnostics}.csv  "
              "config_hash=%s\n",
              config.output_dir.c_str(),
              wf::config_hash_hex(config).c_str());
  return 0;
}

int cmd_mean_field(const wf::RunConfig& config) {
  const wf::DriftStrategy strategy = wf::config_strategy(config);
  wf::SimulationConfig sim = wf::config_simulation(config);
  sim.dt = config.meanfield_dt;

  const wf::Domain domain = wf::config_domain(config);
  wf::GridDensity m0;
  if (config.simulation_sampler == wf::InitialSampler::Reference) {
    m0 = wf::grid_from_function(
        domain, config.meanfield_atoms,
        [&strategy](const double* x) { return strategy.reference.density(x); },
        true);
  } else {
    m0 = wf::grid_from_function(
        domain, config.meanfield_atoms, [](const double*) { return 1.0; },
        true);
  }
  const wf::Trajectory traj =
      wf::solve_mean_field(strategy, m0, config.meanfield_atoms, sim);
  write_trajectory_files(traj, config, "mean_field_");
  std::printf("mean-field: %d atoms, %zu steps, %zu stored states, drift %s\n",
              config.meanfield_atoms, traj.diagnostics.size(),
              traj.states.size(), wf::drift_variant_name(strategy.variant));
  std::printf("outputs: %s/mean_field_{trajectory,positions,diagnostics}.csv  "
              "config_hash=%s\n",
              config.output_dir.c_str(),
              wf::config_hash_hex(config).c_str());
  return 0;
}

int cmd_study(wf::StudyReport (*runner)(const wf::RunConfig&),
              const wf::RunConfig& config) {
  const wf::StudyReport report = runner(config);
  wf::write_study(report, config.output_dir);
  wf::write_text_file(config.output_dir + "/config.txt",
                      wf::serialize_config(config));
  for (const wf::StudyVerdict& v : report.verdicts)
    std::printf("%s %s: %s\n", v.criterion.c_str(),
                v.passed ? "pass" : "FAIL", v.detail.c_str());
  std::printf("study %s: %s  (%s/%s.{csv,json}, config_hash=%s)\n",
              report.study.c_str(), report.passed() ? "PASS" : "FAIL",
              config.output_dir.c_str(), report.study.c_str(),
              report.config_hash.c_str());
  return report.passed() ? 0 : 3;
}

int cmd_constants(const wf::RunConfig& config) {
  const wf::DriftStrategy strategy = wf::config_strategy(config);
  const wf::Domain domain = wf::config_domain(config);
  const double radius_scale =
      strategy.kernel.mode == wf::MollifierMode::FreeGaussian ? 2.0 : 1.0;
  const double eval_radius = radius_scale * domain.half_width *
                             std::sqrt(static_cast<double>(domain.dimension));
  const wf::KernelConstants kc =
      wf::kernel_constants(strategy.kernel, eval_radius);
  const wf::ReferenceConstants rc{strategy.reference.pi_min,
                                  strategy.reference.pi_max,
                                  strategy.reference.l_pi};

  std::printf("scenario: d=%d L=%s epsilon=%s sigma=%s kernel=%s\n",
              domain.dimension, wf::format_number(domain.half_width).c_str(),
              wf::format_number(strategy.kernel.epsilon).c_str(),
              wf::format_number(strategy.sigma).c_str(),
              strategy.kernel.mode == wf::MollifierMode::FreeGaussian
                  ? "free_gaussian"
                  : "truncated_gaussian");
  std::printf("kernel: K_min=%.6e K_max=%.6e L_K=%.6e (|z| <= %s)\n", kc.k_min,
              kc.k_max, kc.lip, wf::format_number(eval_radius).c_str());
  std::printf("reference: pi_min=%.6f pi_max=%.6f L_pi=%.6f\n", rc.pi_min,
              rc.pi_max, rc.l_pi);
  std::printf("energy: C_F=%.6f L_F=%.6f\n\n", strategy.functional.c_f,
              strategy.functional.l_f);

  std::printf("%-24s %16s %16s  %s\n", "variant", "bound C", "lipschitz L",
              "note");
  const wf::DriftVariant all[] = {wf::DriftVariant::K1_SmoothEvolving,
                                  wf::DriftVariant::K2_SmoothBoth,
                                  wf::DriftVariant::K3_KernelEnergyLu,
                                  wf::DriftVariant::K4_KernelEnergyCarrillo,
                                  wf::DriftVariant::Chi2};
  for (const wf::DriftVariant v : all) {
    const double c = wf::drift_bound_constant(v, strategy.sigma, kc, rc,
                                              strategy.functional.c_f);
    const double l = wf::drift_lipschitz_constant(v, strategy.sigma, kc, rc,
                                                  strategy.functional.l_f);
    const std::string note = wf::drift_lipschitz_note(v);
    std::printf("%-24s %16.6f %16.6f  %s\n", wf::drift_variant_name(v), c, l,
                note.c_str());
  }

  // Fixed formula check, independent of the configured scenario: the
  // documented K1 bound with pi in [0.2, 0.8] and K in [0.1, 2].
  const wf::KernelConstants ex_kernel{0.1, 2.0, 5.0};
  const wf::ReferenceConstants ex_ref{0.2, 0.8, 1.0};
  const double ex = wf::drift_bound_constant(
      wf::DriftVariant::K1_SmoothEvolving, 1.0, ex_kernel, ex_ref, 1.0);
  std::printf("\nformula check: K1 bound at (C_F=1, sigma=1, pi=[0.2,0.8], "
              "K=[0.1,2]) = %.6f\n",
              ex);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"weightflow: Fisher-Rao weight dynamics on frozen particle "
               "ensembles"};
  app.fallthrough();
  app.require_subcommand(1);
  app.footer(wf::config_help());

  std::string config_path;
  std::string out_dir;
  std::int64_t seed = 0;
  unsigned threads = std::max(1u, std::thread::hardware_concurrency());
  app.add_option("--config", config_path,
                 "config file (key = value lines; see the key table below)");
  app.add_option("--threads", threads,
                 "worker threads; outputs are identical for any value")
      ->check(CLI::PositiveNumber);
  auto* out_opt =
      app.add_option("--out", out_dir, "output directory (overrides "
                                       "output.dir)");
  auto* seed_opt = app.add_option(
      "--seed", seed, "seed override for simulation.seed (nonnegative)");
  seed_opt->check(CLI::NonNegativeNumber);

  auto* sub_run = app.add_subcommand("run", "interacting weight flow + CSVs");
  auto* sub_mf =
      app.add_subcommand("mean-field", "quadrature mean-field reference solve");
  auto* sub_poc =
      app.add_subcommand("poc", "propagation-of-chaos scaling study");
  auto* sub_sweep =
      app.add_subcommand("sweep-eps", "bandwidth sweep minimizer study");
  auto* sub_audit =
      app.add_subcommand("audit", "drift constants audit (all strategies)");
  auto* sub_warm =
      app.add_subcommand("warm-start", "initial-support sensitivity study");
  auto* sub_const = app.add_subcommand(
      "constants", "print the bound/Lipschitz constant table");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    if (code == 0) return 0;
    emit_error("config", e.what(), {});
    return 1;
  }

  try {
    wf::RunConfig config;
    if (!config_path.empty()) config = wf::parse_config(config_path);
    if (seed_opt->count() > 0)
      config.simulation_seed = static_cast<std::uint64_t>(seed);
    if (out_opt->count() > 0) config.output_dir = out_dir;

    if (sub_run->parsed()) return cmd_run(config);
    if (sub_mf->parsed()) return cmd_mean_field(config);
    if (sub_poc->parsed()) return cmd_study(&wf::run_poc_scaling, config);
    if (sub_sweep->parsed()) return cmd_study(&wf::run_epsilon_sweep, config);
    if (sub_audit->parsed())
      return cmd_study(&wf::run_constants_audit, config);
    if (sub_warm->parsed())
      return cmd_study(&wf::run_warm_start_study, config);
    if (sub_const->parsed()) return cmd_constants(config);
    emit_error("config", "no subcommand selected", {});
    return 1;
  } catch (const wf::ConfigError& e) {
    emit_error("config", e.what(), e.details());
    return 1;
  } catch (const wf::NumericalError& e) {
    emit_error("numerical", e.what(), {});
    return 2;
  } catch (const std::exception& e) {
    emit_error("internal", e.what(), {});
    return 2;
  }
}
