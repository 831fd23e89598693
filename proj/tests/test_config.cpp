#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <doctest.h>
#include <json.hpp>

#include "weightflow/config.hpp"
#include "weightflow/csv.hpp"
#include "weightflow/errors.hpp"
#include "weightflow/experiments.hpp"

using namespace wf;

namespace {

bool any_detail_contains(const ConfigError& e, const std::string& needle) {
  for (const std::string& d : e.details())
    if (d.find(needle) != std::string::npos) return true;
  return false;
}

}  // namespace

TEST_CASE("canonical serialization round-trips exactly") {
  const RunConfig def;
  const RunConfig parsed = parse_config_text(serialize_config(def));
  CHECK(parsed == def);
  CHECK(config_hash(parsed) == config_hash(def));

  RunConfig tweaked;
  tweaked.kernel_epsilon = 1.0 / 3.0;
  tweaked.simulation_seed = 18446744073709551557ull;
  tweaked.poc_n_list = {8, 32, 4096};
  tweaked.sweep_epsilons = {0.37, 0.11, 0.002};
  tweaked.energy_kind = "quadratic_interaction";
  tweaked.energy_form = "squared_distance";
  tweaked.drift_variant = DriftVariant::Chi2;
  tweaked.simulation_scheme = Scheme::LinearEuler;
  tweaked.simulation_sampler = InitialSampler::Reference;
  tweaked.kernel_mode = MollifierMode::TruncatedGaussian;
  tweaked.output_dir = "runs/with space";
  const RunConfig reparsed = parse_config_text(serialize_config(tweaked));
  CHECK(reparsed == tweaked);
  CHECK(reparsed.kernel_epsilon == tweaked.kernel_epsilon);
  CHECK(reparsed.simulation_seed == tweaked.simulation_seed);

  CHECK(config_hash(tweaked) != config_hash(def));
  CHECK(config_hash_hex(def).size() == 16);
}

TEST_CASE("every error in a bad file is reported at once with its line") {
  const std::string text =
      "drift.sigma = -1\n"
      "no_such.key = 3\n"
      "kernel.epsilon = banana\n"
      "meanfield.atoms = 12\n"
      "drift.sigma = 2\n";
  try {
    parse_config_text(text, "bad.cfg");
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(e.details().size() == 5);
    CHECK(any_detail_contains(e, "bad.cfg:1: drift.sigma"));
    CHECK(any_detail_contains(e, "bad.cfg:2: unknown key 'no_such.key'"));
    CHECK(any_detail_contains(e, "bad.cfg:3: kernel.epsilon"));
    CHECK(any_detail_contains(e, "bad.cfg:4: meanfield.atoms"));
    CHECK(any_detail_contains(e, "bad.cfg:5: duplicate key 'drift.sigma'"));
    CHECK(std::string(e.what()).find("invalid configuration") !=
          std::string::npos);
  }
}

TEST_CASE("semantic validations") {
  SUBCASE("enumerations reject unknown literals") {
    CHECK_THROWS_AS(parse_config_text("drift.variant = K9\n"), ConfigError);
    CHECK_THROWS_AS(parse_config_text("simulation.scheme = rk7\n"),
                    ConfigError);
    CHECK_THROWS_AS(parse_config_text("kernel.mode = cosine\n"), ConfigError);
    CHECK_THROWS_AS(parse_config_text("energy.kind = cubic\n"), ConfigError);
  }

  SUBCASE("a positivity floor breaks the nested-convolution variants") {
    const std::string base = "kernel.kappa = 0.1\nkernel.mode = free_gaussian\n";
    CHECK_THROWS_AS(parse_config_text(base + "drift.variant = K4_KernelEnergyCarrillo\n"),
                    ConfigError);
    CHECK_THROWS_AS(parse_config_text(base + "drift.variant = Chi2\n"),
                    ConfigError);
    // The directly smoothed variants keep the floor.
    const RunConfig ok =
        parse_config_text(base + "drift.variant = K1_SmoothEvolving\n");
    CHECK(ok.kernel_kappa == 0.1);
  }

  SUBCASE("study lists must be ordered") {
    CHECK_THROWS_AS(parse_config_text("poc.n_list = 64, 16\n"), ConfigError);
    CHECK_THROWS_AS(parse_config_text("sweep.epsilons = 0.1, 0.2\n"),
                    ConfigError);
    CHECK_THROWS_AS(parse_config_text("warmstart.overlaps = 0.5, 0.5\n"),
                    ConfigError);
  }

  SUBCASE("scalar ranges") {
    CHECK_THROWS_AS(parse_config_text("meanfield.atoms = 32\n"), ConfigError);
    CHECK_THROWS_AS(parse_config_text("domain.dimension = 5\n"), ConfigError);
    CHECK_THROWS_AS(parse_config_text("simulation.dt = 0\n"), ConfigError);
    try {
      parse_config_text("drift.sigma = -3\n");
      FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
      CHECK(any_detail_contains(e, "drift.sigma"));
      CHECK(any_detail_contains(e, "nonnegative"));
    }
  }
}

TEST_CASE("the key registry backs --help") {
  const std::vector<ConfigKeyInfo> keys = config_keys();
  CHECK(keys.size() >= 40);
  for (const ConfigKeyInfo& k : keys) {
    CHECK(!k.key.empty());
    CHECK(!k.module.empty());
    CHECK(!k.summary.empty());
    CHECK(!k.value.empty());
  }
  const std::string help = config_help();
  for (const ConfigKeyInfo& k : keys) {
    CHECK(help.find(k.key) != std::string::npos);
    CHECK(help.find(k.summary) != std::string::npos);
  }
  CHECK(help.find("0.25") != std::string::npos);  // kernel.epsilon default
}

TEST_CASE("builders hand each module its own settings") {
  RunConfig c;
  c.domain_dimension = 2;
  c.domain_half_width = 1.5;
  c.kernel_epsilon = 0.4;
  c.drift_sigma = 0.7;
  c.drift_variant = DriftVariant::K1_SmoothEvolving;
  c.drift_centering = CenteringMode::LebesgueKl;
  c.simulation_horizon = 3.0;
  c.simulation_dt = 0.002;
  c.simulation_scheme = Scheme::LinearEuler;
  c.simulation_renormalize = false;
  c.simulation_output_stride = 7;
  c.reference_potential = "double_well";
  c.reference_scale = 2.0;
  c.energy_kind = "linear";
  c.energy_form = "first_coordinate";

  const Domain d = config_domain(c);
  CHECK(d.dimension == 2);
  CHECK(d.half_width == 1.5);

  const MollifierSpec m = config_mollifier(c);
  CHECK(m.epsilon == 0.4);
  CHECK(m.domain.dimension == 2);

  const DriftStrategy s = config_strategy(c);
  CHECK(s.variant == DriftVariant::K1_SmoothEvolving);
  CHECK(s.sigma == 0.7);
  CHECK(s.centering == CenteringMode::LebesgueKl);
  CHECK(s.kernel.epsilon == 0.4);
  CHECK(s.reference.pi_min > 0.0);
  CHECK(s.functional.c_f > 0.0);

  const SimulationConfig sim = config_simulation(c);
  CHECK(sim.horizon == 3.0);
  CHECK(sim.dt == 0.002);
  CHECK(sim.scheme == Scheme::LinearEuler);
  CHECK(sim.renormalize_every_step == false);
  CHECK(sim.output_stride == 7);
}

TEST_CASE("numbers are written with shortest exact round-trip form") {
  for (double v : {0.1, 1.0 / 3.0, 1e-300, 12345678901234.0, -0.0, 2.5e17}) {
    const std::string s = format_number(v);
    CHECK(std::stod(s) == v);
  }
  CHECK(format_number(1.0) == "1");
  CHECK(format_number(0.5) == "0.5");
}

TEST_CASE("csv escaping follows the quoting rules") {
  CHECK(csv_escape("plain") == "plain");
  CHECK(csv_escape("with,comma") == "\"with,comma\"");
  CHECK(csv_escape("with \"quote\"") == "\"with \"\"quote\"\"\"");
  CHECK(csv_escape("line\nbreak") == "\"line\nbreak\"");
  CHECK(csv_escape("") == "");
}

TEST_CASE("atomic file writes create parents and replace contents") {
  namespace fs = std::filesystem;
  const fs::path root = fs::temp_directory_path() / "wf_csv_test";
  fs::remove_all(root);
  const fs::path target = root / "deep" / "nested" / "file.txt";
  write_text_file(target.string(), "first\n");
  {
    std::ifstream in(target);
    std::string line;
    std::getline(in, line);
    CHECK(line == "first");
  }
  write_text_file(target.string(), "second\n");
  {
    std::ifstream in(target);
    std::string line;
    std::getline(in, line);
    CHECK(line == "second");
  }
  // No temp files are left behind next to the target.
  std::size_t entries = 0;
  for (const auto& entry : fs::directory_iterator(target.parent_path())) {
    (void)entry;
    ++entries;
  }
  CHECK(entries == 1);
  fs::remove_all(root);
}

TEST_CASE("study artifacts are well-formed") {
  StudyReport report;
  report.study = "poc_scaling";
  report.config_hash = "deadbeef00000000";
  report.seeds = {1, 2, 3};
  report.cells.push_back({"N=64", "sup_w2_mean", 0.125, 0.01, "info"});
  report.cells.push_back({"N=64;vs=\"ref\"", "gap", 0.5, 0.0, "pass"});
  report.verdicts.push_back({"AC4", "decreasing over N", true});
  report.notes = "";

  const std::string csv = study_csv(report);
  CHECK(csv.find("# config_hash=deadbeef00000000") != std::string::npos);
  CHECK(csv.find("study,params,statistic,value,stderr,verdict") !=
        std::string::npos);
  CHECK(csv.find("\"N=64;vs=\"\"ref\"\"\"") != std::string::npos);

  const nlohmann::json j = nlohmann::json::parse(study_json(report));
  CHECK(j.at("study") == "poc_scaling");
  CHECK(j.at("config_hash") == "deadbeef00000000");
  CHECK(j.at("passed") == true);
  CHECK(j.at("verdicts").size() == 1);
  CHECK(j.at("cells").size() == 2);

  report.verdicts.push_back({"AC4", "floor violated", false});
  CHECK(!report.passed());
}

TEST_CASE("trajectory artifacts carry the hash and full precision") {
  WeightedEnsemble e;
  e.domain = Domain{1, 1.0};
  e.positions = {-0.25, 0.75};
  e.weights = {1.0 / 3.0, 5.0 / 3.0};
  Trajectory traj;
  traj.times = {0.0};
  traj.states = {e};
  traj.diagnostics.push_back({0.0, 1e-17, 1.0 / 3.0, 5.0 / 3.0, 0.5});

  const std::string tcsv = trajectory_csv(traj, "abc123");
  CHECK(tcsv.find("# config_hash=abc123") != std::string::npos);
  CHECK(tcsv.find(format_number(5.0 / 3.0)) != std::string::npos);

  const std::string pcsv = positions_csv(e, "abc123");
  CHECK(pcsv.find("atom_index") != std::string::npos);
  CHECK(pcsv.find("-0.25") != std::string::npos);

  const std::string dcsv = diagnostics_csv(traj, "abc123");
  CHECK(dcsv.find(format_number(1e-17)) != std::string::npos);
}
