#include "weightflow/config.hpp"

#include <algorithm>
#include <cctype>
#include <cerrno>
#include <climits>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iterator>
#include <map>
#include <set>
#include <sstream>

#include "weightflow/errors.hpp"

namespace wf {
namespace {

std::string trim(const std::string& s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

// Shortest decimal form that parses back to exactly the same double.
std::string format_double(double v) {
  char buf[40];
  for (int prec = 1; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof buf, "%.*g", prec, v);
    if (std::strtod(buf, nullptr) == v) return buf;
  }
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

bool parse_ll(const std::string& v, long long* out) {
  if (v.empty()) return false;
  errno = 0;
  char* end = nullptr;
  const long long r = std::strtoll(v.c_str(), &end, 10);
  if (errno != 0 || end != v.c_str() + v.size()) return false;
  *out = r;
  return true;
}

bool parse_u64(const std::string& v, std::uint64_t* out) {
  if (v.empty() || v[0] == '-') return false;
  errno = 0;
  char* end = nullptr;
  const unsigned long long r = std::strtoull(v.c_str(), &end, 10);
  if (errno != 0 || end != v.c_str() + v.size()) return false;
  *out = r;
  return true;
}

bool parse_dbl(const std::string& v, double* out) {
  if (v.empty()) return false;
  errno = 0;
  char* end = nullptr;
  const double r = std::strtod(v.c_str(), &end);
  if (errno != 0 || end != v.c_str() + v.size()) return false;
  if (!std::isfinite(r)) return false;
  *out = r;
  return true;
}

std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> items;
  std::size_t start = 0;
  while (start <= v.size()) {
    const std::size_t comma = v.find(',', start);
    const std::size_t end = comma == std::string::npos ? v.size() : comma;
    items.push_back(trim(v.substr(start, end - start)));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return items;
}

template <auto Member>
std::string get_int(const RunConfig& c) {
  return std::to_string(c.*Member);
}

template <auto Member>
std::string set_int(RunConfig& c, const std::string& v) {
  long long r = 0;
  if (!parse_ll(v, &r) || r < static_cast<long long>(INT_MIN) ||
      r > static_cast<long long>(INT_MAX))
    return "expected an integer, got '" + v + "'";
  c.*Member = static_cast<int>(r);
  return {};
}

template <auto Member>
std::string get_u64(const RunConfig& c) {
  return std::to_string(c.*Member);
}

template <auto Member>
std::string set_u64(RunConfig& c, const std::string& v) {
  std::uint64_t r = 0;
  if (!parse_u64(v, &r))
    return "expected a nonnegative integer, got '" + v + "'";
  c.*Member = r;
  return {};
}

template <auto Member>
std::string get_dbl(const RunConfig& c) {
  return format_double(c.*Member);
}

template <auto Member>
std::string set_dbl(RunConfig& c, const std::string& v) {
  double r = 0.0;
  if (!parse_dbl(v, &r)) return "expected a finite number, got '" + v + "'";
  c.*Member = r;
  return {};
}

template <auto Member>
std::string get_bool(const RunConfig& c) {
  return (c.*Member) ? "true" : "false";
}

template <auto Member>
std::string set_bool(RunConfig& c, const std::string& v) {
  if (v == "true") {
    c.*Member = true;
    return {};
  }
  if (v == "false") {
    c.*Member = false;
    return {};
  }
  return "expected true or false, got '" + v + "'";
}

template <auto Member>
std::string get_str(const RunConfig& c) {
  return c.*Member;
}

template <auto Member>
std::string set_str(RunConfig& c, const std::string& v) {
  if (v.empty()) return "expected a nonempty value";
  c.*Member = v;
  return {};
}

template <auto Member>
std::string get_int_list(const RunConfig& c) {
  std::string out;
  for (const int x : c.*Member) {
    if (!out.empty()) out += ", ";
    out += std::to_string(x);
  }
  return out;
}

template <auto Member>
std::string set_int_list(RunConfig& c, const std::string& v) {
  std::vector<int> items;
  for (const std::string& item : split_list(v)) {
    long long r = 0;
    if (!parse_ll(item, &r) || r < static_cast<long long>(INT_MIN) ||
        r > static_cast<long long>(INT_MAX))
      return "expected a comma-separated integer list, got '" + v + "'";
    items.push_back(static_cast<int>(r));
  }
  if (items.empty()) return "expected a nonempty list";
  c.*Member = std::move(items);
  return {};
}

template <auto Member>
std::string get_dbl_list(const RunConfig& c) {
  std::string out;
  for (const double x : c.*Member) {
    if (!out.empty()) out += ", ";
    out += format_double(x);
  }
  return out;
}

template <auto Member>
std::string set_dbl_list(RunConfig& c, const std::string& v) {
  std::vector<double> items;
  for (const std::string& item : split_list(v)) {
    double r = 0.0;
    if (!parse_dbl(item, &r))
      return "expected a comma-separated number list, got '" + v + "'";
    items.push_back(r);
  }
  if (items.empty()) return "expected a nonempty list";
  c.*Member = std::move(items);
  return {};
}

// Enum fields, spelled with the names used throughout the docs.
struct EnumName {
  const char* name;
  int value;
};

std::string enum_choices(const EnumName* table, std::size_t n) {
  std::string out;
  for (std::size_t i = 0; i < n; ++i) {
    if (!out.empty()) out += " | ";
    out += table[i].name;
  }
  return out;
}

template <typename E>
std::string enum_to_string(E value, const EnumName* table, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i)
    if (table[i].value == static_cast<int>(value)) return table[i].name;
  return "unknown";
}

template <typename E>
std::string enum_from_string(const std::string& v, const EnumName* table,
                             std::size_t n, E* out) {
  for (std::size_t i = 0; i < n; ++i) {
    if (v == table[i].name) {
      *out = static_cast<E>(table[i].value);
      return {};
    }
  }
  return "expected one of {" + enum_choices(table, n) + "}, got '" + v + "'";
}

constexpr EnumName kModeNames[] = {
    {"free_gaussian", static_cast<int>(MollifierMode::FreeGaussian)},
    {"truncated_gaussian", static_cast<int>(MollifierMode::TruncatedGaussian)},
};
constexpr EnumName kVariantNames[] = {
    {"K1_SmoothEvolving", static_cast<int>(DriftVariant::K1_SmoothEvolving)},
    {"K2_SmoothBoth", static_cast<int>(DriftVariant::K2_SmoothBoth)},
    {"K3_KernelEnergyLu", static_cast<int>(DriftVariant::K3_KernelEnergyLu)},
    {"K4_KernelEnergyCarrillo",
     static_cast<int>(DriftVariant::K4_KernelEnergyCarrillo)},
    {"Chi2", static_cast<int>(DriftVariant::Chi2)},
};
constexpr EnumName kCenteringNames[] = {
    {"empirical_mean", static_cast<int>(CenteringMode::EmpiricalMean)},
    {"lebesgue_kl", static_cast<int>(CenteringMode::LebesgueKl)},
};
constexpr EnumName kSchemeNames[] = {
    {"exponential_euler", static_cast<int>(Scheme::ExponentialEuler)},
    {"linear_euler", static_cast<int>(Scheme::LinearEuler)},
};
constexpr EnumName kSamplerNames[] = {
    {"uniform_box", static_cast<int>(InitialSampler::UniformBox)},
    {"reference", static_cast<int>(InitialSampler::Reference)},
};

template <auto Member, const EnumName* Table, std::size_t N>
std::string get_enum(const RunConfig& c) {
  return enum_to_string(c.*Member, Table, N);
}

template <auto Member, const EnumName* Table, std::size_t N>
std::string set_enum(RunConfig& c, const std::string& v) {
  return enum_from_string(v, Table, N, &(c.*Member));
}

struct KeySpec {
  const char* key;
  const char* module;
  const char* summary;
  std::string (*get)(const RunConfig&);
  std::string (*set)(RunConfig&, const std::string&);
};

constexpr std::size_t kModeCount = std::size(kModeNames);
constexpr std::size_t kVariantCount = std::size(kVariantNames);
constexpr std::size_t kCenteringCount = std::size(kCenteringNames);
constexpr std::size_t kSchemeCount = std::size(kSchemeNames);
constexpr std::size_t kSamplerCount = std::size(kSamplerNames);

const KeySpec kRegistry[] = {
    {"domain.dimension", "ensemble", "spatial dimension d of the box",
     &get_int<&RunConfig::domain_dimension>,
     &set_int<&RunConfig::domain_dimension>},
    {"domain.half_width", "ensemble", "box half-width L; X = [-L, L]^d",
     &get_dbl<&RunConfig::domain_half_width>,
     &set_dbl<&RunConfig::domain_half_width>},

    {"kernel.mode", "kernel",
     "mollifier family: free_gaussian | truncated_gaussian",
     &get_enum<&RunConfig::kernel_mode, kModeNames, kModeCount>,
     &set_enum<&RunConfig::kernel_mode, kModeNames, kModeCount>},
    {"kernel.epsilon", "kernel", "mollifier bandwidth",
     &get_dbl<&RunConfig::kernel_epsilon>,
     &set_dbl<&RunConfig::kernel_epsilon>},
    {"kernel.kappa", "kernel", "additive positivity floor on K_eps",
     &get_dbl<&RunConfig::kernel_kappa>, &set_dbl<&RunConfig::kernel_kappa>},

    {"reference.potential", "functional",
     "potential U: zero | quadratic | double_well",
     &get_str<&RunConfig::reference_potential>,
     &set_str<&RunConfig::reference_potential>},
    {"reference.scale", "functional", "multiplier inside the potential",
     &get_dbl<&RunConfig::reference_scale>,
     &set_dbl<&RunConfig::reference_scale>},
    {"reference.grid_points", "functional",
     "per-axis grid for the reference constants and density resampling",
     &get_int<&RunConfig::reference_grid_points>,
     &set_int<&RunConfig::reference_grid_points>},

    {"energy.kind", "functional",
     "energy term F: zero | linear | quadratic_interaction | "
     "two_layer_regression",
     &get_str<&RunConfig::energy_kind>, &set_str<&RunConfig::energy_kind>},
    {"energy.form", "functional",
     "built-in integrand/kernel: square | first_coordinate | product | "
     "squared_distance",
     &get_str<&RunConfig::energy_form>, &set_str<&RunConfig::energy_form>},
    {"energy.features", "functional",
     "feature count for two_layer_regression (ignored otherwise)",
     &get_int<&RunConfig::energy_features>,
     &set_int<&RunConfig::energy_features>},
    {"energy.centered", "functional",
     "center the flat derivative so it integrates to zero",
     &get_bool<&RunConfig::energy_centered>,
     &set_bool<&RunConfig::energy_centered>},

    {"drift.variant", "drift",
     "regularized drift: K1_SmoothEvolving | K2_SmoothBoth | "
     "K3_KernelEnergyLu | K4_KernelEnergyCarrillo | Chi2",
     &get_enum<&RunConfig::drift_variant, kVariantNames, kVariantCount>,
     &set_enum<&RunConfig::drift_variant, kVariantNames, kVariantCount>},
    {"drift.sigma", "drift", "entropic regularization weight (>= 0)",
     &get_dbl<&RunConfig::drift_sigma>, &set_dbl<&RunConfig::drift_sigma>},
    {"drift.centering", "drift",
     "mass-preserving centering term: empirical_mean | lebesgue_kl",
     &get_enum<&RunConfig::drift_centering, kCenteringNames, kCenteringCount>,
     &set_enum<&RunConfig::drift_centering, kCenteringNames, kCenteringCount>},
    {"drift.quadrature_nodes", "drift",
     "per-axis nodes for the nested convolution (K4, Chi2)",
     &get_int<&RunConfig::drift_quadrature_nodes>,
     &set_int<&RunConfig::drift_quadrature_nodes>},
    {"drift.kl_grid_points", "drift",
     "per-axis grid for Lebesgue divergences and energy reporting",
     &get_int<&RunConfig::drift_kl_grid_points>,
     &set_int<&RunConfig::drift_kl_grid_points>},

    {"simulation.horizon", "dynamics", "time horizon T",
     &get_dbl<&RunConfig::simulation_horizon>,
     &set_dbl<&RunConfig::simulation_horizon>},
    {"simulation.dt", "dynamics", "explicit step size",
     &get_dbl<&RunConfig::simulation_dt>, &set_dbl<&RunConfig::simulation_dt>},
    {"simulation.scheme", "dynamics",
     "weight update: exponential_euler | linear_euler",
     &get_enum<&RunConfig::simulation_scheme, kSchemeNames, kSchemeCount>,
     &set_enum<&RunConfig::simulation_scheme, kSchemeNames, kSchemeCount>},
    {"simulation.renormalize", "dynamics",
     "rescale weights to sum N after every step",
     &get_bool<&RunConfig::simulation_renormalize>,
     &set_bool<&RunConfig::simulation_renormalize>},
    {"simulation.seed", "dynamics", "seed for initial position sampling",
     &get_u64<&RunConfig::simulation_seed>,
     &set_u64<&RunConfig::simulation_seed>},
    {"simulation.atoms", "dynamics", "particle count N for interacting runs",
     &get_int<&RunConfig::simulation_atoms>,
     &set_int<&RunConfig::simulation_atoms>},
    {"simulation.sampler", "dynamics",
     "initial position law: uniform_box | reference",
     &get_enum<&RunConfig::simulation_sampler, kSamplerNames, kSamplerCount>,
     &set_enum<&RunConfig::simulation_sampler, kSamplerNames, kSamplerCount>},
    {"simulation.output_stride", "dynamics",
     "store states every this many steps (diagnostics every step)",
     &get_int<&RunConfig::simulation_output_stride>,
     &set_int<&RunConfig::simulation_output_stride>},

    {"meanfield.atoms", "dynamics",
     "quadrature atoms for the mean-field reference (>= 64)",
     &get_int<&RunConfig::meanfield_atoms>,
     &set_int<&RunConfig::meanfield_atoms>},
    {"meanfield.dt", "dynamics", "RK4 step for the mean-field reference",
     &get_dbl<&RunConfig::meanfield_dt>, &set_dbl<&RunConfig::meanfield_dt>},

    {"picard.tol", "dynamics",
     "sup-Wasserstein tolerance for the fixed-point cross-check",
     &get_dbl<&RunConfig::picard_tol>, &set_dbl<&RunConfig::picard_tol>},
    {"picard.max_sweeps", "dynamics", "sweep budget per time window",
     &get_int<&RunConfig::picard_max_sweeps>,
     &set_int<&RunConfig::picard_max_sweeps>},

    {"output.dir", "cli", "directory for CSV/JSON artifacts",
     &get_str<&RunConfig::output_dir>, &set_str<&RunConfig::output_dir>},

    {"poc.n_list", "experiments",
     "strictly increasing particle counts for the scaling study",
     &get_int_list<&RunConfig::poc_n_list>,
     &set_int_list<&RunConfig::poc_n_list>},
    {"poc.seeds", "experiments", "independent replicates per particle count",
     &get_int<&RunConfig::poc_seeds>, &set_int<&RunConfig::poc_seeds>},
    {"poc.reference_factor", "experiments",
     "reference atoms = factor * max(N); must be >= 8",
     &get_int<&RunConfig::poc_reference_factor>,
     &set_int<&RunConfig::poc_reference_factor>},

    {"sweep.epsilons", "experiments",
     "strictly decreasing bandwidths for the minimizer sweep",
     &get_dbl_list<&RunConfig::sweep_epsilons>,
     &set_dbl_list<&RunConfig::sweep_epsilons>},
    {"sweep.oracle_grid", "experiments",
     "grid points for the Gibbs oracle and the minimizer density",
     &get_int<&RunConfig::sweep_oracle_grid>,
     &set_int<&RunConfig::sweep_oracle_grid>},
    {"sweep.horizon", "experiments",
     "flow time used to approach each minimizer before polishing",
     &get_dbl<&RunConfig::sweep_horizon>, &set_dbl<&RunConfig::sweep_horizon>},
    {"sweep.polish_steps", "experiments",
     "max fixed-point polish steps after the flow",
     &get_int<&RunConfig::sweep_polish_steps>,
     &set_int<&RunConfig::sweep_polish_steps>},
    {"sweep.polish_tol", "experiments",
     "weighted drift-norm residual declaring a polished minimizer",
     &get_dbl<&RunConfig::sweep_polish_tol>,
     &set_dbl<&RunConfig::sweep_polish_tol>},

    {"audit.bound_samples", "experiments",
     "random drift-bound checks per strategy",
     &get_int<&RunConfig::audit_bound_samples>,
     &set_int<&RunConfig::audit_bound_samples>},
    {"audit.lipschitz_samples", "experiments",
     "random Lipschitz checks per strategy",
     &get_int<&RunConfig::audit_lipschitz_samples>,
     &set_int<&RunConfig::audit_lipschitz_samples>},
    {"audit.max_atoms", "experiments",
     "largest random ensemble size used by the audit",
     &get_int<&RunConfig::audit_max_atoms>,
     &set_int<&RunConfig::audit_max_atoms>},

    {"warmstart.overlaps", "experiments",
     "initial-support fractions in (0, 1], full overlap = 1",
     &get_dbl_list<&RunConfig::warmstart_overlaps>,
     &set_dbl_list<&RunConfig::warmstart_overlaps>},
    {"warmstart.horizon", "experiments", "flow time for the warm-start runs",
     &get_dbl<&RunConfig::warmstart_horizon>,
     &set_dbl<&RunConfig::warmstart_horizon>},
};

const KeySpec* find_key(const std::string& key) {
  for (const KeySpec& spec : kRegistry)
    if (key == spec.key) return &spec;
  return nullptr;
}

bool one_of(const std::string& v, std::initializer_list<const char*> opts) {
  for (const char* o : opts)
    if (v == o) return true;
  return false;
}

// Cross-field and range validation; appends one entry per problem.
void validate(const RunConfig& c, std::vector<std::string>& errors) {
  auto fail = [&errors](const char* key, const std::string& msg) {
    errors.push_back(std::string(key) + ": " + msg);
  };

  if (c.domain_dimension < 1 || c.domain_dimension > 4)
    fail("domain.dimension", "must be between 1 and 4");
  if (!(c.domain_half_width > 0.0))
    fail("domain.half_width", "must be positive");

  if (!(c.kernel_epsilon > 0.0)) fail("kernel.epsilon", "must be positive");
  if (c.kernel_kappa < 0.0) fail("kernel.kappa", "must be nonnegative");
  if (c.kernel_mode == MollifierMode::FreeGaussian && c.kernel_kappa > 0.0 &&
      (c.drift_variant == DriftVariant::K4_KernelEnergyCarrillo ||
       c.drift_variant == DriftVariant::Chi2))
    fail("kernel.kappa",
         "free_gaussian with a positive floor breaks the nested convolution "
         "for K4/Chi2; set kappa = 0 or use truncated_gaussian");

  if (!one_of(c.reference_potential, {"zero", "quadratic", "double_well"}))
    fail("reference.potential",
         "expected one of {zero | quadratic | double_well}, got '" +
             c.reference_potential + "'");
  if (c.reference_scale < 0.0) fail("reference.scale", "must be nonnegative");
  if (c.reference_grid_points < 16 || c.reference_grid_points > (1 << 20))
    fail("reference.grid_points", "must be between 16 and 1048576");

  if (!one_of(c.energy_kind, {"zero", "linear", "quadratic_interaction",
                              "two_layer_regression"}))
    fail("energy.kind",
         "expected one of {zero | linear | quadratic_interaction | "
         "two_layer_regression}, got '" +
             c.energy_kind + "'");
  if (!one_of(c.energy_form,
              {"square", "first_coordinate", "product", "squared_distance"}))
    fail("energy.form",
         "expected one of {square | first_coordinate | product | "
         "squared_distance}, got '" +
             c.energy_form + "'");
  if (c.energy_kind == "linear" &&
      !one_of(c.energy_form, {"square", "first_coordinate"}))
    fail("energy.form", "linear energies take square or first_coordinate");
  if (c.energy_kind == "quadratic_interaction" &&
      !one_of(c.energy_form, {"product", "squared_distance"}))
    fail("energy.form",
         "quadratic_interaction energies take product or squared_distance");
  if (c.energy_features < 1 || c.energy_features > 8)
    fail("energy.features", "must be between 1 and 8");

  if (c.drift_sigma < 0.0) fail("drift.sigma", "must be nonnegative");
  if (c.drift_quadrature_nodes < 4 || c.drift_quadrature_nodes > 1024)
    fail("drift.quadrature_nodes", "must be between 4 and 1024");
  if (c.drift_kl_grid_points < 16 || c.drift_kl_grid_points > (1 << 20))
    fail("drift.kl_grid_points", "must be between 16 and 1048576");

  if (c.simulation_horizon < 0.0)
    fail("simulation.horizon", "must be nonnegative");
  if (!(c.simulation_dt > 0.0)) fail("simulation.dt", "must be positive");
  if (c.simulation_atoms < 1) fail("simulation.atoms", "must be at least 1");
  if (c.simulation_output_stride < 1)
    fail("simulation.output_stride", "must be at least 1");

  if (c.meanfield_atoms < 64) fail("meanfield.atoms", "must be at least 64");
  if (!(c.meanfield_dt > 0.0)) fail("meanfield.dt", "must be positive");

  if (!(c.picard_tol > 0.0)) fail("picard.tol", "must be positive");
  if (c.picard_max_sweeps < 1)
    fail("picard.max_sweeps", "must be at least 1");

  if (c.poc_n_list.empty()) {
    fail("poc.n_list", "must be nonempty");
  } else {
    for (std::size_t i = 0; i < c.poc_n_list.size(); ++i) {
      if (c.poc_n_list[i] < 1) {
        fail("poc.n_list", "entries must be at least 1");
        break;
      }
      if (i > 0 && c.poc_n_list[i] <= c.poc_n_list[i - 1]) {
        fail("poc.n_list", "must be strictly increasing");
        break;
      }
    }
  }
  if (c.poc_seeds < 2) fail("poc.seeds", "must be at least 2");
  if (c.poc_reference_factor < 8)
    fail("poc.reference_factor", "must be at least 8");

  if (c.sweep_epsilons.empty()) {
    fail("sweep.epsilons", "must be nonempty");
  } else {
    for (std::size_t i = 0; i < c.sweep_epsilons.size(); ++i) {
      if (!(c.sweep_epsilons[i] > 0.0)) {
        fail("sweep.epsilons", "entries must be positive");
        break;
      }
      if (i > 0 && c.sweep_epsilons[i] >= c.sweep_epsilons[i - 1]) {
        fail("sweep.epsilons", "must be strictly decreasing");
        break;
      }
    }
  }
  if (c.sweep_oracle_grid < 64)
    fail("sweep.oracle_grid", "must be at least 64");
  if (!(c.sweep_horizon > 0.0)) fail("sweep.horizon", "must be positive");
  if (c.sweep_polish_steps < 0)
    fail("sweep.polish_steps", "must be nonnegative");
  if (!(c.sweep_polish_tol > 0.0))
    fail("sweep.polish_tol", "must be positive");

  if (c.audit_bound_samples < 1)
    fail("audit.bound_samples", "must be at least 1");
  if (c.audit_lipschitz_samples < 1)
    fail("audit.lipschitz_samples", "must be at least 1");
  if (c.audit_max_atoms < 1) fail("audit.max_atoms", "must be at least 1");

  if (c.warmstart_overlaps.empty()) {
    fail("warmstart.overlaps", "must be nonempty");
  } else {
    for (const double o : c.warmstart_overlaps) {
      if (!(o > 0.0) || o > 1.0) {
        fail("warmstart.overlaps", "entries must lie in (0, 1]");
        break;
      }
    }
    std::vector<double> sorted = c.warmstart_overlaps;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
      fail("warmstart.overlaps", "entries must be distinct");
  }
  if (!(c.warmstart_horizon > 0.0))
    fail("warmstart.horizon", "must be positive");
}

std::string section_of(const std::string& key) {
  const std::size_t dot = key.find('.');
  return dot == std::string::npos ? key : key.substr(0, dot);
}

}  // namespace

RunConfig parse_config_text(const std::string& text,
                            const std::string& origin) {
  RunConfig config;
  std::vector<std::string> errors;
  std::set<std::string> seen;
  std::map<std::string, int> key_lines;

  std::istringstream stream(text);
  std::string line;
  int line_no = 0;
  while (std::getline(stream, line)) {
    ++line_no;
    const std::string stripped = trim(line);
    if (stripped.empty() || stripped[0] == '#') continue;
    const std::string at = origin + ":" + std::to_string(line_no) + ": ";

    const std::size_t eq = stripped.find('=');
    if (eq == std::string::npos) {
      errors.push_back(at + "expected 'key = value', got '" + stripped + "'");
      continue;
    }
    const std::string key = trim(stripped.substr(0, eq));
    const std::string value = trim(stripped.substr(eq + 1));
    if (key.empty()) {
      errors.push_back(at + "missing key before '='");
      continue;
    }

    const KeySpec* spec = find_key(key);
    if (spec == nullptr) {
      errors.push_back(at + "unknown key '" + key + "'");
      continue;
    }
    if (!seen.insert(key).second) {
      errors.push_back(at + "duplicate key '" + key + "'");
      continue;
    }
    key_lines[key] = line_no;
    const std::string problem = spec->set(config, value);
    if (!problem.empty()) errors.push_back(at + key + ": " + problem);
  }

  // Semantic errors are anchored to the line that set the offending key.
  const std::size_t parse_errors = errors.size();
  validate(config, errors);
  for (std::size_t i = parse_errors; i < errors.size(); ++i) {
    const std::size_t colon = errors[i].find(':');
    if (colon == std::string::npos) continue;
    const auto it = key_lines.find(errors[i].substr(0, colon));
    if (it != key_lines.end())
      errors[i] =
          origin + ":" + std::to_string(it->second) + ": " + errors[i];
  }

  if (!errors.empty()) {
    std::string msg = "invalid configuration (" +
                      std::to_string(errors.size()) + " error" +
                      (errors.size() == 1 ? "" : "s") + "):";
    for (const std::string& e : errors) msg += "\n  " + e;
    throw ConfigError(msg, errors);
  }
  return config;
}

RunConfig parse_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("config file not found: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str(), path);
}

std::string serialize_config(const RunConfig& config) {
  std::string out;
  std::string last_section;
  for (const KeySpec& spec : kRegistry) {
    const std::string section = section_of(spec.key);
    if (section != last_section) {
      if (!out.empty()) out += "\n";
      last_section = section;
    }
    out += std::string(spec.key) + " = " + spec.get(config) + "\n";
  }
  return out;
}

std::uint64_t config_hash(const RunConfig& config) {
  const std::string text = serialize_config(config);
  std::uint64_t h = 1469598103934665603ull;
  for (const unsigned char ch : text) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  return h;
}

std::string config_hash_hex(const RunConfig& config) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(config_hash(config)));
  return buf;
}

bool operator==(const RunConfig& a, const RunConfig& b) {
  return serialize_config(a) == serialize_config(b);
}

std::vector<ConfigKeyInfo> config_keys() {
  const RunConfig defaults;
  std::vector<ConfigKeyInfo> rows;
  rows.reserve(std::size(kRegistry));
  for (const KeySpec& spec : kRegistry)
    rows.push_back(
        {spec.key, spec.get(defaults), spec.module, spec.summary});
  return rows;
}

std::string config_help() {
  const std::vector<ConfigKeyInfo> rows = config_keys();
  std::size_t key_w = 0;
  std::size_t val_w = 0;
  std::size_t mod_w = 0;
  for (const ConfigKeyInfo& r : rows) {
    key_w = std::max(key_w, r.key.size());
    val_w = std::max(val_w, r.value.size());
    mod_w = std::max(mod_w, r.module.size());
  }
  std::string out = "Config keys (key = default  [module]  description):\n";
  for (const ConfigKeyInfo& r : rows) {
    out += "  " + r.key + std::string(key_w - r.key.size(), ' ') + " = " +
           r.value + std::string(val_w - r.value.size(), ' ') + "  [" +
           r.module + "]" + std::string(mod_w - r.module.size(), ' ') + "  " +
           r.summary + "\n";
  }
  return out;
}

Domain config_domain(const RunConfig& config) {
  Domain domain;
  domain.dimension = config.domain_dimension;
  domain.half_width = config.domain_half_width;
  return domain;
}

MollifierSpec config_mollifier(const RunConfig& config) {
  MollifierSpec spec;
  spec.epsilon = config.kernel_epsilon;
  spec.domain = config_domain(config);
  spec.mode = config.kernel_mode;
  spec.kappa = config.kernel_kappa;
  return spec;
}

ReferenceMeasure config_reference(const RunConfig& config) {
  return make_reference(config.reference_potential, config.reference_scale,
                        config_domain(config), config.reference_grid_points);
}

EnergyFunctional config_energy(const RunConfig& config) {
  return make_energy(config.energy_kind, config.energy_form,
                     config.energy_features, config.energy_centered,
                     config_domain(config));
}

DriftStrategy config_strategy(const RunConfig& config) {
  DriftStrategy strategy;
  strategy.variant = config.drift_variant;
  strategy.sigma = config.drift_sigma;
  strategy.kernel = config_mollifier(config);
  strategy.functional = config_energy(config);
  strategy.reference = config_reference(config);
  strategy.centering = config.drift_centering;
  strategy.quadrature_nodes = config.drift_quadrature_nodes;
  strategy.kl_grid_points = config.drift_kl_grid_points;
  return strategy;
}

SimulationConfig config_simulation(const RunConfig& config) {
  SimulationConfig sim;
  sim.horizon = config.simulation_horizon;
  sim.dt = config.simulation_dt;
  sim.scheme = config.simulation_scheme;
  sim.renormalize_every_step = config.simulation_renormalize;
  sim.seed = config.simulation_seed;
  sim.output_stride = config.simulation_output_stride;
  return sim;
}

}  // namespace wf
