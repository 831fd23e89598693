#include "weightflow/csv.hpp"

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "weightflow/errors.hpp"

namespace wf {

std::string format_number(double v) {
  char buf[40];
  for (int prec = 1; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof buf, "%.*g", prec, v);
    if (std::strtod(buf, nullptr) == v) return buf;
  }
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string csv_escape(const std::string& field) {
  if (field.find_first_of(",\"\n") == std::string::npos) return field;
  std::string out = "\"";
  for (const char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

void write_text_file(const std::string& path, const std::string& content) {
  const std::filesystem::path target(path);
  std::error_code ec;
  if (target.has_parent_path())
    std::filesystem::create_directories(target.parent_path(), ec);

  const std::filesystem::path temp(path + ".tmp");
  {
    std::ofstream out(temp, std::ios::binary | std::ios::trunc);
    if (!out) throw ConfigError("cannot write output file: " + path);
    out << content;
    out.flush();
    if (!out) throw ConfigError("write failed for output file: " + path);
  }
  std::filesystem::rename(temp, target, ec);
  if (ec) {
    std::filesystem::remove(temp, ec);
    throw ConfigError("cannot finalize output file: " + path);
  }
}

std::string trajectory_csv(const Trajectory& trajectory,
                           const std::string& config_hash) {
  std::string out = "# config_hash=" + config_hash + "\n";
  out += "t,atom_index,weight\n";
  for (std::size_t s = 0; s < trajectory.states.size(); ++s) {
    const WeightedEnsemble& state = trajectory.states[s];
    const std::string t = format_number(trajectory.times[s]);
    for (std::size_t i = 0; i < state.size(); ++i) {
      out += t;
      out += ',';
      out += std::to_string(i);
      out += ',';
      out += format_number(state.weights[i]);
      out += '\n';
    }
  }
  return out;
}

std::string positions_csv(const WeightedEnsemble& ensemble,
                          const std::string& config_hash) {
  const int d = ensemble.domain.dimension;
  std::string out = "# config_hash=" + config_hash + "\n";
  out += "atom_index";
  for (int k = 0; k < d; ++k) out += ",x_" + std::to_string(k);
  out += '\n';
  for (std::size_t i = 0; i < ensemble.size(); ++i) {
    out += std::to_string(i);
    const double* x = ensemble.position(i);
    for (int k = 0; k < d; ++k) {
      out += ',';
      out += format_number(x[k]);
    }
    out += '\n';
  }
  return out;
}

std::string diagnostics_csv(const Trajectory& trajectory,
                            const std::string& config_hash) {
  std::string out = "# config_hash=" + config_hash + "\n";
  out += "t,drift_mean,min_w,max_w,energy\n";
  for (const StepDiagnostics& diag : trajectory.diagnostics) {
    out += format_number(diag.t);
    out += ',';
    out += format_number(diag.drift_mean);
    out += ',';
    out += format_number(diag.min_weight);
    out += ',';
    out += format_number(diag.max_weight);
    out += ',';
    out += format_number(diag.energy);
    out += '\n';
  }
  return out;
}

}  // namespace wf
