// Deterministic artifact writers. Every file starts with a config-hash
// comment line and is written to a temp path then renamed, so interrupted
// runs never leave partial outputs behind.
#pragma once

#include <string>

#include "weightflow/dynamics.hpp"

namespace wf {

// Shortest decimal string that parses back to exactly the same double.
std::string format_number(double v);

// RFC-4180 style quoting, applied only when the field needs it.
std::string csv_escape(const std::string& field);

// Writes content to path atomically (temp file + rename), creating parent
// directories as needed. Throws ConfigError when the path is unwritable.
void write_text_file(const std::string& path, const std::string& content);

// t,atom_index,weight for every stored state.
std::string trajectory_csv(const Trajectory& trajectory,
                           const std::string& config_hash);

// atom_index,x_0,...,x_{d-1}; positions are frozen, so one sidecar per run.
std::string positions_csv(const WeightedEnsemble& ensemble,
                          const std::string& config_hash);

// t,drift_mean,min_w,max_w,energy, one row per step taken.
std::string diagnostics_csv(const Trajectory& trajectory,
                            const std::string& config_hash);

}  // namespace wf
