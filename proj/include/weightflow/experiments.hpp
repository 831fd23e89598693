// Orchestrated studies: propagation-of-chaos scaling, bandwidth-sweep
// minimizer convergence, drift-constants audit, and warm-start sensitivity.
// Every study is deterministic given (config, seed) and emits one CSV plus a
// JSON summary, both stamped with the config hash.
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "weightflow/config.hpp"

namespace wf {

// One (parameter cell, statistic) row. Verdict is "pass"/"fail" for checked
// rows, "flag" for surfaced-but-nonfatal anomalies, "info" for plain data.
struct StudyCell {
  std::string params;     // semicolon-joined key=value pairs, e.g. "N=64"
  std::string statistic;  // e.g. "sup_w2_mean"
  double value = 0.0;
  double stderr_value = 0.0;  // zero when not a seed average
  std::string verdict = "info";
};

// Study-level outcome tied to an acceptance criterion.
struct StudyVerdict {
  std::string criterion;  // "AC3", "AC4", ...
  std::string detail;
  bool passed = true;
};

struct StudyReport {
  std::string study;
  std::string config_hash;
  std::vector<std::uint64_t> seeds;
  std::vector<StudyCell> cells;
  std::vector<StudyVerdict> verdicts;
  std::string notes;  // witness payload when a verdict fails

  bool passed() const;
};

// Mean sup-over-time W_2 against the quadrature mean-field reference for
// each N in poc.n_list; verdict: strictly decreasing down to the reference
// self-consistency floor, largest N within 3x of that floor.
StudyReport run_poc_scaling(const RunConfig& config);

// For each bandwidth in sweep.epsilons: minimize the smoothed energy by a
// long mean-field flow plus a fixed-point polish, then compare against the
// Gibbs grid oracle; verdict: oracle distance decreasing to the grid floor
// and the unsmoothed energy dominating the smoothed one.
StudyReport run_epsilon_sweep(const RunConfig& config);

// Random drift-bound and Lipschitz checks against the certified constants
// for all five strategies; verdict: every observed/bound ratio <= 1.
StudyReport run_constants_audit(const RunConfig& config);

// Initial supports covering a fraction of the box; verdict: full overlap
// beats partial overlap in terminal oracle distance, and no mass appears
// outside the initial support.
StudyReport run_warm_start_study(const RunConfig& config);

// study,params,statistic,value,stderr,verdict rows under a config-hash
// comment line.
std::string study_csv(const StudyReport& report);

// JSON summary: study, config hash, seeds, per-criterion verdicts, cells.
std::string study_json(const StudyReport& report);

// Writes <study>.csv and <study>.json into out_dir.
void write_study(const StudyReport& report, const std::string& out_dir);

}  // namespace wf
