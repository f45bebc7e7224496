#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "kavg/oracle.hpp"

namespace kavg {

// Row r holds the global iterate after r rounds (row 0 is w~_1).
struct TraceRow {
  std::size_t round = 0;
  double grad_norm_sq = 0.0;
  double objective = 0.0;
  std::uint64_t samples_processed = 0;
  std::uint64_t sync_count = 0;
  bool diverged = false;
};

struct RunTrace {
  std::vector<TraceRow> rows;
  // Global iterate of each row; empty when parameter recording is off.
  std::vector<Vector> params;
  // Rounds the plan asked for. Fewer rows than planned_rounds + 1 means the
  // run was cut short by divergence.
  std::size_t planned_rounds = 0;
  // Mean of grad_norm_sq over rows 0..planned_rounds-1, i.e. over w~_1..w~_N.
  // Infinite for diverged runs.
  double avg_grad_norm_sq = 0.0;
  double final_objective = 0.0;
  bool diverged = false;
  // Final local iterates (elastic averaging keeps them apart from the center).
  std::vector<Vector> learner_params;
  // Largest snapshot age among applied updates (asynchronous baselines only).
  std::optional<std::size_t> max_observed_staleness;
  std::vector<std::string> warnings;

  double final_grad_norm_sq() const { return rows.empty() ? 0.0 : rows.back().grad_norm_sq; }
};

// Recomputes avg_grad_norm_sq from the rows.
double average_grad_norm_sq(const RunTrace& trace);

// Appends a row for `w` and returns false once the iterate is non-finite, in
// which case the row is flagged and the trace is marked diverged.
bool record_row(RunTrace& trace, const Objective& oracle, std::span<const double> w, std::size_t round,
                std::uint64_t samples, std::uint64_t syncs, bool keep_params);

// Fills avg_grad_norm_sq and final_objective once the run has ended.
void finalize_trace(RunTrace& trace);

// round,grad_norm_sq,objective,samples_processed,sync_count,diverged
void write_trace_csv(std::ostream& out, const RunTrace& trace);
// One iterate per line, space-separated decimal floats.
void write_params_text(std::ostream& out, const RunTrace& trace);

}  // namespace kavg
