#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "kavg/config.hpp"
#include "kavg/trace.hpp"

namespace kavg {

struct GridPoint {
  std::size_t config_id = 0;
  Algorithm algorithm = Algorithm::KAvg;
  std::size_t K = 1;
  std::size_t P = 1;
  ScheduleSpec batch;
  ScheduleSpec gamma;
  std::size_t N = 1;
};

std::vector<GridPoint> expand_grid(const ExperimentConfig& config);

struct RunRecord {
  std::size_t config_id = 0;
  std::uint64_t seed = 0;
  double avg_grad_norm_sq = 0.0;
  double final_grad_norm_sq = 0.0;
  double final_objective = 0.0;
  bool diverged = false;
  std::uint64_t samples_processed = 0;
  RunTrace trace;  // rows only
};

struct AggregateRow {
  std::size_t config_id = 0;
  std::size_t n_seeds = 0;
  // Over non-diverged seeds; infinite when every seed diverged.
  double mean_final_grad_norm_sq = 0.0;
  double stderr_final = 0.0;
  double divergence_fraction = 0.0;
  std::optional<double> bound_value;
  double mean_avg_grad_norm_sq = 0.0;
  double stderr_avg = 0.0;
};

struct BoundRow {
  std::size_t config_id = 0;
  std::string formula;  // theorem1 | theorem2 | asgd | none
  bool admissible = false;
  double L = 0.0;
  double M = 0.0;
  double gap = 0.0;
  std::optional<double> value;
};

struct SweepResult {
  std::vector<GridPoint> points;
  std::vector<RunRecord> runs;  // config order, then seed order
  std::vector<AggregateRow> aggregates;
  std::vector<BoundRow> bounds;  // filled when the overlay is on
};

// Runs one grid point for one seed.
RunTrace run_point(const ExperimentConfig& config, const GridPoint& point, std::uint64_t seed);

// Every (grid point x seed) run; runs are distributed over `threads` workers
// and collected in config order, so the result does not depend on `threads`.
SweepResult run_sweep(const ExperimentConfig& config, unsigned threads = 1);

// run_sweep, then writes raw.csv, runs.csv, aggregate.csv and (overlay on)
// bounds.csv into config.output_dir when it is set.
SweepResult run_experiment(const ExperimentConfig& config, unsigned threads = 1);

std::vector<AggregateRow> aggregate(const SweepResult& result);
// Recomputes every aggregate from the raw runs and compares.
bool verify_aggregates(const SweepResult& result);

BoundRow bound_for(const ExperimentConfig& config, const GridPoint& point);

void write_raw_csv(std::ostream& out, const SweepResult& result, TraceGranularity granularity);
void write_runs_csv(std::ostream& out, const SweepResult& result);
void write_aggregate_csv(std::ostream& out, const SweepResult& result);
void write_bounds_csv(std::ostream& out, const SweepResult& result);

}  // namespace kavg
