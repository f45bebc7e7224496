#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "kavg/oracle.hpp"
#include "kavg/schedule.hpp"
#include "kavg/trace.hpp"

namespace kavg {

// Hyperparameters of one K-AVG run. gamma_n and B_n are read once per global
// round and stay fixed for the K local steps of that round.
struct SyncPlan {
  std::size_t learners = 1;  // P
  std::size_t delay = 1;     // K
  std::size_t rounds = 1;    // N
  ScheduleSpec stepsize = ScheduleSpec::constant(0.1);
  ScheduleSpec batch = ScheduleSpec::constant(1);
  double delta = 0.5;  // only used by admissibility checks

  void validate() const;
};

struct RunOptions {
  unsigned threads = 1;
  bool record_params = true;
};

// Mean of the vectors, accumulated in index order.
Vector average_params(std::span<const Vector> params);

// P learners start each round from the global iterate, take K mini-batch
// steps w <- w - (gamma_n / B_n) sum_s grad F(w; xi), then the global
// iterate becomes their average. Output is bit-identical for any thread count.
RunTrace run_kavg(const Objective& oracle, const SyncPlan& plan, std::span<const double> w1,
                  std::uint64_t root_seed, const RunOptions& options = {});

// Single-learner mini-batch SGD; one trace row per step.
RunTrace run_sequential_sgd(const Objective& oracle, const ScheduleSpec& stepsize,
                            const ScheduleSpec& batch, std::size_t total_steps,
                            std::span<const double> w1, std::uint64_t root_seed,
                            const RunOptions& options = {});

}  // namespace kavg
