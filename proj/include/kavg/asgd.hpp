#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "kavg/engine.hpp"

namespace kavg {

enum class StalenessKind { RoundRobin, UniformRandom };

// RoundRobin: every update is computed at the snapshot min(P - 1, max) ticks
// old. UniformRandom: the age is drawn uniformly from {0, ..., max}.
struct StalenessModel {
  StalenessKind kind = StalenessKind::RoundRobin;
  // 0 means "use P".
  std::size_t max_staleness = 0;
};

struct ElasticParams {
  double rho = 0.1;
  std::size_t comm_period = 1;
};

// Age of the snapshot used at logical tick `tick` (before clamping to the
// number of updates that exist).
std::size_t staleness_at(const StalenessModel& model, std::size_t learners, std::uint64_t tick,
                         std::uint64_t root_seed);

// Parameter-server simulation on a logical clock: at tick t learner t mod P
// applies a mini-batch gradient evaluated at the center as it was tau(t)
// updates earlier. One trace row per P*K updates, so sample accounting lines
// up with run_kavg.
RunTrace run_downpour(const Objective& oracle, const SyncPlan& plan, const StalenessModel& staleness,
                      std::span<const double> w1, std::uint64_t root_seed, const RunOptions& options = {});

// Elastic averaging. Every local step: w_j <- w_j - gamma * g_j. Every
// comm_period-th step the elastic pull -gamma*rho*(w_j - c) joins that step
// (evaluated before it), then c <- c + gamma*rho*sum_j (w_j - c) with the
// updated learners. Trace rows record the center c.
RunTrace run_elastic(const Objective& oracle, const SyncPlan& plan, const ElasticParams& elastic,
                     std::span<const double> w1, std::uint64_t root_seed, const RunOptions& options = {});

}  // namespace kavg
