#include "kavg/asgd.hpp"

#include <algorithm>
#include <cmath>
#include <deque>

#include "kavg/error.hpp"

namespace kavg {

std::size_t staleness_at(const StalenessModel& model, std::size_t learners, std::uint64_t tick,
                         std::uint64_t root_seed) {
  const std::size_t bound = model.max_staleness == 0 ? learners : model.max_staleness;
  if (model.kind == StalenessKind::RoundRobin) return std::min(learners - 1, bound);
  const RngStream rng(root_seed, Lineage{tick, 0, 0}, Domain::Staleness);
  return static_cast<std::size_t>(rng.below(bound + 1, 0));
}

RunTrace run_downpour(const Objective& oracle, const SyncPlan& plan, const StalenessModel& staleness,
                      std::span<const double> w1, std::uint64_t root_seed, const RunOptions& options) {
  plan.validate();
  require(w1.size() == oracle.dimension(), "initial point has wrong dimension");
  require(staleness.max_staleness <= plan.learners, "max_staleness may not exceed the number of learners");

  const std::size_t P = plan.learners;
  const std::size_t K = plan.delay;
  const std::size_t d = oracle.dimension();
  const std::size_t window = (staleness.max_staleness == 0 ? P : staleness.max_staleness) + 1;

  RunTrace trace;
  trace.planned_rounds = plan.rounds;
  trace.max_observed_staleness = 0;
  Vector center(w1.begin(), w1.end());
  // history.back() is the current center; history[size-1-a] is a updates old.
  std::deque<Vector> history{center};
  Vector grad(d);
  std::uint64_t tick = 0;
  std::uint64_t samples = 0;

  bool alive = record_row(trace, oracle, center, 0, 0, 0, options.record_params);
  for (std::size_t n = 1; n <= plan.rounds && alive; ++n) {
    const double gamma = plan.stepsize.stepsize(n);
    const std::size_t batch = plan.batch.batch(n);
    const double scale = gamma / static_cast<double>(batch);
    for (std::size_t u = 0; u < P * K; ++u, ++tick) {
      const std::size_t learner = tick % P;
      const std::size_t age = std::min<std::size_t>(staleness_at(staleness, P, tick, root_seed), history.size() - 1);
      *trace.max_observed_staleness = std::max(*trace.max_observed_staleness, age);
      const Vector& snapshot = history[history.size() - 1 - age];
      const RngStream stream(root_seed, Lineage{tick, static_cast<std::uint32_t>(learner), 0});
      oracle.minibatch_gradient_sum(snapshot, stream, batch, grad);
      for (std::size_t l = 0; l < d; ++l) center[l] -= scale * grad[l];
      history.push_back(center);
      if (history.size() > window) history.pop_front();
    }
    samples += static_cast<std::uint64_t>(P) * K * batch;
    alive = record_row(trace, oracle, center, n, samples, 0, options.record_params);
  }
  finalize_trace(trace);
  return trace;
}

RunTrace run_elastic(const Objective& oracle, const SyncPlan& plan, const ElasticParams& elastic,
                     std::span<const double> w1, std::uint64_t root_seed, const RunOptions& options) {
  plan.validate();
  require(w1.size() == oracle.dimension(), "initial point has wrong dimension");
  require(elastic.rho >= 0.0, "rho must be nonnegative");
  require(elastic.comm_period >= 1, "comm_period must be >= 1");

  const std::size_t P = plan.learners;
  const std::size_t K = plan.delay;
  const std::size_t d = oracle.dimension();

  RunTrace trace;
  trace.planned_rounds = plan.rounds;
  Vector center(w1.begin(), w1.end());
  std::vector<Vector> learners(P, center);
  Vector grad(d);
  std::uint64_t samples = 0;

  bool alive = record_row(trace, oracle, center, 0, 0, 0, options.record_params);
  std::uint64_t syncs = 0;
  for (std::size_t n = 1; n <= plan.rounds && alive; ++n) {
    const double gamma = plan.stepsize.stepsize(n);
    const std::size_t batch = plan.batch.batch(n);
    const double scale = gamma / static_cast<double>(batch);
    const double pull = gamma * elastic.rho;
    for (std::size_t k = 0; k < K; ++k) {
      const std::uint64_t iteration = (n - 1) * K + k;
      const bool interact = (iteration + 1) % elastic.comm_period == 0;
      for (std::size_t j = 0; j < P; ++j) {
        Vector& w = learners[j];
        const RngStream stream(root_seed, Lineage{iteration, static_cast<std::uint32_t>(j), 0});
        oracle.minibatch_gradient_sum(w, stream, batch, grad);
        for (std::size_t l = 0; l < d; ++l) {
          const double elastic_term = interact ? pull * (w[l] - center[l]) : 0.0;
          w[l] -= scale * grad[l] + elastic_term;
        }
      }
      if (interact) {
        Vector moved(d, 0.0);
        for (const auto& w : learners) {
          for (std::size_t l = 0; l < d; ++l) moved[l] += w[l] - center[l];
        }
        for (std::size_t l = 0; l < d; ++l) center[l] += pull * moved[l];
        ++syncs;
      }
    }
    samples += static_cast<std::uint64_t>(P) * K * batch;
    alive = record_row(trace, oracle, center, n, samples, syncs, options.record_params);
    if (alive) {
      for (const auto& w : learners) {
        if (!std::all_of(w.begin(), w.end(), [](double x) { return std::isfinite(x); })) {
          trace.rows.back().diverged = true;
          trace.diverged = true;
          alive = false;
          break;
        }
      }
    }
  }
  finalize_trace(trace);
  if (options.record_params) trace.learner_params = learners;
  return trace;
}

}  // namespace kavg
