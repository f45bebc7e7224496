#include "kavg/engine.hpp"

#include <atomic>
#include <barrier>
#include <thread>

#include "kavg/error.hpp"

namespace kavg {
namespace {

// K local steps of one learner, starting from `w` in place.
void local_steps(const Objective& oracle, std::span<double> w, std::size_t learner, std::uint64_t first_iteration,
                 std::size_t steps, double gamma, std::size_t batch, std::uint64_t seed, std::span<double> grad) {
  const double scale = gamma / static_cast<double>(batch);
  for (std::size_t k = 0; k < steps; ++k) {
    const RngStream stream(seed, Lineage{first_iteration + k, static_cast<std::uint32_t>(learner), 0});
    oracle.minibatch_gradient_sum(w, stream, batch, grad);
    for (std::size_t l = 0; l < w.size(); ++l) w[l] -= scale * grad[l];
  }
}

}  // namespace

void SyncPlan::validate() const {
  require(learners >= 1, "learners must be >= 1");
  require(delay >= 1, "delay K must be >= 1");
  require(rounds >= 1, "rounds N must be >= 1");
  require(delta > 0.0 && delta < 1.0, "delta must lie in (0, 1)");
  stepsize.validate_stepsize();
  batch.validate_batch();
  if (stepsize.is_table()) require(stepsize.length() >= rounds, "stepsize table shorter than the run");
  if (batch.is_table()) require(batch.length() >= rounds, "batch table shorter than the run");
}

Vector average_params(std::span<const Vector> params) {
  require(!params.empty(), "cannot average an empty set of parameters");
  const std::size_t d = params.front().size();
  Vector mean(d, 0.0);
  for (const auto& p : params) {
    require(p.size() == d, "ragged parameter vectors");
    for (std::size_t l = 0; l < d; ++l) mean[l] += p[l];
  }
  const double inv = 1.0 / static_cast<double>(params.size());
  for (double& x : mean) x *= inv;
  return mean;
}

RunTrace run_kavg(const Objective& oracle, const SyncPlan& plan, std::span<const double> w1,
                  std::uint64_t root_seed, const RunOptions& options) {
  plan.validate();
  require(w1.size() == oracle.dimension(), "initial point has wrong dimension");

  const std::size_t P = plan.learners;
  const std::size_t K = plan.delay;
  const std::size_t d = oracle.dimension();

  RunTrace trace;
  trace.planned_rounds = plan.rounds;
  Vector global(w1.begin(), w1.end());
  std::vector<Vector> learners(P, Vector(d));
  std::vector<Vector> grads(P, Vector(d));
  std::uint64_t samples = 0;

  bool alive = record_row(trace, oracle, global, 0, 0, 0, options.record_params);

  // Runs the learners [begin, end) for round n (1-based).
  auto work = [&](std::size_t n, std::size_t begin, std::size_t end) {
    const double gamma = plan.stepsize.stepsize(n);
    const std::size_t batch = plan.batch.batch(n);
    for (std::size_t j = begin; j < end; ++j) {
      learners[j] = global;
      local_steps(oracle, learners[j], j, (n - 1) * K, K, gamma, batch, root_seed, grads[j]);
    }
  };
  auto synchronize = [&](std::size_t n) {
    global = average_params(learners);
    samples += static_cast<std::uint64_t>(K) * plan.batch.batch(n) * P;
    alive = record_row(trace, oracle, global, n, samples, n, options.record_params);
  };

  const unsigned threads = std::max(1u, std::min<unsigned>(options.threads, static_cast<unsigned>(P)));
  if (threads == 1) {
    for (std::size_t n = 1; n <= plan.rounds && alive; ++n) {
      work(n, 0, P);
      synchronize(n);
    }
  } else {
    // Workers own fixed learner slices; the barrier completion performs the
    // ordered reduction on a single thread.
    std::size_t round = 1;
    std::atomic<bool> stop = !alive;
    auto on_barrier = [&]() noexcept {
      synchronize(round);
      ++round;
      if (!alive || round > plan.rounds) stop = true;
    };
    std::barrier sync(static_cast<std::ptrdiff_t>(threads), on_barrier);
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < threads; ++t) {
      const std::size_t begin = P * t / threads;
      const std::size_t end = P * (t + 1) / threads;
      pool.emplace_back([&, begin, end] {
        while (!stop) {
          work(round, begin, end);
          sync.arrive_and_wait();
        }
      });
    }
  }

  finalize_trace(trace);
  if (P > 0 && options.record_params) trace.learner_params = learners;
  return trace;
}

RunTrace run_sequential_sgd(const Objective& oracle, const ScheduleSpec& stepsize, const ScheduleSpec& batch,
                            std::size_t total_steps, std::span<const double> w1, std::uint64_t root_seed,
                            const RunOptions& options) {
  require(total_steps >= 1, "total_steps must be >= 1");
  require(w1.size() == oracle.dimension(), "initial point has wrong dimension");
  stepsize.validate_stepsize();
  batch.validate_batch();

  RunTrace trace;
  trace.planned_rounds = total_steps;
  Vector w(w1.begin(), w1.end());
  Vector grad(w.size());
  std::uint64_t samples = 0;
  bool alive = record_row(trace, oracle, w, 0, 0, 0, options.record_params);
  for (std::size_t t = 1; t <= total_steps && alive; ++t) {
    const std::size_t b = batch.batch(t);
    local_steps(oracle, w, 0, t - 1, 1, stepsize.stepsize(t), b, root_seed, grad);
    samples += b;
    alive = record_row(trace, oracle, w, t, samples, 0, options.record_params);
  }
  finalize_trace(trace);
  if (options.record_params) trace.learner_params = {w};
  return trace;
}

}  // namespace kavg
