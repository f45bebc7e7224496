#include <gtest/gtest.h>

#include <cmath>

#include "kavg/engine.hpp"
#include "kavg/error.hpp"
#include "kavg/theory.hpp"

using namespace kavg;

namespace {

SyncPlan make_plan(std::size_t P, std::size_t K, std::size_t N, double gamma, std::size_t B) {
  SyncPlan plan;
  plan.learners = P;
  plan.delay = K;
  plan.rounds = N;
  plan.stepsize = ScheduleSpec::constant(gamma);
  plan.batch = ScheduleSpec::constant(static_cast<double>(B));
  return plan;
}

void expect_same_rows(const RunTrace& a, const RunTrace& b, bool compare_syncs = true) {
  ASSERT_EQ(a.rows.size(), b.rows.size());
  for (std::size_t i = 0; i < a.rows.size(); ++i) {
    EXPECT_EQ(a.rows[i].round, b.rows[i].round);
    EXPECT_EQ(a.rows[i].grad_norm_sq, b.rows[i].grad_norm_sq);
    EXPECT_EQ(a.rows[i].objective, b.rows[i].objective);
    EXPECT_EQ(a.rows[i].samples_processed, b.rows[i].samples_processed);
    if (compare_syncs) EXPECT_EQ(a.rows[i].sync_count, b.rows[i].sync_count);
  }
  EXPECT_EQ(a.params, b.params);
}

}  // namespace

TEST(AverageParams, Examples) {
  EXPECT_EQ(average_params(std::vector<Vector>{{1.5, -2.0}}), (Vector{1.5, -2.0}));
  EXPECT_EQ(average_params(std::vector<Vector>{{1.0, 0.0}, {0.0, 1.0}}), (Vector{0.5, 0.5}));
  EXPECT_DOUBLE_EQ(average_params(std::vector<Vector>{{1.0}, {2.0}, {4.0}})[0], 7.0 / 3.0);
}

TEST(AverageParams, Errors) {
  EXPECT_THROW(average_params(std::vector<Vector>{}), ContractError);
  EXPECT_THROW(average_params(std::vector<Vector>{{1.0}, {1.0, 2.0}}), ContractError);
}

TEST(SyncPlan, Validation) {
  auto plan = make_plan(1, 1, 1, 0.1, 1);
  plan.learners = 0;
  EXPECT_THROW(plan.validate(), ContractError);
  plan = make_plan(1, 1, 1, 0.1, 1);
  plan.delta = 1.0;
  EXPECT_THROW(plan.validate(), ContractError);
  plan = make_plan(1, 1, 3, 0.1, 1);
  plan.stepsize = ScheduleSpec::table({0.1, 0.1});
  EXPECT_THROW(plan.validate(), ContractError);
}

TEST(KAvg, OneRoundClosedForm) {
  const auto q = Objective::quadratic({1.0, 1.0}, 0.0);
  const Vector w1{1.0, 1.0};
  const auto trace = run_kavg(q, make_plan(4, 2, 1, 0.1, 1), w1, 7);
  ASSERT_EQ(trace.rows.size(), 2u);
  for (const auto& learner : trace.learner_params) {
    for (double x : learner) EXPECT_NEAR(x, 0.81, 1e-15);
  }
  for (double x : trace.params[1]) EXPECT_NEAR(x, 0.81, 0.81 * 1e-14);
  EXPECT_EQ(trace.rows[1].samples_processed, 8u);
  EXPECT_EQ(trace.rows[1].sync_count, 1u);
}

TEST(SequentialSgd, ThreeStepsClosedForm) {
  const auto q = Objective::quadratic({1.0}, 0.0);
  const auto trace = run_sequential_sgd(q, ScheduleSpec::constant(0.5), ScheduleSpec::constant(1), 3, Vector{1.0}, 1);
  EXPECT_EQ(trace.params.back()[0], 0.125);
  EXPECT_EQ(trace.rows.size(), 4u);
}

TEST(SequentialSgd, TinyStepsizeBarelyMoves) {
  // Stepsizes must be positive; the smallest one leaves w unchanged.
  const auto t = Objective::trig_nonconvex(2, 2.0, 1.0);
  const auto trace =
      run_sequential_sgd(t, ScheduleSpec::constant(1e-300), ScheduleSpec::constant(1), 5, Vector{1.0, -1.0}, 3);
  for (const auto& row : trace.rows) EXPECT_EQ(row.grad_norm_sq, trace.rows.front().grad_norm_sq);
}

TEST(KAvg, ReducesToSequentialSgdBitwise) {
  for (std::uint64_t seed = 0; seed < 12; ++seed) {
    const Objective oracle = seed % 3 == 0   ? Objective::quadratic({1.0 + seed, 0.5, 2.0}, 0.4)
                             : seed % 3 == 1 ? Objective::trig_nonconvex(3, 0.5 + seed * 0.3, 1.0)
                                             : Objective::finite_sum({{1.0, 2.0, 1.0}, {0.5, 1.0, 3.0}},
                                                                     {{0.0, 1.0, -1.0}, {1.0, 0.0, 2.0}}, 5.0);
    const Vector w1{0.7, -1.2, 2.0};
    const auto kavg = run_kavg(oracle, make_plan(1, 1, 40, 0.05, 1), w1, seed);
    const auto sgd =
        run_sequential_sgd(oracle, ScheduleSpec::constant(0.05), ScheduleSpec::constant(1), 40, w1, seed);
    expect_same_rows(kavg, sgd, false);
    EXPECT_EQ(kavg.avg_grad_norm_sq, sgd.avg_grad_norm_sq);
  }
}

TEST(KAvg, ZeroNoiseIndependentOfP) {
  const auto t = Objective::trig_nonconvex(4, 2.0, 0.0);
  const Vector w1{1.0, 2.0, -0.5, 3.0};
  const auto one = run_kavg(t, make_plan(1, 3, 10, 0.05, 2), w1, 1);
  for (std::size_t P : {2u, 5u, 8u}) {
    const auto many = run_kavg(t, make_plan(P, 3, 10, 0.05, 2), w1, 99);
    ASSERT_EQ(one.params.size(), many.params.size());
    for (std::size_t r = 0; r < one.params.size(); ++r) {
      for (std::size_t l = 0; l < 4; ++l) EXPECT_NEAR(one.params[r][l], many.params[r][l], 1e-14);
    }
  }
}

TEST(KAvg, ThreadCountDoesNotChangeOutput) {
  const auto t = Objective::trig_nonconvex(6, 2.0, 1.0);
  const Vector w1(6, 1.0);
  RunOptions serial;
  RunOptions parallel;
  parallel.threads = 4;
  const auto plan = make_plan(7, 4, 25, 0.03, 3);
  expect_same_rows(run_kavg(t, plan, w1, 5, serial), run_kavg(t, plan, w1, 5, parallel));
}

TEST(KAvg, SampleAccountingAndAverage) {
  const auto t = Objective::trig_nonconvex(3, 2.0, 1.0);
  auto plan = make_plan(3, 4, 12, 0.02, 1);
  plan.batch = ScheduleSpec::power_law(1.0, 0.5);
  const auto trace = run_kavg(t, plan, Vector{1.0, 1.0, 1.0}, 2);
  std::uint64_t expected = 0;
  double sum = 0.0;
  for (std::size_t n = 1; n <= 12; ++n) {
    expected += 4 * plan.batch.batch(n) * 3;
    EXPECT_EQ(trace.rows[n].samples_processed, expected);
    sum += trace.rows[n - 1].grad_norm_sq;
  }
  EXPECT_DOUBLE_EQ(trace.avg_grad_norm_sq, sum / 12.0);
  EXPECT_EQ(average_grad_norm_sq(trace), trace.avg_grad_norm_sq);
  EXPECT_EQ(trace.final_objective, trace.rows.back().objective);
}

TEST(KAvg, DivergenceIsRecordedNotThrown) {
  const auto q = Objective::quadratic({1.0}, 0.0);
  const auto trace = run_kavg(q, make_plan(2, 1, 5000, 3.0, 1), Vector{1.0}, 1);
  EXPECT_TRUE(trace.diverged);
  EXPECT_TRUE(trace.rows.back().diverged);
  EXPECT_LT(trace.rows.size(), 5001u);
  EXPECT_TRUE(std::isinf(trace.avg_grad_norm_sq));
}

TEST(KAvg, DimensionMismatch) {
  const auto q = Objective::quadratic({1.0, 1.0}, 0.0);
  EXPECT_THROW(run_kavg(q, make_plan(1, 1, 1, 0.1, 1), Vector{1.0}, 1), ContractError);
  EXPECT_THROW(run_sequential_sgd(q, ScheduleSpec::constant(0.1), ScheduleSpec::constant(1), 0, Vector{1.0, 1.0}, 1),
               ContractError);
}

TEST(KAvg, FiniteSumLeavingBoxWarns) {
  const auto fs = Objective::finite_sum({{1.0}, {1.0}}, {{5.0}, {5.0}}, 1.0);
  const auto trace = run_kavg(fs, make_plan(2, 2, 20, 0.2, 1), Vector{0.0}, 1);
  ASSERT_EQ(trace.warnings.size(), 1u);
  EXPECT_NE(trace.warnings[0].find("left certified region"), std::string::npos);
}

// Per-round expected descent, ensemble over 200 seeds:
// E F(w_{n+1}) <= F(w_n) + (L g^2 K M / 2B)(K/P + L(2K-1)(K-1)g/6).
TEST(KAvg, EnsembleDescentUnderAdmissibleStepsize) {
  const auto q = Objective::quadratic({1.0, 0.5, 0.25}, 1.0);
  const double gamma = 0.1;
  const std::size_t K = 4, P = 4, B = 2;
  ASSERT_TRUE(check_fixed_stepsize_conditions(q.lipschitz(), gamma, K, 0.5).admissible);
  const double L = q.lipschitz(), M = q.variance_bound();
  const double slack = L * gamma * gamma * K * M / (2.0 * B) * (double(K) / P + L * (2 * K - 1) * (K - 1) * gamma / 6);
  const std::size_t N = 6, seeds = 200;
  const Vector w1{2.0, -1.0, 3.0};
  std::vector<double> mean(N + 1, 0.0);
  for (std::uint64_t s = 0; s < seeds; ++s) {
    const auto trace = run_kavg(q, make_plan(P, K, N, gamma, B), w1, s);
    for (std::size_t n = 0; n <= N; ++n) mean[n] += trace.rows[n].objective / seeds;
  }
  for (std::size_t n = 0; n < N; ++n) EXPECT_LE(mean[n + 1], mean[n] + slack) << "round " << n;
}
