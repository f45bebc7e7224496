#pragma once

#include <cstddef>
#include <vector>

#include "kavg/error.hpp"
#include "kavg/schedule.hpp"

namespace kavg {

class UnsupportedAsymptotics : public ContractError {
 public:
  using ContractError::ContractError;
};

// Scalars shared by the fixed-stepsize bounds. gap = F(w~_1) - F*.
// S = N*K is only needed by the delay analysis; 0 means "not supplied".
struct BoundInputs {
  double L = 1.0;
  double M = 0.0;
  double gap = 0.0;
  std::size_t K = 1;
  std::size_t P = 1;
  std::size_t B = 1;
  double gamma = 0.1;
  double delta = 0.5;
  std::size_t N = 1;
  std::size_t S = 0;

  void validate() const;
};

struct StepsizeConditions {
  bool admissible = false;
  // 1 - (L^2 g^2 (K+1)(K-2)/2 + L g K), and (1 - delta) - L^2 g^2.
  double delay_slack = 0.0;
  double delta_slack = 0.0;
};

StepsizeConditions check_fixed_stepsize_conditions(double L, double gamma, std::size_t K, double delta);

struct Theorem1Terms {
  double optimization = 0.0;  // 2 gap / (N (K-1+delta) gamma)
  double variance = 0.0;      // L K gamma M / (B (K-1+delta)) * (K/P + L(2K-1)(K-1) gamma / 6)
  double total() const { return optimization + variance; }
};

Theorem1Terms theorem1_terms(const BoundInputs& in);
// Evaluates even when the stepsize conditions fail; callers that care check
// admissibility separately.
double theorem1_bound(const BoundInputs& in);

struct CorollaryStepsize {
  double gamma_star = 0.0;
  double N_min = 0.0;
};

// Throws ContractError when M == 0: a noiseless problem has no finite
// variance-balancing stepsize.
CorollaryStepsize corollary_stepsize(double gap, std::size_t B, std::size_t P, double L, double M, std::size_t K,
                                     std::size_t N);
double corollary_bound(double gap, std::size_t B, std::size_t P, double L, double M, std::size_t K, double delta,
                       std::size_t N);

// Weighted bound for per-round schedules over the first N rounds.
double theorem2_bound(const ScheduleSpec& gamma, const ScheduleSpec& batch, double L, double M, double gap,
                      std::size_t K, std::size_t P, double delta, std::size_t N);

struct ScheduleConditions {
  bool sum_gamma_diverges = false;
  bool sum_gamma2_over_PB_converges = false;
  bool sum_gamma3_converges = false;
  bool valid = false;
  // The classical sum gamma^2 < inf requirement, for comparison.
  bool classical_sum_gamma2_converges = false;
};

// Decided from the asymptotic form of each schedule (power laws, constants,
// geometric step decay). Table schedules throw UnsupportedAsymptotics.
ScheduleConditions check_schedule_conditions(const ScheduleSpec& gamma, const ScheduleSpec& batch, std::size_t K,
                                             std::size_t P);

struct PartialSums {
  std::size_t N = 0;
  double sum_gamma = 0.0;
  double sum_K_gamma2_over_PB = 0.0;
  double sum_gamma3 = 0.0;
  double sum_gamma2 = 0.0;
  bool asymptotics_decidable = false;
};

// Finite partial sums; the only report available for table schedules.
PartialSums schedule_partial_sums(const ScheduleSpec& gamma, const ScheduleSpec& batch, std::size_t K,
                                  std::size_t P, std::size_t N);

double asgd_bound(double C0, double C1, double gap, double gamma, double L, double M, std::size_t P, std::size_t B,
                  std::size_t N);
// The P-dependent part, C1 L^2 gamma^2 M^2 P / (2B).
double asgd_variance_term(double C1, double gamma, double L, double M, std::size_t P, std::size_t B);

struct ScalabilityRow {
  std::size_t P = 1;
  double kavg_bound = 0.0;
  double asgd_bound = 0.0;
  double kavg_variance_term = 0.0;
  double asgd_variance_term = 0.0;
};

struct ScalabilityTable {
  std::vector<ScalabilityRow> rows;  // ascending P
  bool kavg_nonincreasing = false;
  bool asgd_term_linear = false;
};

ScalabilityTable scalability_table(const BoundInputs& in, double C0, double C1, std::vector<std::size_t> P_values);

// B(K) = (alpha + beta K + eta (2K-1)(K-1)) * K / (K-1+delta).
double bk_value(std::size_t K, double alpha, double beta, double eta, double delta);

struct DelayCoefficients {
  double alpha = 0.0;  // 2 gap / (S gamma)
  double beta = 0.0;   // L gamma M / (P B)
  double eta = 0.0;    // L^2 gamma^2 M / (6 B)
};

DelayCoefficients alpha_beta_eta(double gap, std::size_t S, double gamma, double L, double M, std::size_t P,
                                 std::size_t B);

struct OptimalDelay {
  std::size_t K_star = 1;
  std::vector<double> values;  // values[K-1] = B(K), K = 1..K_max
  bool tie = false;            // another K attains the minimum within 1e-12 relative
};

// Exhaustive search over K = 1..K_max; ties go to the smaller K.
OptimalDelay optimal_k(double alpha, double beta, double eta, double delta, std::size_t K_max);

struct DelayCondition {
  double lhs = 0.0;  // (1 - delta) gap / (S gamma delta)
  // (3 delta - 1) L gamma M / (2 delta P B) + L^2 gamma^2 M / (2 B); exactly B(2) < B(1).
  double rhs = 0.0;
  // Same with the last term over 3B, as the condition is usually quoted.
  double rhs_quoted = 0.0;
  bool holds = false;
  bool holds_quoted = false;
  // The (3 delta - 1) factor turns negative below delta = 1/3.
  bool delta_below_third = false;
};

DelayCondition delay_condition(double gap, std::size_t S, double gamma, double delta, double L, double M,
                               std::size_t P, std::size_t B);
// Sufficient condition for the optimal averaging delay to exceed 1.
bool check_kopt_gt1(double gap, std::size_t S, double gamma, double delta, double L, double M, std::size_t P,
                    std::size_t B);

}  // namespace kavg
