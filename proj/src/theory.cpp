#include "kavg/theory.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace kavg {
namespace {

void require_delta(double delta) { require(delta > 0.0 && delta < 1.0, "delta must lie in (0, 1)"); }

void require_positive(double v, const char* name) {
  require(v > 0.0 && std::isfinite(v), std::string(name) + " must be positive");
}

void require_nonnegative(double v, const char* name) {
  require(v >= 0.0 && std::isfinite(v), std::string(name) + " must be nonnegative");
}

// Neumaier-compensated running sum.
class Sum {
 public:
  void add(double x) {
    const double t = sum_ + x;
    comp_ += std::abs(sum_) >= std::abs(x) ? (sum_ - t) + x : (x - t) + sum_;
    sum_ = t;
  }
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

// A sequence behaving like ratio^j * j^exponent.
struct Growth {
  double ratio = 1.0;
  double exponent = 0.0;

  bool summable() const { return ratio < 1.0 || (ratio == 1.0 && exponent < -1.0); }
};

Growth growth_of(const ScheduleSpec& s, bool as_batch) {
  struct Visitor {
    bool as_batch;
    Growth operator()(const ConstantSchedule&) const { return {}; }
    Growth operator()(const PowerLawSchedule& p) const {
      // ceil(c j^q) tends to 1 when q <= 0
      return as_batch ? Growth{1.0, std::max(p.exponent, 0.0)} : Growth{1.0, -p.exponent};
    }
    Growth operator()(const TableSchedule&) const {
      throw UnsupportedAsymptotics("asymptotic behaviour of a table schedule cannot be decided");
    }
    Growth operator()(const StepDecaySchedule& s) const {
      return {std::pow(s.factor, 1.0 / static_cast<double>(s.period)), 0.0};
    }
  };
  return std::visit(Visitor{as_batch}, s.kind());
}

}  // namespace

void BoundInputs::validate() const {
  require_positive(L, "L");
  require_nonnegative(M, "M");
  require_nonnegative(gap, "gap");
  require(K >= 1 && P >= 1 && B >= 1 && N >= 1, "K, P, B and N must be >= 1");
  require_positive(gamma, "gamma");
  require_delta(delta);
  if (S != 0) require(S == N * K, "S must equal N * K");
}

StepsizeConditions check_fixed_stepsize_conditions(double L, double gamma, std::size_t K, double delta) {
  require_positive(L, "L");
  require_nonnegative(gamma, "gamma");
  require(K >= 1, "K must be >= 1");
  require_delta(delta);
  const double k = static_cast<double>(K);
  const double lg = L * gamma;
  const double lhs = lg * lg * (k + 1.0) * (k - 2.0) / 2.0 + lg * k;
  StepsizeConditions out;
  out.delay_slack = 1.0 - lhs;
  out.delta_slack = (1.0 - delta) - lg * lg;
  out.admissible = out.delay_slack >= 0.0 && out.delta_slack >= 0.0;
  return out;
}

Theorem1Terms theorem1_terms(const BoundInputs& in) {
  in.validate();
  const double k = static_cast<double>(in.K);
  const double denom = k - 1.0 + in.delta;
  Theorem1Terms t;
  t.optimization = 2.0 * in.gap / (static_cast<double>(in.N) * denom * in.gamma);
  t.variance = in.L * k * in.gamma * in.M / (static_cast<double>(in.B) * denom) *
               (k / static_cast<double>(in.P) + in.L * (2.0 * k - 1.0) * (k - 1.0) * in.gamma / 6.0);
  return t;
}

double theorem1_bound(const BoundInputs& in) { return theorem1_terms(in).total(); }

CorollaryStepsize corollary_stepsize(double gap, std::size_t B, std::size_t P, double L, double M, std::size_t K,
                                     std::size_t N) {
  require_positive(gap, "gap");
  require_positive(L, "L");
  require_nonnegative(M, "M");
  require(M > 0.0, "M = 0: noiseless problems have no variance-balancing stepsize");
  require(B >= 1 && P >= 1 && K >= 1 && N >= 1, "B, P, K and N must be >= 1");
  const double b = static_cast<double>(B), p = static_cast<double>(P), k = static_cast<double>(K);
  CorollaryStepsize out;
  out.gamma_star = std::sqrt(gap * b * p / (L * M * k * k * static_cast<double>(N)));
  out.N_min = (gap * L * b * p / M) * std::max(p * p / (k * k), 1.0);
  return out;
}

double corollary_bound(double gap, std::size_t B, std::size_t P, double L, double M, std::size_t K, double delta,
                       std::size_t N) {
  require_nonnegative(gap, "gap");
  require_positive(L, "L");
  require_nonnegative(M, "M");
  require(B >= 1 && P >= 1 && K >= 1 && N >= 1, "B, P, K and N must be >= 1");
  require_delta(delta);
  const double k = static_cast<double>(K);
  return (4.0 * k / (k - 1.0 + delta)) *
         std::sqrt(gap * L * M / (static_cast<double>(B) * static_cast<double>(P))) /
         std::sqrt(static_cast<double>(N));
}

double theorem2_bound(const ScheduleSpec& gamma, const ScheduleSpec& batch, double L, double M, double gap,
                      std::size_t K, std::size_t P, double delta, std::size_t N) {
  require_positive(L, "L");
  require_nonnegative(M, "M");
  require_nonnegative(gap, "gap");
  require(K >= 1 && P >= 1 && N >= 1, "K, P and N must be >= 1");
  require_delta(delta);
  gamma.validate_stepsize();
  batch.validate_batch();
  const double k = static_cast<double>(K);
  const double p = static_cast<double>(P);
  Sum sum_gamma, weighted;
  for (std::size_t j = 1; j <= N; ++j) {
    const double g = gamma.stepsize(j);
    const double b = static_cast<double>(batch.batch(j));
    sum_gamma.add(g);
    weighted.add(g * g / b * (k / p + L * (2.0 * k - 1.0) * (k - 1.0) * g / 6.0));
  }
  const double denom = (k - 1.0 + delta) * sum_gamma.value();
  return 2.0 * gap / denom + L * k * M * weighted.value() / denom;
}

ScheduleConditions check_schedule_conditions(const ScheduleSpec& gamma, const ScheduleSpec& batch, std::size_t K,
                                             std::size_t P) {
  require(K >= 1 && P >= 1, "K and P must be >= 1");
  gamma.validate_stepsize();
  batch.validate_batch();
  const Growth g = growth_of(gamma, false);
  const Growth b = growth_of(batch, true);
  // K/P is a constant factor and does not affect convergence.
  ScheduleConditions out;
  out.sum_gamma_diverges = !g.summable();
  out.sum_gamma2_over_PB_converges = Growth{g.ratio * g.ratio / b.ratio, 2.0 * g.exponent - b.exponent}.summable();
  out.sum_gamma3_converges = Growth{g.ratio * g.ratio * g.ratio, 3.0 * g.exponent}.summable();
  out.classical_sum_gamma2_converges = Growth{g.ratio * g.ratio, 2.0 * g.exponent}.summable();
  out.valid = out.sum_gamma_diverges && out.sum_gamma2_over_PB_converges && out.sum_gamma3_converges;
  return out;
}

PartialSums schedule_partial_sums(const ScheduleSpec& gamma, const ScheduleSpec& batch, std::size_t K,
                                  std::size_t P, std::size_t N) {
  require(K >= 1 && P >= 1 && N >= 1, "K, P and N must be >= 1");
  gamma.validate_stepsize();
  batch.validate_batch();
  Sum s1, s2b, s3, s2;
  const double kp = static_cast<double>(K) / static_cast<double>(P);
  for (std::size_t j = 1; j <= N; ++j) {
    const double g = gamma.stepsize(j);
    s1.add(g);
    s2b.add(kp * g * g / static_cast<double>(batch.batch(j)));
    s3.add(g * g * g);
    s2.add(g * g);
  }
  PartialSums out;
  out.N = N;
  out.sum_gamma = s1.value();
  out.sum_K_gamma2_over_PB = s2b.value();
  out.sum_gamma3 = s3.value();
  out.sum_gamma2 = s2.value();
  out.asymptotics_decidable = !gamma.is_table() && !batch.is_table();
  return out;
}

double asgd_variance_term(double C1, double gamma, double L, double M, std::size_t P, std::size_t B) {
  return C1 * L * L * gamma * gamma * M * M * static_cast<double>(P) / (2.0 * static_cast<double>(B));
}

double asgd_bound(double C0, double C1, double gap, double gamma, double L, double M, std::size_t P, std::size_t B,
                  std::size_t N) {
  require_positive(C0, "C0");
  require_positive(C1, "C1");
  require_nonnegative(gap, "gap");
  require_positive(gamma, "gamma");
  require_positive(L, "L");
  require_nonnegative(M, "M");
  require(P >= 1 && B >= 1 && N >= 1, "P, B and N must be >= 1");
  return C0 * gap / (static_cast<double>(N) * gamma) + asgd_variance_term(C1, gamma, L, M, P, B);
}

ScalabilityTable scalability_table(const BoundInputs& in, double C0, double C1, std::vector<std::size_t> P_values) {
  require(!P_values.empty(), "P_values must be nonempty");
  std::sort(P_values.begin(), P_values.end());
  ScalabilityTable table;
  for (std::size_t P : P_values) {
    BoundInputs at = in;
    at.P = P;
    const Theorem1Terms t = theorem1_terms(at);
    ScalabilityRow row;
    row.P = P;
    row.kavg_bound = t.total();
    row.kavg_variance_term = t.variance;
    row.asgd_bound = asgd_bound(C0, C1, in.gap, in.gamma, in.L, in.M, P, in.B, in.N);
    row.asgd_variance_term = asgd_variance_term(C1, in.gamma, in.L, in.M, P, in.B);
    table.rows.push_back(row);
  }
  table.kavg_nonincreasing = true;
  table.asgd_term_linear = true;
  const auto& first = table.rows.front();
  const double slope = first.asgd_variance_term / static_cast<double>(first.P);
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    const auto& r = table.rows[i];
    if (i > 0 && r.kavg_bound > table.rows[i - 1].kavg_bound) table.kavg_nonincreasing = false;
    const double expected = slope * static_cast<double>(r.P);
    if (std::abs(r.asgd_variance_term - expected) > 1e-12 * std::max(1.0, std::abs(expected))) {
      table.asgd_term_linear = false;
    }
  }
  return table;
}

double bk_value(std::size_t K, double alpha, double beta, double eta, double delta) {
  require(K >= 1, "K must be >= 1");
  require_nonnegative(alpha, "alpha");
  require_nonnegative(beta, "beta");
  require_nonnegative(eta, "eta");
  require_delta(delta);
  const double k = static_cast<double>(K);
  return (alpha + beta * k + eta * (2.0 * k - 1.0) * (k - 1.0)) * (k / (k - 1.0 + delta));
}

DelayCoefficients alpha_beta_eta(double gap, std::size_t S, double gamma, double L, double M, std::size_t P,
                                 std::size_t B) {
  require_nonnegative(gap, "gap");
  require(S >= 1 && P >= 1 && B >= 1, "S, P and B must be >= 1");
  require_positive(gamma, "gamma");
  require_positive(L, "L");
  require_nonnegative(M, "M");
  const double b = static_cast<double>(B);
  DelayCoefficients c;
  c.alpha = 2.0 * gap / (static_cast<double>(S) * gamma);
  c.beta = L * gamma * M / (static_cast<double>(P) * b);
  c.eta = L * L * gamma * gamma * M / (6.0 * b);
  return c;
}

OptimalDelay optimal_k(double alpha, double beta, double eta, double delta, std::size_t K_max) {
  require(K_max >= 1, "K_max must be >= 1");
  OptimalDelay out;
  out.values.reserve(K_max);
  for (std::size_t K = 1; K <= K_max; ++K) {
    const double v = bk_value(K, alpha, beta, eta, delta);
    out.values.push_back(v);
    if (v < out.values[out.K_star - 1]) out.K_star = K;
  }
  const double best = out.values[out.K_star - 1];
  for (std::size_t K = 1; K <= K_max; ++K) {
    if (K != out.K_star && std::abs(out.values[K - 1] - best) <= 1e-12 * std::abs(best)) out.tie = true;
  }
  return out;
}

DelayCondition delay_condition(double gap, std::size_t S, double gamma, double delta, double L, double M,
                               std::size_t P, std::size_t B) {
  require_nonnegative(gap, "gap");
  require(S >= 1 && P >= 1 && B >= 1, "S, P and B must be >= 1");
  require_positive(gamma, "gamma");
  require_delta(delta);
  require_positive(L, "L");
  require_nonnegative(M, "M");
  const double b = static_cast<double>(B);
  DelayCondition c;
  c.lhs = (1.0 - delta) * gap / (static_cast<double>(S) * gamma * delta);
  const double beta_part = (3.0 * delta - 1.0) * L * gamma * M / (2.0 * delta * static_cast<double>(P) * b);
  c.rhs = beta_part + L * L * gamma * gamma * M / (2.0 * b);
  c.rhs_quoted = beta_part + L * L * gamma * gamma * M / (3.0 * b);
  c.holds = c.lhs > c.rhs;
  c.holds_quoted = c.lhs > c.rhs_quoted;
  c.delta_below_third = delta < 1.0 / 3.0;
  return c;
}

bool check_kopt_gt1(double gap, std::size_t S, double gamma, double delta, double L, double M, std::size_t P,
                    std::size_t B) {
  return delay_condition(gap, S, gamma, delta, L, M, P, B).holds;
}

}  // namespace kavg
