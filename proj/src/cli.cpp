#include "kavg/cli.hpp"

#include <algorithm>
#include <optional>

#include "CLI11.hpp"
#include "kavg/config.hpp"
#include "kavg/error.hpp"
#include "kavg/format.hpp"
#include "kavg/harness.hpp"
#include "kavg/theory.hpp"

namespace kavg {
namespace {

template <class T>
T need(const std::optional<T>& v, const std::string& flag) {
  if (!v) throw ConfigError("missing required flag --" + flag);
  return *v;
}

void kv(std::ostream& out, const std::string& key, double v) { out << key << '=' << format_double(v) << '\n'; }
void kv(std::ostream& out, const std::string& key, bool v) { out << key << '=' << (v ? "true" : "false") << '\n'; }
void kv(std::ostream& out, const std::string& key, std::size_t v) { out << key << '=' << v << '\n'; }

struct BoundFlags {
  std::string formula;
  std::optional<double> gap, L, M, gamma, delta, alpha, beta, eta;
  std::optional<std::size_t> N, K, P, B, S;
  double C0 = 1.0, C1 = 1.0;
  std::optional<std::string> gamma_schedule, batch_schedule;
  std::vector<std::size_t> P_values;
};

void run_bound(const BoundFlags& f, std::ostream& out) {
  const std::string& name = f.formula;
  if (name == "theorem1") {
    BoundInputs in{need(f.L, "L"),     need(f.M, "M"),         need(f.gap, "gap"), need(f.K, "K"),
                   need(f.P, "P"),     need(f.B, "B"),         need(f.gamma, "gamma"), need(f.delta, "delta"),
                   need(f.N, "N"),     f.S.value_or(0)};
    const auto terms = theorem1_terms(in);
    const auto cond = check_fixed_stepsize_conditions(in.L, in.gamma, in.K, in.delta);
    kv(out, "bound", terms.total());
    kv(out, "optimization_term", terms.optimization);
    kv(out, "variance_term", terms.variance);
    kv(out, "admissible", cond.admissible);
    if (!cond.admissible) out << "warning=stepsize conditions not satisfied; bound evaluated anyway\n";
  } else if (name == "stepsize-conditions") {
    const auto c = check_fixed_stepsize_conditions(need(f.L, "L"), need(f.gamma, "gamma"), need(f.K, "K"),
                                                   need(f.delta, "delta"));
    kv(out, "admissible", c.admissible);
    kv(out, "delay_slack", c.delay_slack);
    kv(out, "delta_slack", c.delta_slack);
  } else if (name == "corollary-stepsize") {
    const auto c = corollary_stepsize(need(f.gap, "gap"), need(f.B, "B"), need(f.P, "P"), need(f.L, "L"),
                                      need(f.M, "M"), need(f.K, "K"), need(f.N, "N"));
    kv(out, "gamma_star", c.gamma_star);
    kv(out, "N_min", c.N_min);
  } else if (name == "corollary-bound") {
    kv(out, "bound",
       corollary_bound(need(f.gap, "gap"), need(f.B, "B"), need(f.P, "P"), need(f.L, "L"), need(f.M, "M"),
                       need(f.K, "K"), need(f.delta, "delta"), need(f.N, "N")));
  } else if (name == "theorem2") {
    const auto g = ScheduleSpec::parse(need(f.gamma_schedule, "gamma-schedule"));
    const auto b = ScheduleSpec::parse(f.batch_schedule.value_or("const:1"));
    kv(out, "bound",
       theorem2_bound(g, b, need(f.L, "L"), need(f.M, "M"), need(f.gap, "gap"), need(f.K, "K"), need(f.P, "P"),
                      need(f.delta, "delta"), need(f.N, "N")));
  } else if (name == "asgd") {
    kv(out, "bound",
       asgd_bound(f.C0, f.C1, need(f.gap, "gap"), need(f.gamma, "gamma"), need(f.L, "L"), need(f.M, "M"),
                  need(f.P, "P"), need(f.B, "B"), need(f.N, "N")));
  } else if (name == "scalability") {
    BoundInputs in{need(f.L, "L"), need(f.M, "M"),         need(f.gap, "gap"), need(f.K, "K"),
                   1,              need(f.B, "B"),         need(f.gamma, "gamma"), need(f.delta, "delta"),
                   need(f.N, "N"), 0};
    if (f.P_values.empty()) throw ConfigError("missing required flag --P-values");
    const auto t = scalability_table(in, f.C0, f.C1, f.P_values);
    out << "P,kavg_bound,asgd_bound,kavg_variance_term,asgd_variance_term\n";
    for (const auto& r : t.rows) {
      out << r.P << ',' << format_double(r.kavg_bound) << ',' << format_double(r.asgd_bound) << ','
          << format_double(r.kavg_variance_term) << ',' << format_double(r.asgd_variance_term) << '\n';
    }
    kv(out, "kavg_nonincreasing", t.kavg_nonincreasing);
    kv(out, "asgd_term_linear", t.asgd_term_linear);
  } else if (name == "bk") {
    kv(out, "value",
       bk_value(need(f.K, "K"), need(f.alpha, "alpha"), need(f.beta, "beta"), need(f.eta, "eta"),
                need(f.delta, "delta")));
  } else if (name == "alpha-beta-eta") {
    const auto c = alpha_beta_eta(need(f.gap, "gap"), need(f.S, "S"), need(f.gamma, "gamma"), need(f.L, "L"),
                                  need(f.M, "M"), need(f.P, "P"), need(f.B, "B"));
    kv(out, "alpha", c.alpha);
    kv(out, "beta", c.beta);
    kv(out, "eta", c.eta);
  } else if (name == "kopt") {
    const auto c = delay_condition(need(f.gap, "gap"), need(f.S, "S"), need(f.gamma, "gamma"), need(f.delta, "delta"),
                                   need(f.L, "L"), need(f.M, "M"), need(f.P, "P"), need(f.B, "B"));
    kv(out, "kopt_gt1", c.holds);
    kv(out, "lhs", c.lhs);
    kv(out, "rhs", c.rhs);
    kv(out, "rhs_quoted", c.rhs_quoted);
    kv(out, "kopt_gt1_quoted", c.holds_quoted);
    if (c.delta_below_third) out << "warning=delta < 1/3 makes the (3 delta - 1) term negative\n";
  } else {
    throw ConfigError("unknown bound formula '" + name +
                      "' (theorem1, stepsize-conditions, corollary-stepsize, corollary-bound, theorem2, asgd, "
                      "scalability, bk, alpha-beta-eta, kopt)");
  }
}

void print_optimal_k(double alpha, double beta, double eta, double delta, std::size_t kmax, std::ostream& out) {
  const auto r = optimal_k(alpha, beta, eta, delta, kmax);
  kv(out, "K_star", r.K_star);
  kv(out, "tie", r.tie);
  out << "K,BK\n";
  for (std::size_t k = 1; k <= r.values.size(); ++k) out << k << ',' << format_double(r.values[k - 1]) << '\n';
}

void print_schedule_check(const std::string& gamma_text, const std::string& batch_text, std::size_t K,
                          std::size_t P, std::size_t N, std::ostream& out) {
  const auto g = ScheduleSpec::parse(gamma_text);
  const auto b = ScheduleSpec::parse(batch_text);
  if (g.is_table() || b.is_table()) {
    out << "asymptotics=undecidable\n";
  } else {
    const auto c = check_schedule_conditions(g, b, K, P);
    kv(out, "sum_gamma_diverges", c.sum_gamma_diverges);
    kv(out, "sum_gamma2_over_PB_converges", c.sum_gamma2_over_PB_converges);
    kv(out, "sum_gamma3_converges", c.sum_gamma3_converges);
    kv(out, "valid", c.valid);
    kv(out, "classical_sum_gamma2_converges", c.classical_sum_gamma2_converges);
    if (const auto* s = std::get_if<StepDecaySchedule>(&g.kind()); s && s->factor < 1.0) {
      out << "warning=geometric step decay has a finite stepsize sum\n";
    }
  }
  std::size_t n = N;
  if (g.is_table()) n = std::min(n, g.length());
  if (b.is_table()) n = std::min(n, b.length());
  const auto ps = schedule_partial_sums(g, b, K, P, n);
  kv(out, "partial_N", ps.N);
  kv(out, "partial_sum_gamma", ps.sum_gamma);
  kv(out, "partial_sum_K_gamma2_over_PB", ps.sum_K_gamma2_over_PB);
  kv(out, "partial_sum_gamma3", ps.sum_gamma3);
  kv(out, "partial_sum_gamma2", ps.sum_gamma2);
}

void print_sweep(const SweepResult& r, std::ostream& out) { write_aggregate_csv(out, r); }

}  // namespace

int cli_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"K-step averaging SGD simulator and convergence-bound calculator", "kavg"};
  app.require_subcommand(1);
  app.fallthrough();

  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir;
  unsigned threads = 1;
  app.add_option("--seed", seed, "Base seed (overrides the config's seed list base)");
  app.add_option("--out", out_dir, "Output directory (overrides the config)");
  app.add_option("--threads", threads, "Worker threads")->check(CLI::PositiveNumber);

  std::string config_path;
  auto* run = app.add_subcommand("run", "Run a single-point experiment config");
  run->add_option("config", config_path, "JSON config")->required();
  auto* sweep = app.add_subcommand("sweep", "Run every grid point of an experiment config");
  sweep->add_option("config", config_path, "JSON config")->required();

  BoundFlags bf;
  auto* bound = app.add_subcommand("bound", "Evaluate a convergence bound or condition");
  bound->add_option("formula", bf.formula, "Which formula")->required();
  bound->add_option("--gap", bf.gap, "F(w1) - F*");
  bound->add_option("--L", bf.L);
  bound->add_option("--M", bf.M);
  bound->add_option("--gamma", bf.gamma);
  bound->add_option("--delta", bf.delta);
  bound->add_option("--N", bf.N);
  bound->add_option("--K", bf.K);
  bound->add_option("--P", bf.P);
  bound->add_option("--B", bf.B);
  bound->add_option("--S", bf.S);
  bound->add_option("--C0", bf.C0);
  bound->add_option("--C1", bf.C1);
  bound->add_option("--alpha", bf.alpha);
  bound->add_option("--beta", bf.beta);
  bound->add_option("--eta", bf.eta);
  bound->add_option("--gamma-schedule", bf.gamma_schedule);
  bound->add_option("--batch-schedule", bf.batch_schedule);
  bound->add_option("--P-values", bf.P_values)->delimiter(',');

  std::string gamma_text, batch_text = "const:1";
  std::size_t sched_K = 1, sched_P = 1, sched_N = 1000;
  auto* check = app.add_subcommand("check-schedule", "Test the stepsize/batch summability conditions");
  check->add_option("--gamma", gamma_text, "Stepsize schedule, e.g. power:1:1")->required();
  check->add_option("--batch", batch_text, "Batch schedule, e.g. power:1:0.3");
  check->add_option("--K", sched_K);
  check->add_option("--P", sched_P);
  check->add_option("--N", sched_N, "Terms in the reported partial sums");

  double alpha = 0, beta = 0, eta = 0, delta = 0.5;
  std::size_t kmax = 64;
  auto* optk = app.add_subcommand("optimal-k", "Minimise B(K) over K = 1..kmax");
  optk->add_option("--alpha", alpha)->required();
  optk->add_option("--beta", beta)->required();
  optk->add_option("--eta", eta)->required();
  optk->add_option("--delta", delta)->required();
  optk->add_option("--kmax", kmax);

  std::string oracle_config, kind = "trig";
  std::size_t dim = 10, trials = 10000;
  double amplitude = 2.0, noise = 1.0, box_radius = 3.0;
  std::vector<double> eigenvalues;
  auto* cert = app.add_subcommand("certify-oracle", "Empirically check an oracle's certified constants");
  cert->add_option("config", oracle_config, "Experiment config whose oracle to certify");
  cert->add_option("--kind", kind, "quadratic | trig");
  cert->add_option("--dim", dim);
  cert->add_option("--amplitude", amplitude);
  cert->add_option("--noise", noise);
  cert->add_option("--eigenvalues", eigenvalues)->delimiter(',');
  cert->add_option("--trials", trials);
  cert->add_option("--box-radius", box_radius);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return kExitConfig;
  }

  try {
    if (run->parsed() || sweep->parsed()) {
      ExperimentConfig cfg = load_config(config_path);
      if (seed) {
        for (std::size_t i = 0; i < cfg.seeds.size(); ++i) cfg.seeds[i] = *seed + i;
      }
      if (out_dir) cfg.output_dir = *out_dir;
      if (run->parsed() && expand_grid(cfg).size() != 1) {
        throw ConfigError("`run` expects exactly one grid point; use `sweep` for grids");
      }
      for (const auto& g : cfg.gamma) {
        if (const auto* s = std::get_if<StepDecaySchedule>(&g.kind()); s && s->factor < 1.0) {
          err << "warning: " << g.describe() << " has a finite stepsize sum, outside the diminishing-stepsize theory\n";
        }
      }
      const auto result = run_experiment(cfg, threads);
      if (!verify_aggregates(result)) {
        err << "internal error: aggregates do not match raw runs\n";
        return kExitInternal;
      }
      print_sweep(result, out);
    } else if (bound->parsed()) {
      run_bound(bf, out);
    } else if (check->parsed()) {
      print_schedule_check(gamma_text, batch_text, sched_K, sched_P, sched_N, out);
    } else if (optk->parsed()) {
      print_optimal_k(alpha, beta, eta, delta, kmax, out);
    } else if (cert->parsed()) {
      Objective oracle = Objective::trig_nonconvex(1, 1.0, 0.0);
      if (!oracle_config.empty()) {
        oracle = load_config(oracle_config).oracle;
      } else if (kind == "trig") {
        oracle = Objective::trig_nonconvex(dim, amplitude, noise);
      } else if (kind == "quadratic") {
        if (eigenvalues.empty()) eigenvalues.assign(dim, 1.0);
        oracle = Objective::quadratic(eigenvalues, noise);
      } else {
        throw ConfigError("unknown oracle kind '" + kind + "'");
      }
      const auto r = certify_constants(oracle, trials, box_radius, seed.value_or(1));
      kv(out, "L", oracle.lipschitz());
      kv(out, "M", oracle.variance_bound());
      kv(out, "F_star", oracle.lower_bound());
      kv(out, "max_lipschitz_ratio", r.max_lipschitz_ratio);
      kv(out, "lipschitz_violation", r.lipschitz_violation);
      kv(out, "max_noise_second_moment", r.max_noise_second_moment);
      kv(out, "variance_tolerance", r.variance_tolerance);
      kv(out, "variance_violation", r.variance_violation);
    }
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const ContractError& e) {
    err << "invalid input: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << '\n';
    return kExitInternal;
  }
  return kExitOk;
}

}  // namespace kavg
