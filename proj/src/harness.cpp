#include "kavg/harness.hpp"

#include <atomic>
#include <cmath>
#include <exception>
#include <filesystem>
#include <fstream>
#include <limits>
#include <mutex>
#include <thread>

#include "kavg/engine.hpp"
#include "kavg/error.hpp"
#include "kavg/format.hpp"
#include "kavg/theory.hpp"

namespace kavg {
namespace {

std::string batch_label(const ScheduleSpec& b) {
  return b.is_constant() ? std::to_string(b.batch(1)) : b.describe();
}

struct MeanStderr {
  double mean = 0.0;
  double std_error = 0.0;
};

MeanStderr mean_stderr(const std::vector<double>& xs) {
  if (xs.empty()) return {std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity()};
  double sum = 0.0;
  for (double x : xs) sum += x;
  const double n = static_cast<double>(xs.size());
  const double mean = sum / n;
  if (xs.size() < 2) return {mean, 0.0};
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  return {mean, std::sqrt(ss / (n - 1.0) / n)};
}

bool same(double a, double b) { return (std::isnan(a) && std::isnan(b)) || a == b; }

}  // namespace

std::vector<GridPoint> expand_grid(const ExperimentConfig& config) {
  config.validate();
  std::vector<GridPoint> points;
  std::vector<std::size_t> Ns = config.N;
  for (Algorithm a : config.algorithms) {
    for (std::size_t K : config.K) {
      for (std::size_t P : config.P) {
        for (const auto& B : config.batch) {
          for (const auto& g : config.gamma) {
            std::vector<std::size_t> rounds;
            if (config.budget_S) {
              rounds = {*config.budget_S / K};
            } else if (config.epochs && config.pseudo_epoch_samples) {
              const double per_round = static_cast<double>(K * B.batch(1) * P);
              rounds = {static_cast<std::size_t>(
                  std::ceil(*config.epochs * static_cast<double>(*config.pseudo_epoch_samples) / per_round))};
            } else {
              rounds = Ns;
            }
            for (std::size_t N : rounds) {
              GridPoint gp;
              gp.config_id = points.size();
              gp.algorithm = a;
              gp.K = K;
              gp.P = P;
              gp.batch = B;
              gp.gamma = g;
              gp.N = std::max<std::size_t>(N, 1);
              points.push_back(gp);
            }
          }
        }
      }
    }
  }
  return points;
}

RunTrace run_point(const ExperimentConfig& config, const GridPoint& point, std::uint64_t seed) {
  SyncPlan plan;
  plan.learners = point.P;
  plan.delay = point.K;
  plan.rounds = point.N;
  plan.stepsize = point.gamma;
  plan.batch = point.batch;
  plan.delta = config.delta;
  const Vector w1 = config.initial_point();
  RunOptions options;
  options.record_params = false;
  switch (point.algorithm) {
    case Algorithm::KAvg:
      return run_kavg(config.oracle, plan, w1, seed, options);
    case Algorithm::Sgd:
      return run_sequential_sgd(config.oracle, point.gamma, point.batch, point.N * point.K, w1, seed, options);
    case Algorithm::Downpour:
      return run_downpour(config.oracle, plan, config.staleness, w1, seed, options);
    case Algorithm::Elastic: {
      ElasticParams e = config.elastic;
      if (e.comm_period == 0) e.comm_period = point.K;
      return run_elastic(config.oracle, plan, e, w1, seed, options);
    }
  }
  throw ContractError("unknown algorithm");
}

BoundRow bound_for(const ExperimentConfig& config, const GridPoint& point) {
  BoundRow row;
  row.config_id = point.config_id;
  row.L = config.oracle.lipschitz();
  row.M = config.oracle.variance_bound();
  row.gap = std::max(0.0, config.oracle.value(config.initial_point()) - config.oracle.lower_bound());
  row.formula = "none";

  const bool constant = point.gamma.is_constant() && point.batch.is_constant();
  std::size_t K = point.K, P = point.P, N = point.N;
  if (point.algorithm == Algorithm::Sgd) {
    N = point.N * point.K;
    K = 1;
    P = 1;
  }
  switch (point.algorithm) {
    case Algorithm::KAvg:
    case Algorithm::Sgd:
      if (constant) {
        BoundInputs in{row.L, row.M, row.gap, K, P, point.batch.batch(1), point.gamma.stepsize(1), config.delta, N, 0};
        row.formula = "theorem1";
        row.admissible = check_fixed_stepsize_conditions(row.L, in.gamma, K, config.delta).admissible;
        row.value = theorem1_bound(in);
      } else {
        row.formula = "theorem2";
        row.admissible = true;
        for (std::size_t j = 1; j <= N && row.admissible; ++j) {
          row.admissible = check_fixed_stepsize_conditions(row.L, point.gamma.stepsize(j), K, config.delta).admissible;
        }
        row.value = theorem2_bound(point.gamma, point.batch, row.L, row.M, row.gap, K, P, config.delta, N);
      }
      break;
    case Algorithm::Downpour:
      if (constant) {
        row.formula = "asgd";
        row.admissible = true;
        row.value = asgd_bound(config.C0, config.C1, row.gap, point.gamma.stepsize(1), row.L, row.M, P,
                               point.batch.batch(1), N * K * P);
      }
      break;
    case Algorithm::Elastic:
      break;
  }
  return row;
}

SweepResult run_sweep(const ExperimentConfig& config, unsigned threads) {
  SweepResult result;
  result.points = expand_grid(config);
  const std::size_t n_seeds = config.seeds.size();
  const std::size_t total = result.points.size() * n_seeds;
  result.runs.resize(total);

  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (std::size_t i = next++; i < total; i = next++) {
      try {
        const GridPoint& gp = result.points[i / n_seeds];
        const std::uint64_t seed = config.seeds[i % n_seeds];
        RunRecord rec;
        rec.config_id = gp.config_id;
        rec.seed = seed;
        rec.trace = run_point(config, gp, seed);
        rec.avg_grad_norm_sq = rec.trace.avg_grad_norm_sq;
        rec.final_grad_norm_sq = rec.trace.final_grad_norm_sq();
        rec.final_objective = rec.trace.final_objective;
        rec.diverged = rec.trace.diverged;
        rec.samples_processed = rec.trace.rows.back().samples_processed;
        result.runs[i] = std::move(rec);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next = total;
      }
    }
  };
  const unsigned n_workers = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(std::max<std::size_t>(total, 1))));
  if (n_workers == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < n_workers; ++t) pool.emplace_back(worker);
  }
  if (failure) std::rethrow_exception(failure);

  if (config.bound_overlay) {
    for (const auto& gp : result.points) result.bounds.push_back(bound_for(config, gp));
  }
  result.aggregates = aggregate(result);
  return result;
}

std::vector<AggregateRow> aggregate(const SweepResult& result) {
  std::vector<AggregateRow> rows;
  for (const auto& gp : result.points) {
    AggregateRow row;
    row.config_id = gp.config_id;
    std::vector<double> finals, avgs;
    std::size_t diverged = 0;
    for (const auto& r : result.runs) {
      if (r.config_id != gp.config_id) continue;
      ++row.n_seeds;
      if (r.diverged) {
        ++diverged;
        continue;
      }
      finals.push_back(r.final_grad_norm_sq);
      avgs.push_back(r.avg_grad_norm_sq);
    }
    const auto f = mean_stderr(finals);
    const auto a = mean_stderr(avgs);
    row.mean_final_grad_norm_sq = f.mean;
    row.stderr_final = f.std_error;
    row.mean_avg_grad_norm_sq = a.mean;
    row.stderr_avg = a.std_error;
    row.divergence_fraction = row.n_seeds ? static_cast<double>(diverged) / static_cast<double>(row.n_seeds) : 0.0;
    for (const auto& b : result.bounds) {
      if (b.config_id == gp.config_id) row.bound_value = b.value;
    }
    rows.push_back(row);
  }
  return rows;
}

bool verify_aggregates(const SweepResult& result) {
  const auto fresh = aggregate(result);
  if (fresh.size() != result.aggregates.size()) return false;
  for (std::size_t i = 0; i < fresh.size(); ++i) {
    const auto& a = fresh[i];
    const auto& b = result.aggregates[i];
    if (a.config_id != b.config_id || a.n_seeds != b.n_seeds || !same(a.mean_final_grad_norm_sq, b.mean_final_grad_norm_sq) ||
        !same(a.stderr_final, b.stderr_final) || !same(a.divergence_fraction, b.divergence_fraction) ||
        !same(a.mean_avg_grad_norm_sq, b.mean_avg_grad_norm_sq) || !same(a.stderr_avg, b.stderr_avg) ||
        a.bound_value.has_value() != b.bound_value.has_value() ||
        (a.bound_value && !same(*a.bound_value, *b.bound_value))) {
      return false;
    }
  }
  return true;
}

void write_raw_csv(std::ostream& out, const SweepResult& result, TraceGranularity granularity) {
  out << "config_id,algorithm,K,P,B,gamma_spec,seed,round,grad_norm_sq,objective,samples_processed,diverged\n";
  for (const auto& run : result.runs) {
    const GridPoint& gp = result.points[run.config_id];
    const std::string prefix = std::to_string(gp.config_id) + ',' + to_string(gp.algorithm) + ',' +
                               std::to_string(gp.algorithm == Algorithm::Sgd ? 1 : gp.K) + ',' +
                               std::to_string(gp.algorithm == Algorithm::Sgd ? 1 : gp.P) + ',' +
                               batch_label(gp.batch) + ',' + gp.gamma.describe() + ',' + std::to_string(run.seed) + ',';
    const auto& rows = run.trace.rows;
    const std::size_t first = granularity == TraceGranularity::Final && !rows.empty() ? rows.size() - 1 : 0;
    for (std::size_t i = first; i < rows.size(); ++i) {
      const auto& r = rows[i];
      out << prefix << r.round << ',' << format_double(r.grad_norm_sq) << ',' << format_double(r.objective) << ','
          << r.samples_processed << ',' << (r.diverged ? 1 : 0) << '\n';
    }
  }
}

void write_runs_csv(std::ostream& out, const SweepResult& result) {
  out << "config_id,algorithm,K,P,B,gamma_spec,N,seed,avg_grad_norm_sq,final_grad_norm_sq,final_objective,"
         "diverged,samples_processed\n";
  for (const auto& run : result.runs) {
    const GridPoint& gp = result.points[run.config_id];
    out << gp.config_id << ',' << to_string(gp.algorithm) << ',' << gp.K << ',' << gp.P << ','
        << batch_label(gp.batch) << ',' << gp.gamma.describe() << ',' << gp.N << ',' << run.seed << ','
        << format_double(run.avg_grad_norm_sq) << ',' << format_double(run.final_grad_norm_sq) << ','
        << format_double(run.final_objective) << ',' << (run.diverged ? 1 : 0) << ',' << run.samples_processed
        << '\n';
  }
}

void write_aggregate_csv(std::ostream& out, const SweepResult& result) {
  out << "config_id,n_seeds,mean_final_grad_norm_sq,stderr,divergence_fraction,bound_value,"
         "mean_avg_grad_norm_sq,stderr_avg\n";
  for (const auto& a : result.aggregates) {
    out << a.config_id << ',' << a.n_seeds << ',' << format_double(a.mean_final_grad_norm_sq) << ','
        << format_double(a.stderr_final) << ',' << format_double(a.divergence_fraction) << ','
        << (a.bound_value ? format_double(*a.bound_value) : std::string()) << ','
        << format_double(a.mean_avg_grad_norm_sq) << ',' << format_double(a.stderr_avg) << '\n';
  }
}

void write_bounds_csv(std::ostream& out, const SweepResult& result) {
  out << "config_id,formula,admissible,L,M,gap,bound_value\n";
  for (const auto& b : result.bounds) {
    out << b.config_id << ',' << b.formula << ',' << (b.admissible ? 1 : 0) << ',' << format_double(b.L) << ','
        << format_double(b.M) << ',' << format_double(b.gap) << ','
        << (b.value ? format_double(*b.value) : std::string()) << '\n';
  }
}

SweepResult run_experiment(const ExperimentConfig& config, unsigned threads) {
  if (!config.output_dir.empty()) {
    std::error_code ec;
    std::filesystem::create_directories(config.output_dir, ec);
    if (ec || !std::filesystem::is_directory(config.output_dir)) {
      throw ConfigError("output directory '" + config.output_dir + "' is not writable");
    }
  }
  SweepResult result = run_sweep(config, threads);
  if (config.output_dir.empty()) return result;

  auto open = [&](const char* name) {
    const auto path = std::filesystem::path(config.output_dir) / name;
    std::ofstream f(path);
    if (!f) throw ConfigError("cannot write '" + path.string() + "'");
    return f;
  };
  {
    auto f = open("raw.csv");
    write_raw_csv(f, result, config.granularity);
  }
  {
    auto f = open("runs.csv");
    write_runs_csv(f, result);
  }
  {
    auto f = open("aggregate.csv");
    write_aggregate_csv(f, result);
  }
  if (config.bound_overlay) {
    auto f = open("bounds.csv");
    write_bounds_csv(f, result);
  }
  return result;
}

}  // namespace kavg
