#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "kavg/cli.hpp"
#include "kavg/error.hpp"
#include "kavg/harness.hpp"

using namespace kavg;
namespace fs = std::filesystem;

namespace {

ExperimentConfig small_config() {
  ExperimentConfig c;
  c.oracle = Objective::trig_nonconvex(4, 2.0, 1.0);
  c.algorithms = {Algorithm::KAvg, Algorithm::Downpour, Algorithm::Elastic};
  c.K = {1, 4};
  c.P = {2, 3};
  c.batch = {ScheduleSpec::constant(2)};
  c.gamma = {ScheduleSpec::constant(0.05), ScheduleSpec::power_law(0.1, 0.5)};
  c.N = {15};
  c.seeds = {1, 2, 3};
  c.init_radius = 3.0;
  c.bound_overlay = true;
  return c;
}

std::string raw_csv(const SweepResult& r) {
  std::ostringstream os;
  write_raw_csv(os, r, TraceGranularity::EveryRound);
  return os.str();
}

fs::path fresh_dir(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("kavg_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

int run_cli(const std::vector<std::string>& args, std::string& out) {
  std::ostringstream o, e;
  const int code = cli_main(args, o, e);
  out = o.str();
  return code;
}

}  // namespace

TEST(Config, JsonRoundTrip) {
  auto c = small_config();
  c.batch = {ScheduleSpec::constant(2), ScheduleSpec::step_decay(4, 2, 10)};
  c.gamma = {ScheduleSpec::table({0.1, 0.05}), ScheduleSpec::power_law(0.1, 0.5)};
  c.staleness = {StalenessKind::UniformRandom, 2};
  c.oracle = Objective::finite_sum({{1.0, 2.0}, {2.0, 1.0}}, {{0.0, 1.0}, {1.0, 0.0}}, 3.0);
  const auto j = config_to_json(c);
  const auto back = config_from_json(j);
  EXPECT_EQ(config_to_json(back).dump(), j.dump());
  EXPECT_EQ(back.oracle.lipschitz(), c.oracle.lipschitz());
}

TEST(Config, RejectsBadDocuments) {
  using nlohmann::json;
  const auto good = config_to_json(small_config());
  auto bad = good;
  bad["schema_version"] = 7;
  EXPECT_THROW(config_from_json(bad), ConfigError);
  bad = good;
  bad["grid"]["K"] = json::array();
  EXPECT_THROW(config_from_json(bad), ConfigError);
  bad = good;
  bad["oracle"] = {{"kind", "quadratic"}, {"eigenvalues", {-1.0}}};
  EXPECT_THROW(config_from_json(bad), ConfigError);
  bad = good;
  bad["algorithms"] = {"hogwild"};
  EXPECT_THROW(config_from_json(bad), ConfigError);
  EXPECT_THROW(load_config("/nonexistent/config.json"), ConfigError);
}

TEST(Config, SeedRangeAndBudget) {
  auto j = config_to_json(small_config());
  j["seeds"] = {{"base", 10}, {"count", 3}};
  j["budget_S"] = 16;
  const auto c = config_from_json(j);
  EXPECT_EQ(c.seeds, (std::vector<std::uint64_t>{10, 11, 12}));
  const auto points = expand_grid(c);
  for (const auto& p : points) EXPECT_EQ(p.N * p.K, 16u);
}

TEST(Grid, ExpansionOrder) {
  const auto points = expand_grid(small_config());
  ASSERT_EQ(points.size(), 3u * 2 * 2 * 2);
  EXPECT_EQ(points[0].algorithm, Algorithm::KAvg);
  EXPECT_EQ(points[0].K, 1u);
  EXPECT_EQ(points[1].gamma.describe(), "power:0.1:0.5");
  EXPECT_EQ(points[2].P, 3u);
  EXPECT_EQ(points[4].K, 4u);
  EXPECT_EQ(points[8].algorithm, Algorithm::Downpour);
  for (std::size_t i = 0; i < points.size(); ++i) EXPECT_EQ(points[i].config_id, i);
}

TEST(Sweep, KAvgReductionMatchesSgdCsv) {
  ExperimentConfig c;
  c.oracle = Objective::quadratic({1.0, 0.5}, 0.3);
  c.N = {25};
  c.seeds = {42};
  c.algorithms = {Algorithm::KAvg};
  const auto kavg = raw_csv(run_sweep(c));
  c.algorithms = {Algorithm::Sgd};
  auto sgd = raw_csv(run_sweep(c));
  const auto pos = sgd.find(",sgd,");
  std::string expected = sgd;
  for (std::size_t at = expected.find(",sgd,"); at != std::string::npos; at = expected.find(",sgd,", at))
    expected.replace(at, 5, ",kavg,");
  EXPECT_NE(pos, std::string::npos);
  EXPECT_EQ(kavg, expected);
}

TEST(Sweep, ThreadCountIndependent) {
  const auto c = small_config();
  EXPECT_EQ(raw_csv(run_sweep(c, 1)), raw_csv(run_sweep(c, 8)));
}

TEST(Sweep, AggregatesAndBounds) {
  const auto r = run_sweep(small_config(), 4);
  EXPECT_EQ(r.runs.size(), r.points.size() * 3);
  EXPECT_TRUE(verify_aggregates(r));
  ASSERT_EQ(r.bounds.size(), r.points.size());
  for (std::size_t i = 0; i < r.points.size(); ++i) {
    const auto& b = r.bounds[i];
    switch (r.points[i].algorithm) {
      case Algorithm::KAvg:
        EXPECT_EQ(b.formula, r.points[i].gamma.is_constant() ? "theorem1" : "theorem2");
        EXPECT_TRUE(b.value.has_value());
        EXPECT_EQ(r.aggregates[i].bound_value, b.value);
        break;
      case Algorithm::Downpour:
        EXPECT_EQ(b.formula, r.points[i].gamma.is_constant() ? "asgd" : "none");
        break;
      default: EXPECT_EQ(b.formula, "none"); EXPECT_FALSE(b.value.has_value());
    }
    EXPECT_EQ(b.L, 3.0);
    EXPECT_EQ(b.M, 4.0);
  }
  auto tampered = r;
  tampered.aggregates[0].mean_final_grad_norm_sq += 1.0;
  EXPECT_FALSE(verify_aggregates(tampered));
}

TEST(Sweep, DivergedRunsAreRecorded) {
  ExperimentConfig c;
  c.oracle = Objective::quadratic({1.0}, 0.0);
  c.gamma = {ScheduleSpec::constant(3.0)};
  c.N = {4000};
  c.seeds = {1, 2};
  const auto r = run_sweep(c);
  EXPECT_EQ(r.aggregates[0].divergence_fraction, 1.0);
  EXPECT_TRUE(std::isinf(r.aggregates[0].mean_final_grad_norm_sq));
  EXPECT_TRUE(verify_aggregates(r));
}

TEST(Experiment, WritesFiles) {
  auto c = small_config();
  c.output_dir = fresh_dir("files").string();
  run_experiment(c, 2);
  for (const char* name : {"raw.csv", "runs.csv", "aggregate.csv", "bounds.csv"}) {
    EXPECT_TRUE(fs::exists(fs::path(c.output_dir) / name)) << name;
  }
  std::ifstream agg(fs::path(c.output_dir) / "aggregate.csv");
  std::string header;
  std::getline(agg, header);
  EXPECT_EQ(header.rfind("config_id,n_seeds,mean_final_grad_norm_sq,stderr,divergence_fraction,bound_value", 0), 0u);
  c.output_dir = "/proc/kavg_cannot_write_here";
  EXPECT_THROW(run_experiment(c), ConfigError);
}

TEST(Cli, BoundAndOptimalK) {
  std::string out;
  EXPECT_EQ(run_cli({"bound", "theorem1", "--gap", "1", "--N", "10", "--K", "1", "--delta", "0.5", "--gamma", "0.1",
                     "--L", "1", "--M", "0", "--P", "1", "--B", "1"},
                    out),
            0);
  EXPECT_EQ(out.rfind("bound=4\n", 0), 0u);
  EXPECT_EQ(run_cli({"optimal-k", "--alpha", "10", "--beta", "0.1", "--eta", "0.01", "--delta", "0.5", "--kmax", "1000"},
                    out),
            0);
  EXPECT_NE(out.find("K_star="), std::string::npos);
  EXPECT_NE(out.find("\n2,13.6"), std::string::npos);
  EXPECT_EQ(run_cli({"bound", "asgd", "--C0", "1", "--C1", "1", "--gap", "1", "--gamma", "0.1", "--L", "1", "--M", "1",
                     "--P", "8", "--B", "16", "--N", "100"},
                    out),
            0);
  EXPECT_NE(out.find("bound=0.1025"), std::string::npos);
  EXPECT_EQ(run_cli({"check-schedule", "--gamma", "power:1:0.4", "--batch", "power:1:0.3", "--K", "4", "--P", "8"}, out),
            0);
  EXPECT_NE(out.find("valid=true"), std::string::npos);
}

TEST(Cli, ErrorsExitOne) {
  std::string out;
  EXPECT_EQ(run_cli({}, out), 1);
  EXPECT_EQ(run_cli({"frobnicate"}, out), 1);
  EXPECT_EQ(run_cli({"bound", "theorem1", "--bogus", "1"}, out), 1);
  EXPECT_EQ(run_cli({"sweep", "/nonexistent/config.json"}, out), 1);
  EXPECT_EQ(run_cli({"bound", "corollary-stepsize", "--gap", "1", "--M", "0"}, out), 1);
}

TEST(Cli, SweepFromFileWithThreads) {
  const auto dir = fresh_dir("cli");
  auto c = small_config();
  c.algorithms = {Algorithm::KAvg};
  {
    std::ofstream f(dir / "config.json");
    f << config_to_json(c).dump(2);
  }
  std::string one, eight;
  ASSERT_EQ(run_cli({"--threads", "1", "--out", (dir / "a").string(), "sweep", (dir / "config.json").string()}, one), 0);
  ASSERT_EQ(run_cli({"--threads", "8", "--out", (dir / "b").string(), "sweep", (dir / "config.json").string()}, eight),
            0);
  EXPECT_EQ(one, eight);
  auto slurp = [](const fs::path& p) {
    std::ifstream f(p);
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
  };
  EXPECT_EQ(slurp(dir / "a" / "raw.csv"), slurp(dir / "b" / "raw.csv"));
  EXPECT_FALSE(slurp(dir / "a" / "raw.csv").empty());
  EXPECT_EQ(run_cli({"--out", "/proc/kavg_nope", "sweep", (dir / "config.json").string()}, one), 1);
  EXPECT_EQ(run_cli({"run", (dir / "config.json").string()}, one), 1);  // more than one grid point
}

// At P = 16 and gamma = 0.1 a round-robin staleness of 15 destabilises the
// parameter server while averaging stays well behaved.
TEST(Sweep, StepsizeFragilityOfDownpour) {
  ExperimentConfig c;
  c.oracle = Objective::trig_nonconvex(10, 2.0, 1.0);
  c.algorithms = {Algorithm::KAvg, Algorithm::Downpour};
  c.K = {2};
  c.P = {16};
  c.batch = {ScheduleSpec::constant(4)};
  c.gamma = {ScheduleSpec::constant(0.1)};
  c.N = {40};
  c.seeds = {1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13, 14, 15, 16, 17, 18, 19, 20};
  c.init_radius = 3.0;
  const auto r = run_sweep(c, 4);
  const double threshold = 0.1;
  std::size_t kavg_converged = 0, downpour_stalled = 0;
  for (const auto& run : r.runs) {
    const bool below = !run.diverged && run.final_grad_norm_sq < threshold;
    if (run.config_id == 0) kavg_converged += below ? 1 : 0;
    if (run.config_id == 1) downpour_stalled += below ? 0 : 1;
  }
  EXPECT_GE(kavg_converged, 18u);
  EXPECT_GE(downpour_stalled, 10u);
}
