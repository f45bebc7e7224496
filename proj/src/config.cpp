#include "kavg/config.hpp"

#include <cmath>
#include <fstream>
#include <variant>

#include "kavg/error.hpp"

namespace kavg {

using nlohmann::json;

namespace {

template <class T>
T get_or(const json& j, const char* key, T fallback) {
  return j.contains(key) ? j.at(key).get<T>() : fallback;
}

template <class T>
std::vector<T> as_list(const json& j) {
  if (j.is_array()) return j.get<std::vector<T>>();
  return {j.get<T>()};
}

std::vector<ScheduleSpec> schedules_from(const json& j) {
  std::vector<ScheduleSpec> out;
  if (j.is_array()) {
    for (const auto& item : j) out.push_back(schedule_from_json(item));
  } else {
    out.push_back(schedule_from_json(j));
  }
  return out;
}

}  // namespace

std::string to_string(Algorithm a) {
  switch (a) {
    case Algorithm::KAvg: return "kavg";
    case Algorithm::Sgd: return "sgd";
    case Algorithm::Downpour: return "downpour";
    case Algorithm::Elastic: return "elastic";
  }
  return "?";
}

Algorithm parse_algorithm(const std::string& name) {
  if (name == "kavg") return Algorithm::KAvg;
  if (name == "sgd") return Algorithm::Sgd;
  if (name == "downpour") return Algorithm::Downpour;
  if (name == "elastic") return Algorithm::Elastic;
  throw ConfigError("unknown algorithm '" + name + "'");
}

json oracle_to_json(const Objective& oracle) {
  return std::visit(
      [](const auto& k) -> json {
        using T = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<T, Quadratic>) {
          return {{"kind", "quadratic"}, {"eigenvalues", k.eigenvalues}, {"noise_std", k.noise_std}};
        } else if constexpr (std::is_same_v<T, TrigNonconvex>) {
          return {{"kind", "trig"}, {"dimension", k.dimension}, {"amplitude", k.amplitude}, {"noise_std", k.noise_std}};
        } else {
          return {{"kind", "finite_sum"},
                  {"curvatures", k.curvatures},
                  {"centers", k.centers},
                  {"box_radius", k.box_radius},
                  {"grid_points", k.grid_points}};
        }
      },
      oracle.kind());
}

Objective oracle_from_json(const json& j) {
  try {
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "quadratic") {
      return Objective::quadratic(j.at("eigenvalues").get<Vector>(), get_or(j, "noise_std", 0.0));
    }
    if (kind == "trig") {
      return Objective::trig_nonconvex(j.at("dimension").get<std::size_t>(), j.at("amplitude").get<double>(),
                                       get_or(j, "noise_std", 0.0));
    }
    if (kind == "finite_sum") {
      return Objective::finite_sum(j.at("curvatures").get<std::vector<Vector>>(),
                                   j.at("centers").get<std::vector<Vector>>(), j.at("box_radius").get<double>(),
                                   get_or<std::size_t>(j, "grid_points", 201));
    }
    throw ConfigError("unknown oracle kind '" + kind + "'");
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad oracle definition: ") + e.what());
  } catch (const ContractError& e) {
    throw ConfigError(std::string("oracle not constructible: ") + e.what());
  }
}

json schedule_to_json(const ScheduleSpec& s) { return s.describe(); }

ScheduleSpec schedule_from_json(const json& j) {
  try {
    if (j.is_number()) return ScheduleSpec::constant(j.get<double>());
    if (j.is_string()) return ScheduleSpec::parse(j.get<std::string>());
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "constant") return ScheduleSpec::constant(j.at("value").get<double>());
    if (kind == "power_law") {
      return ScheduleSpec::power_law(j.at("coefficient").get<double>(), j.at("exponent").get<double>());
    }
    if (kind == "table") return ScheduleSpec::table(j.at("values").get<std::vector<double>>());
    if (kind == "step_decay") {
      return ScheduleSpec::step_decay(j.at("initial").get<double>(), j.at("factor").get<double>(),
                                      j.at("period").get<std::size_t>());
    }
    throw ConfigError("unknown schedule kind '" + kind + "'");
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad schedule: ") + e.what());
  } catch (const ContractError& e) {
    throw ConfigError(std::string("bad schedule: ") + e.what());
  }
}

void ExperimentConfig::validate() const {
  auto check = [](bool ok, const std::string& msg) {
    if (!ok) throw ConfigError(msg);
  };
  check(!algorithms.empty() && !K.empty() && !P.empty() && !batch.empty() && !gamma.empty(), "grids must be nonempty");
  check(budget_S || (pseudo_epoch_samples && epochs) || !N.empty(), "grid N must be nonempty");
  check(!seeds.empty(), "at least one seed is required");
  check(delta > 0.0 && delta < 1.0, "delta must lie in (0, 1)");
  for (auto k : K) check(k >= 1, "K values must be >= 1");
  for (auto p : P) check(p >= 1, "P values must be >= 1");
  for (auto n : N) check(n >= 1, "N values must be >= 1");
  for (auto k : K) {
    if (budget_S) check(*budget_S % k == 0 && *budget_S >= k, "budget_S must be a positive multiple of every K");
  }
  if (epochs) check(*epochs > 0.0 && pseudo_epoch_samples && *pseudo_epoch_samples >= 1,
                    "epochs needs a positive pseudo_epoch_samples");
  try {
    for (const auto& g : gamma) g.validate_stepsize();
    for (const auto& b : batch) b.validate_batch();
  } catch (const ContractError& e) {
    throw ConfigError(e.what());
  }
  if (init_point) check(init_point->size() == oracle.dimension(), "init point has wrong dimension");
  check(init_radius >= 0.0, "init radius must be nonnegative");
  check(elastic.rho >= 0.0, "elastic rho must be nonnegative");
  check(C0 > 0.0 && C1 > 0.0, "C0 and C1 must be positive");
}

Vector ExperimentConfig::initial_point() const {
  if (init_point) return *init_point;
  const double d = static_cast<double>(oracle.dimension());
  return Vector(oracle.dimension(), init_radius / std::sqrt(d));
}

json config_to_json(const ExperimentConfig& c) {
  json j;
  j["schema_version"] = kConfigSchemaVersion;
  j["oracle"] = oracle_to_json(c.oracle);
  json algos = json::array();
  for (auto a : c.algorithms) algos.push_back(to_string(a));
  j["algorithms"] = algos;
  json grid;
  grid["K"] = c.K;
  grid["P"] = c.P;
  grid["B"] = json::array();
  for (const auto& b : c.batch) grid["B"].push_back(schedule_to_json(b));
  grid["gamma"] = json::array();
  for (const auto& g : c.gamma) grid["gamma"].push_back(schedule_to_json(g));
  grid["N"] = c.N;
  j["grid"] = grid;
  if (c.budget_S) j["budget_S"] = *c.budget_S;
  if (c.pseudo_epoch_samples) j["pseudo_epoch_samples"] = *c.pseudo_epoch_samples;
  if (c.epochs) j["epochs"] = *c.epochs;
  j["delta"] = c.delta;
  j["seeds"] = c.seeds;
  if (c.init_point) {
    j["init"] = {{"point", *c.init_point}};
  } else {
    j["init"] = {{"radius", c.init_radius}};
  }
  j["staleness"] = {{"kind", c.staleness.kind == StalenessKind::RoundRobin ? "round_robin" : "uniform"},
                    {"max", c.staleness.max_staleness}};
  j["elastic"] = {{"rho", c.elastic.rho}, {"comm_period", c.elastic.comm_period}};
  j["asgd_constants"] = {{"C0", c.C0}, {"C1", c.C1}};
  j["output_dir"] = c.output_dir;
  j["trace_granularity"] = c.granularity == TraceGranularity::EveryRound ? "every_round" : "final";
  j["bound_overlay"] = c.bound_overlay;
  return j;
}

ExperimentConfig config_from_json(const json& j) {
  ExperimentConfig c;
  try {
    const int version = get_or(j, "schema_version", 0);
    if (version != kConfigSchemaVersion) {
      throw ConfigError("unsupported schema_version " + std::to_string(version) + " (expected " +
                        std::to_string(kConfigSchemaVersion) + ")");
    }
    c.oracle = oracle_from_json(j.at("oracle"));
    c.algorithms.clear();
    const json& algos = j.contains("algorithms") ? j.at("algorithms") : j.at("algorithm");
    for (const auto& name : as_list<std::string>(algos)) c.algorithms.push_back(parse_algorithm(name));

    const json& grid = j.at("grid");
    if (grid.contains("K")) c.K = as_list<std::size_t>(grid.at("K"));
    if (grid.contains("P")) c.P = as_list<std::size_t>(grid.at("P"));
    if (grid.contains("B")) c.batch = schedules_from(grid.at("B"));
    if (grid.contains("gamma")) c.gamma = schedules_from(grid.at("gamma"));
    if (grid.contains("N")) {
      c.N = as_list<std::size_t>(grid.at("N"));
    } else {
      c.N.clear();
    }
    if (j.contains("budget_S")) c.budget_S = j.at("budget_S").get<std::size_t>();
    if (j.contains("pseudo_epoch_samples")) c.pseudo_epoch_samples = j.at("pseudo_epoch_samples").get<std::size_t>();
    if (j.contains("epochs")) c.epochs = j.at("epochs").get<double>();
    c.delta = get_or(j, "delta", 0.5);

    if (j.contains("seeds")) {
      const json& s = j.at("seeds");
      if (s.is_object()) {
        const auto base = s.at("base").get<std::uint64_t>();
        const auto count = s.at("count").get<std::size_t>();
        c.seeds.clear();
        for (std::size_t i = 0; i < count; ++i) c.seeds.push_back(base + i);
      } else {
        c.seeds = as_list<std::uint64_t>(s);
      }
    }
    if (j.contains("init")) {
      const json& init = j.at("init");
      if (init.contains("point")) c.init_point = init.at("point").get<Vector>();
      c.init_radius = get_or(init, "radius", 1.0);
    }
    if (j.contains("staleness")) {
      const json& s = j.at("staleness");
      const std::string kind = get_or<std::string>(s, "kind", "round_robin");
      if (kind == "round_robin") {
        c.staleness.kind = StalenessKind::RoundRobin;
      } else if (kind == "uniform") {
        c.staleness.kind = StalenessKind::UniformRandom;
      } else {
        throw ConfigError("unknown staleness kind '" + kind + "'");
      }
      c.staleness.max_staleness = get_or<std::size_t>(s, "max", 0);
    }
    if (j.contains("elastic")) {
      c.elastic.rho = get_or(j.at("elastic"), "rho", 0.1);
      c.elastic.comm_period = get_or<std::size_t>(j.at("elastic"), "comm_period", 0);
    }
    if (j.contains("asgd_constants")) {
      c.C0 = get_or(j.at("asgd_constants"), "C0", 1.0);
      c.C1 = get_or(j.at("asgd_constants"), "C1", 1.0);
    }
    c.output_dir = get_or<std::string>(j, "output_dir", "");
    const std::string gran = get_or<std::string>(j, "trace_granularity", "every_round");
    if (gran == "every_round") {
      c.granularity = TraceGranularity::EveryRound;
    } else if (gran == "final") {
      c.granularity = TraceGranularity::Final;
    } else {
      throw ConfigError("unknown trace_granularity '" + gran + "'");
    }
    c.bound_overlay = get_or(j, "bound_overlay", false);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad config: ") + e.what());
  }
  c.validate();
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path + "'");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError("cannot parse '" + path + "': " + e.what());
  }
  return config_from_json(j);
}

}  // namespace kavg
