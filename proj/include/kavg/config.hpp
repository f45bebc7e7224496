#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "kavg/asgd.hpp"
#include "kavg/oracle.hpp"
#include "kavg/schedule.hpp"

namespace kavg {

inline constexpr int kConfigSchemaVersion = 1;

enum class Algorithm { KAvg, Sgd, Downpour, Elastic };

std::string to_string(Algorithm a);
Algorithm parse_algorithm(const std::string& name);

enum class TraceGranularity { EveryRound, Final };

struct ExperimentConfig {
  Objective oracle = Objective::quadratic({1.0}, 0.0);
  std::vector<Algorithm> algorithms{Algorithm::KAvg};

  // Grid axes, expanded as algorithm x K x P x B x gamma x N.
  std::vector<std::size_t> K{1};
  std::vector<std::size_t> P{1};
  std::vector<ScheduleSpec> batch{ScheduleSpec::constant(32)};
  std::vector<ScheduleSpec> gamma{ScheduleSpec::constant(0.1)};
  std::vector<std::size_t> N{100};
  // Fixed sample budget per learner: when set, N = budget_S / K.
  std::optional<std::size_t> budget_S;
  // Pseudo-epochs: when both are set, N = ceil(epochs * epoch_samples / (K B P)).
  std::optional<std::size_t> pseudo_epoch_samples;
  std::optional<double> epochs;

  double delta = 0.5;
  std::vector<std::uint64_t> seeds{1};

  // Initial point: explicit, or the all-ones direction scaled to init_radius.
  std::optional<Vector> init_point;
  double init_radius = 1.0;

  StalenessModel staleness;
  // comm_period 0 means "use K".
  ElasticParams elastic{0.1, 0};
  double C0 = 1.0;
  double C1 = 1.0;

  std::string output_dir;
  TraceGranularity granularity = TraceGranularity::EveryRound;
  bool bound_overlay = false;

  void validate() const;
  Vector initial_point() const;
};

nlohmann::json oracle_to_json(const Objective& oracle);
Objective oracle_from_json(const nlohmann::json& j);

nlohmann::json schedule_to_json(const ScheduleSpec& s);
ScheduleSpec schedule_from_json(const nlohmann::json& j);

nlohmann::json config_to_json(const ExperimentConfig& c);
// Throws ConfigError on schema or value problems.
ExperimentConfig config_from_json(const nlohmann::json& j);
ExperimentConfig load_config(const std::string& path);

}  // namespace kavg
