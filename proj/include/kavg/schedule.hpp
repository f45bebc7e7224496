#pragma once

#include <cstddef>
#include <string>
#include <variant>
#include <vector>

namespace kavg {

// Per-round sequences for the stepsize gamma_j and batch size B_j, indexed
// from j = 1.
struct ConstantSchedule {
  double value = 1.0;
};

// gamma_j = coefficient * j^(-exponent); B_j = ceil(coefficient * j^exponent).
struct PowerLawSchedule {
  double coefficient = 1.0;
  double exponent = 1.0;
};

struct TableSchedule {
  std::vector<double> values;
};

// initial * factor^floor((j - 1) / period): "halve every R rounds".
struct StepDecaySchedule {
  double initial = 1.0;
  double factor = 0.5;
  std::size_t period = 1;
};

class ScheduleSpec {
 public:
  using Kind = std::variant<ConstantSchedule, PowerLawSchedule, TableSchedule, StepDecaySchedule>;

  ScheduleSpec() : kind_(ConstantSchedule{}) {}
  ScheduleSpec(Kind kind) : kind_(std::move(kind)) {}  // NOLINT(google-explicit-constructor)

  static ScheduleSpec constant(double v) { return ScheduleSpec(Kind{ConstantSchedule{v}}); }
  static ScheduleSpec power_law(double c, double p) { return ScheduleSpec(Kind{PowerLawSchedule{c, p}}); }
  static ScheduleSpec table(std::vector<double> v) { return ScheduleSpec(Kind{TableSchedule{std::move(v)}}); }
  static ScheduleSpec step_decay(double initial, double factor, std::size_t period) {
    return ScheduleSpec(Kind{StepDecaySchedule{initial, factor, period}});
  }

  // Parses "const:V", "power:C:P", "table:v1,v2,..." (or '/' separated),
  // "step:INITIAL:FACTOR:PERIOD". A bare number is a constant.
  static ScheduleSpec parse(const std::string& text);
  // Canonical text form accepted by parse(); contains no commas.
  std::string describe() const;

  const Kind& kind() const { return kind_; }
  bool is_constant() const;
  bool is_table() const;
  // Number of defined entries; 0 means unbounded.
  std::size_t length() const;

  // Stepsize reading. Throws ContractError past the end of a table.
  double stepsize(std::size_t j) const;
  // Batch reading: power laws round up; other kinds must be integers >= 1.
  std::size_t batch(std::size_t j) const;

  // Throws ContractError when a stepsize reading would be non-positive.
  void validate_stepsize() const;
  void validate_batch() const;

 private:
  double raw(std::size_t j) const;
  Kind kind_;
};

}  // namespace kavg
