#include "kavg/schedule.hpp"

#include <charconv>
#include <cmath>
#include <sstream>

#include "kavg/error.hpp"
#include "kavg/format.hpp"

namespace kavg {
namespace {

std::vector<std::string> split(const std::string& s, const std::string& delims) {
  std::vector<std::string> parts;
  std::string cur;
  for (char c : s) {
    if (delims.find(c) != std::string::npos) {
      parts.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  parts.push_back(cur);
  return parts;
}

double parse_number(const std::string& s) {
  double v = 0.0;
  const auto* first = s.data();
  const auto* last = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last) throw ContractError("not a number: '" + s + "'");
  return v;
}

bool is_integer(double v) { return std::isfinite(v) && v == std::floor(v); }

}  // namespace

ScheduleSpec ScheduleSpec::parse(const std::string& text) {
  const auto colon = text.find(':');
  if (colon == std::string::npos) return constant(parse_number(text));
  const std::string head = text.substr(0, colon);
  const std::string rest = text.substr(colon + 1);
  if (head == "const" || head == "constant") return constant(parse_number(rest));
  if (head == "power") {
    const auto p = split(rest, ":");
    if (p.size() != 2) throw ContractError("power schedule needs power:C:P");
    return power_law(parse_number(p[0]), parse_number(p[1]));
  }
  if (head == "table") {
    std::vector<double> v;
    for (const auto& item : split(rest, ",/")) v.push_back(parse_number(item));
    return table(std::move(v));
  }
  if (head == "step") {
    const auto p = split(rest, ":");
    if (p.size() != 3) throw ContractError("step schedule needs step:INITIAL:FACTOR:PERIOD");
    const double period = parse_number(p[2]);
    if (!is_integer(period) || period < 1) throw ContractError("step period must be a positive integer");
    return step_decay(parse_number(p[0]), parse_number(p[1]), static_cast<std::size_t>(period));
  }
  throw ContractError("unknown schedule kind '" + head + "'");
}

std::string ScheduleSpec::describe() const {
  struct Visitor {
    std::string operator()(const ConstantSchedule& c) const { return "const:" + format_double(c.value); }
    std::string operator()(const PowerLawSchedule& p) const {
      return "power:" + format_double(p.coefficient) + ":" + format_double(p.exponent);
    }
    std::string operator()(const TableSchedule& t) const {
      std::string s = "table:";
      for (std::size_t i = 0; i < t.values.size(); ++i) {
        if (i) s += "/";
        s += format_double(t.values[i]);
      }
      return s;
    }
    std::string operator()(const StepDecaySchedule& s) const {
      return "step:" + format_double(s.initial) + ":" + format_double(s.factor) + ":" + std::to_string(s.period);
    }
  };
  return std::visit(Visitor{}, kind_);
}

bool ScheduleSpec::is_constant() const {
  if (std::holds_alternative<ConstantSchedule>(kind_)) return true;
  if (const auto* p = std::get_if<PowerLawSchedule>(&kind_)) return p->exponent == 0.0;
  if (const auto* s = std::get_if<StepDecaySchedule>(&kind_)) return s->factor == 1.0;
  return false;
}

bool ScheduleSpec::is_table() const { return std::holds_alternative<TableSchedule>(kind_); }

std::size_t ScheduleSpec::length() const {
  if (const auto* t = std::get_if<TableSchedule>(&kind_)) return t->values.size();
  return 0;
}

double ScheduleSpec::raw(std::size_t j) const {
  require(j >= 1, "schedule index starts at 1");
  struct Visitor {
    std::size_t j;
    double operator()(const ConstantSchedule& c) const { return c.value; }
    double operator()(const PowerLawSchedule&) const { return 0.0; }  // role dependent
    double operator()(const TableSchedule& t) const {
      if (j > t.values.size()) {
        throw ContractError("table schedule has " + std::to_string(t.values.size()) +
                            " entries, index " + std::to_string(j) + " requested");
      }
      return t.values[j - 1];
    }
    double operator()(const StepDecaySchedule& s) const {
      return s.initial * std::pow(s.factor, static_cast<double>((j - 1) / s.period));
    }
  };
  return std::visit(Visitor{j}, kind_);
}

double ScheduleSpec::stepsize(std::size_t j) const {
  if (const auto* p = std::get_if<PowerLawSchedule>(&kind_)) {
    require(j >= 1, "schedule index starts at 1");
    return p->coefficient * std::pow(static_cast<double>(j), -p->exponent);
  }
  return raw(j);
}

std::size_t ScheduleSpec::batch(std::size_t j) const {
  double v;
  if (const auto* p = std::get_if<PowerLawSchedule>(&kind_)) {
    require(j >= 1, "schedule index starts at 1");
    v = std::ceil(p->coefficient * std::pow(static_cast<double>(j), p->exponent));
  } else if (std::holds_alternative<StepDecaySchedule>(kind_)) {
    v = std::ceil(raw(j));
  } else {
    v = raw(j);
    require(is_integer(v), "batch sizes must be integers");
  }
  require(v >= 1.0 && std::isfinite(v), "batch sizes must be at least 1");
  return static_cast<std::size_t>(v);
}

void ScheduleSpec::validate_stepsize() const {
  std::visit(
      [](const auto& k) {
        using T = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<T, ConstantSchedule>) {
          require(k.value > 0.0 && std::isfinite(k.value), "stepsizes must be positive");
        } else if constexpr (std::is_same_v<T, PowerLawSchedule>) {
          require(k.coefficient > 0.0 && std::isfinite(k.exponent), "power-law stepsize needs c > 0");
        } else if constexpr (std::is_same_v<T, TableSchedule>) {
          require(!k.values.empty(), "table schedule is empty");
          for (double v : k.values) require(v > 0.0 && std::isfinite(v), "stepsizes must be positive");
        } else {
          require(k.initial > 0.0 && k.factor > 0.0 && k.period >= 1, "step decay needs positive initial/factor/period");
        }
      },
      kind_);
}

void ScheduleSpec::validate_batch() const {
  std::visit(
      [](const auto& k) {
        using T = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<T, ConstantSchedule>) {
          require(k.value >= 1.0 && is_integer(k.value), "batch size must be an integer >= 1");
        } else if constexpr (std::is_same_v<T, PowerLawSchedule>) {
          require(k.coefficient > 0.0 && std::isfinite(k.exponent), "power-law batch needs c > 0");
        } else if constexpr (std::is_same_v<T, TableSchedule>) {
          require(!k.values.empty(), "table schedule is empty");
          for (double v : k.values) require(v >= 1.0 && is_integer(v), "batch sizes must be integers >= 1");
        } else {
          require(k.initial >= 1.0 && k.factor >= 1.0 && k.period >= 1,
                  "batch step schedule needs initial >= 1 and factor >= 1");
        }
      },
      kind_);
}

}  // namespace kavg
