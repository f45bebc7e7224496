#pragma once

#include <stdexcept>
#include <string>

namespace kavg {

// Precondition failures on public entry points: dimension mismatches,
// out-of-range hyperparameters, malformed schedules.
class ContractError : public std::invalid_argument {
 public:
  explicit ContractError(const std::string& what) : std::invalid_argument(what) {}
};

// Bad or unreadable experiment configuration.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

inline void require(bool condition, const std::string& message) {
  if (!condition) throw ContractError(message);
}

}  // namespace kavg
