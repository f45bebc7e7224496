#pragma once

#include <array>
#include <cstdint>

namespace kavg {

// Independent purposes that draw randomness from the same root seed.
enum class Domain : std::uint32_t {
  Gradient = 1,
  Staleness = 2,
  Certification = 3,
};

// Identifies one stochastic-gradient sample. `iteration` is the learner's
// cumulative local-step index (round and in-round step folded together), so
// two runs that share a sample budget see the same noise at the same step
// regardless of how often they synchronize.
struct Lineage {
  std::uint64_t iteration = 0;
  std::uint32_t learner = 0;
  std::uint32_t sample = 0;
};

// Counter-based generator (Philox4x32-10). Every value is a pure function
// of (root seed, domain, lineage, index); there is no sequential state, so
// draws do not depend on evaluation order or thread count.
class RngStream {
 public:
  RngStream(std::uint64_t root_seed, Lineage lineage, Domain domain = Domain::Gradient);

  std::uint64_t root_seed() const { return root_seed_; }
  const Lineage& lineage() const { return lineage_; }

  RngStream with_sample(std::uint32_t sample) const;

  // Raw 128-bit block for counter `index`.
  std::array<std::uint32_t, 4> block(std::uint64_t index) const;

  std::uint64_t bits(std::uint64_t index) const;
  // Uniform on the open interval (0, 1).
  double uniform(std::uint64_t index) const;
  // Standard normal; consecutive pairs (2m, 2m+1) come from one Box-Muller block.
  double normal(std::uint64_t index) const;
  // Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n, std::uint64_t index) const;

 private:
  std::uint64_t root_seed_;
  Lineage lineage_;
  Domain domain_;
  std::array<std::uint32_t, 2> key_;
};

std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> counter,
                                        std::array<std::uint32_t, 2> key);

std::uint64_t mix64(std::uint64_t x);

}  // namespace kavg
