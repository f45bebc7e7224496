#include "kavg/rng.hpp"

#include <cmath>
#include <numbers>

namespace kavg {
namespace {

constexpr std::uint32_t kMul0 = 0xD2511F53u;
constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) {
  const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
  hi = static_cast<std::uint32_t>(p >> 32);
  lo = static_cast<std::uint32_t>(p);
}

inline double to_open_unit(std::uint64_t x) {
  return (static_cast<double>(x >> 11) + 0.5) * 0x1.0p-53;
}

}  // namespace

std::uint64_t mix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> ctr,
                                        std::array<std::uint32_t, 2> key) {
  for (int round = 0; round < 10; ++round) {
    std::uint32_t hi0, lo0, hi1, lo1;
    mulhilo(kMul0, ctr[0], hi0, lo0);
    mulhilo(kMul1, ctr[2], hi1, lo1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    key[0] += kWeyl0;
    key[1] += kWeyl1;
  }
  return ctr;
}

RngStream::RngStream(std::uint64_t root_seed, Lineage lineage, Domain domain)
    : root_seed_(root_seed), lineage_(lineage), domain_(domain) {
  std::uint64_t k = mix64(root_seed);
  k = mix64(k ^ (static_cast<std::uint64_t>(domain) << 32));
  k = mix64(k ^ lineage.learner);
  key_ = {static_cast<std::uint32_t>(k), static_cast<std::uint32_t>(k >> 32)};
}

RngStream RngStream::with_sample(std::uint32_t sample) const {
  Lineage l = lineage_;
  l.sample = sample;
  RngStream copy = *this;
  copy.lineage_ = l;
  return copy;
}

std::array<std::uint32_t, 4> RngStream::block(std::uint64_t index) const {
  // Counter words: block index, sample, iteration (low, high). The index is
  // limited to 32 bits; callers never need more than 2^32 blocks per sample.
  return philox4x32({static_cast<std::uint32_t>(index), lineage_.sample,
                     static_cast<std::uint32_t>(lineage_.iteration),
                     static_cast<std::uint32_t>(lineage_.iteration >> 32)},
                    key_);
}

std::uint64_t RngStream::bits(std::uint64_t index) const {
  const auto b = block(index);
  return (static_cast<std::uint64_t>(b[1]) << 32) | b[0];
}

double RngStream::uniform(std::uint64_t index) const { return to_open_unit(bits(index)); }

double RngStream::normal(std::uint64_t index) const {
  const auto b = block(index / 2);
  const double u1 = to_open_unit((static_cast<std::uint64_t>(b[1]) << 32) | b[0]);
  const double u2 = to_open_unit((static_cast<std::uint64_t>(b[3]) << 32) | b[2]);
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double theta = 2.0 * std::numbers::pi * u2;
  return (index % 2 == 0) ? r * std::cos(theta) : r * std::sin(theta);
}

std::uint64_t RngStream::below(std::uint64_t n, std::uint64_t index) const {
  __extension__ using u128 = unsigned __int128;
  const u128 wide = static_cast<u128>(bits(index)) * n;
  return static_cast<std::uint64_t>(wide >> 64);
}

}  // namespace kavg
