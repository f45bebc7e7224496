#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "kavg/rng.hpp"

namespace kavg {

using Vector = std::vector<double>;

// F(w) = 1/2 sum_i lambda_i w_i^2, gradient noise N(0, noise_std^2 I).
struct Quadratic {
  Vector eigenvalues;
  double noise_std = 0.0;
};

// F(w) = 1/2 |w|^2 + a sum_i cos(w_i). Nonconvex for a > 1 (the origin is a
// local maximum per coordinate); Hessian eigenvalues lie in [1 - a, 1 + a].
struct TrigNonconvex {
  std::size_t dimension = 1;
  double amplitude = 1.0;
  double noise_std = 0.0;
};

// F(w) = (1/m) sum_i f_i(w) with f_i(w) = 1/2 sum_l h_il (w_l - c_il)^2.
// Sampling picks one component uniformly (with replacement). The variance of
// the sampled gradient depends on w, so M is certified over the box
// [-box_radius, box_radius]^d only.
struct FiniteSum {
  std::vector<Vector> curvatures;  // h_i, one row per component, all > 0
  std::vector<Vector> centers;     // c_i
  double box_radius = 1.0;
  std::size_t grid_points = 201;
};

using ObjectiveKind = std::variant<Quadratic, TrigNonconvex, FiniteSum>;

struct CertificationReport {
  std::size_t lipschitz_pairs = 0;
  double max_lipschitz_ratio = 0.0;
  bool lipschitz_violation = false;

  std::size_t variance_points = 0;
  std::size_t draws_per_point = 0;
  // Largest per-point mean of |g(w; xi) - grad F(w)|^2.
  double max_noise_second_moment = 0.0;
  // Certified M plus five Monte Carlo standard errors at the worst point.
  double variance_tolerance = 0.0;
  bool variance_violation = false;

  bool violated() const { return lipschitz_violation || variance_violation; }
};

// A stochastic objective together with certified constants: L (gradient
// Lipschitz), M (bound on E|g|^2 - |E g|^2) and F* (lower bound of F).
// Immutable once built; safe to share across threads.
class Objective {
 public:
  explicit Objective(ObjectiveKind kind);

  static Objective quadratic(Vector eigenvalues, double noise_std);
  static Objective trig_nonconvex(std::size_t dimension, double amplitude, double noise_std);
  static Objective finite_sum(std::vector<Vector> curvatures, std::vector<Vector> centers,
                              double box_radius, std::size_t grid_points = 201);

  std::size_t dimension() const { return dimension_; }
  double lipschitz() const { return lipschitz_; }
  double variance_bound() const { return variance_; }
  double lower_bound() const { return lower_bound_; }
  const ObjectiveKind& kind() const { return kind_; }
  std::string kind_name() const;

  double value(std::span<const double> w) const;
  Vector full_gradient(std::span<const double> w) const;
  void full_gradient(std::span<const double> w, std::span<double> out) const;

  // One draw of grad F(w; xi) for the sample identified by `stream`.
  Vector stochastic_gradient(std::span<const double> w, const RngStream& stream) const;

  // out = sum over s = 0..batch-1 of grad F(w; xi_s), the sample index s
  // taken from stream.with_sample(s).
  void minibatch_gradient_sum(std::span<const double> w, const RngStream& stream,
                              std::size_t batch, std::span<double> out) const;

  // False only for finite-sum objectives whose certified box does not contain w.
  bool in_certified_region(std::span<const double> w) const;

 private:
  void check_dim(std::span<const double> w) const;
  void add_sample(std::span<const double> w, const RngStream& stream, std::span<double> acc,
                  std::span<double> scratch) const;

  ObjectiveKind kind_;
  std::size_t dimension_ = 0;
  double lipschitz_ = 0.0;
  double variance_ = 0.0;
  double lower_bound_ = 0.0;
};

// Empirical falsification of the certified L and M.
CertificationReport certify_constants(const Objective& oracle, std::size_t trials,
                                      double box_radius, std::uint64_t seed);

double squared_norm(std::span<const double> v);

}  // namespace kavg
