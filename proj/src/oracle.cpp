#include "kavg/oracle.hpp"

#include <algorithm>
#include <cmath>

#include "kavg/error.hpp"

namespace kavg {
namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

// Var over component index of h_il (x - c_il), for one coordinate l.
double component_variance(const FiniteSum& fs, std::size_t l, double x) {
  const double m = static_cast<double>(fs.curvatures.size());
  double mean = 0.0, second = 0.0;
  for (std::size_t i = 0; i < fs.curvatures.size(); ++i) {
    const double g = fs.curvatures[i][l] * (x - fs.centers[i][l]);
    mean += g;
    second += g * g;
  }
  mean /= m;
  second /= m;
  return std::max(0.0, second - mean * mean);
}

}  // namespace

double squared_norm(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return s;
}

Objective::Objective(ObjectiveKind kind) : kind_(std::move(kind)) {
  std::visit(
      overloaded{
          [this](const Quadratic& q) {
            require(!q.eigenvalues.empty(), "quadratic objective needs at least one eigenvalue");
            for (double e : q.eigenvalues) require(e > 0.0 && std::isfinite(e), "eigenvalues must be positive");
            require(q.noise_std >= 0.0, "noise_std must be nonnegative");
            dimension_ = q.eigenvalues.size();
            lipschitz_ = *std::max_element(q.eigenvalues.begin(), q.eigenvalues.end());
            variance_ = static_cast<double>(dimension_) * q.noise_std * q.noise_std;
            lower_bound_ = 0.0;
          },
          [this](const TrigNonconvex& t) {
            require(t.dimension >= 1, "dimension must be positive");
            require(t.amplitude > 0.0, "amplitude must be positive");
            require(t.noise_std >= 0.0, "noise_std must be nonnegative");
            dimension_ = t.dimension;
            lipschitz_ = 1.0 + t.amplitude;
            variance_ = static_cast<double>(dimension_) * t.noise_std * t.noise_std;
            lower_bound_ = -t.amplitude * static_cast<double>(dimension_);
          },
          [this](const FiniteSum& fs) {
            require(!fs.curvatures.empty(), "finite sum needs at least one component");
            require(fs.curvatures.size() == fs.centers.size(), "curvature/center tables differ in length");
            require(fs.box_radius > 0.0, "box_radius must be positive");
            require(fs.grid_points >= 2, "grid_points must be at least 2");
            dimension_ = fs.curvatures.front().size();
            require(dimension_ >= 1, "dimension must be positive");
            for (std::size_t i = 0; i < fs.curvatures.size(); ++i) {
              require(fs.curvatures[i].size() == dimension_ && fs.centers[i].size() == dimension_,
                      "ragged finite-sum component table");
              for (double h : fs.curvatures[i]) require(h > 0.0, "component curvatures must be positive");
            }
            const double m = static_cast<double>(fs.curvatures.size());
            lipschitz_ = 0.0;
            lower_bound_ = 0.0;
            double variance = 0.0;
            for (std::size_t l = 0; l < dimension_; ++l) {
              double hsum = 0.0, hc = 0.0;
              for (std::size_t i = 0; i < fs.curvatures.size(); ++i) {
                hsum += fs.curvatures[i][l];
                hc += fs.curvatures[i][l] * fs.centers[i][l];
              }
              lipschitz_ = std::max(lipschitz_, hsum / m);
              const double xstar = hc / hsum;
              double fmin = 0.0;
              for (std::size_t i = 0; i < fs.curvatures.size(); ++i) {
                const double r = xstar - fs.centers[i][l];
                fmin += 0.5 * fs.curvatures[i][l] * r * r;
              }
              lower_bound_ += fmin / m;
              double vmax = 0.0;
              for (std::size_t g = 0; g < fs.grid_points; ++g) {
                const double x = -fs.box_radius +
                                 2.0 * fs.box_radius * static_cast<double>(g) /
                                     static_cast<double>(fs.grid_points - 1);
                vmax = std::max(vmax, component_variance(fs, l, x));
              }
              variance += vmax;
            }
            variance_ = 1.1 * variance;
          },
      },
      kind_);
}

Objective Objective::quadratic(Vector eigenvalues, double noise_std) {
  return Objective(Quadratic{std::move(eigenvalues), noise_std});
}

Objective Objective::trig_nonconvex(std::size_t dimension, double amplitude, double noise_std) {
  return Objective(TrigNonconvex{dimension, amplitude, noise_std});
}

Objective Objective::finite_sum(std::vector<Vector> curvatures, std::vector<Vector> centers,
                                double box_radius, std::size_t grid_points) {
  return Objective(FiniteSum{std::move(curvatures), std::move(centers), box_radius, grid_points});
}

std::string Objective::kind_name() const {
  return std::visit(overloaded{[](const Quadratic&) { return std::string("quadratic"); },
                               [](const TrigNonconvex&) { return std::string("trig"); },
                               [](const FiniteSum&) { return std::string("finite_sum"); }},
                    kind_);
}

void Objective::check_dim(std::span<const double> w) const {
  if (w.size() != dimension_) {
    throw ContractError("dimension mismatch: expected " + std::to_string(dimension_) + ", got " +
                        std::to_string(w.size()));
  }
}

double Objective::value(std::span<const double> w) const {
  check_dim(w);
  return std::visit(
      overloaded{
          [&](const Quadratic& q) {
            double f = 0.0;
            for (std::size_t i = 0; i < w.size(); ++i) f += q.eigenvalues[i] * w[i] * w[i];
            return 0.5 * f;
          },
          [&](const TrigNonconvex& t) {
            double f = 0.0;
            for (double x : w) f += 0.5 * x * x + t.amplitude * std::cos(x);
            return f;
          },
          [&](const FiniteSum& fs) {
            double f = 0.0;
            for (std::size_t i = 0; i < fs.curvatures.size(); ++i) {
              for (std::size_t l = 0; l < w.size(); ++l) {
                const double r = w[l] - fs.centers[i][l];
                f += 0.5 * fs.curvatures[i][l] * r * r;
              }
            }
            return f / static_cast<double>(fs.curvatures.size());
          },
      },
      kind_);
}

Vector Objective::full_gradient(std::span<const double> w) const {
  Vector out(dimension_);
  full_gradient(w, out);
  return out;
}

void Objective::full_gradient(std::span<const double> w, std::span<double> out) const {
  check_dim(w);
  require(out.size() == dimension_, "gradient output has wrong dimension");
  std::visit(overloaded{
                 [&](const Quadratic& q) {
                   for (std::size_t i = 0; i < w.size(); ++i) out[i] = q.eigenvalues[i] * w[i];
                 },
                 [&](const TrigNonconvex& t) {
                   for (std::size_t i = 0; i < w.size(); ++i) out[i] = w[i] - t.amplitude * std::sin(w[i]);
                 },
                 [&](const FiniteSum& fs) {
                   std::fill(out.begin(), out.end(), 0.0);
                   for (std::size_t i = 0; i < fs.curvatures.size(); ++i) {
                     for (std::size_t l = 0; l < w.size(); ++l) {
                       out[l] += fs.curvatures[i][l] * (w[l] - fs.centers[i][l]);
                     }
                   }
                   const double m = static_cast<double>(fs.curvatures.size());
                   for (double& x : out) x /= m;
                 },
             },
             kind_);
}

void Objective::add_sample(std::span<const double> w, const RngStream& stream, std::span<double> acc,
                           std::span<double> scratch) const {
  std::visit(overloaded{
                 [&](const FiniteSum& fs) {
                   const auto i = static_cast<std::size_t>(stream.below(fs.curvatures.size(), 0));
                   for (std::size_t l = 0; l < w.size(); ++l) {
                     acc[l] += fs.curvatures[i][l] * (w[l] - fs.centers[i][l]);
                   }
                 },
                 [&](const auto& gaussian) {
                   // scratch already holds grad F(w)
                   for (std::size_t l = 0; l < w.size(); ++l) {
                     acc[l] += scratch[l];
                     if (gaussian.noise_std != 0.0) acc[l] += gaussian.noise_std * stream.normal(l);
                   }
                 },
             },
             kind_);
}

Vector Objective::stochastic_gradient(std::span<const double> w, const RngStream& stream) const {
  check_dim(w);
  Vector out(dimension_, 0.0);
  Vector scratch(dimension_);
  if (!std::holds_alternative<FiniteSum>(kind_)) full_gradient(w, scratch);
  add_sample(w, stream, out, scratch);
  return out;
}

void Objective::minibatch_gradient_sum(std::span<const double> w, const RngStream& stream,
                                       std::size_t batch, std::span<double> out) const {
  check_dim(w);
  require(out.size() == dimension_, "gradient output has wrong dimension");
  require(batch >= 1, "batch size must be at least 1");
  Vector scratch(dimension_);
  if (!std::holds_alternative<FiniteSum>(kind_)) full_gradient(w, scratch);
  std::fill(out.begin(), out.end(), 0.0);
  for (std::size_t s = 0; s < batch; ++s) {
    add_sample(w, stream.with_sample(static_cast<std::uint32_t>(s)), out, scratch);
  }
}

bool Objective::in_certified_region(std::span<const double> w) const {
  if (const auto* fs = std::get_if<FiniteSum>(&kind_)) {
    return std::all_of(w.begin(), w.end(), [r = fs->box_radius](double x) { return std::abs(x) <= r; });
  }
  return true;
}

CertificationReport certify_constants(const Objective& oracle, std::size_t trials, double box_radius,
                                      std::uint64_t seed) {
  require(trials >= 1, "trials must be at least 1");
  require(box_radius > 0.0, "box_radius must be positive");
  const std::size_t d = oracle.dimension();
  CertificationReport report;

  auto sample_point = [&](std::uint64_t id, std::uint32_t which) {
    RngStream rng(seed, Lineage{id, which, 0}, Domain::Certification);
    Vector w(d);
    for (std::size_t l = 0; l < d; ++l) w[l] = box_radius * (2.0 * rng.uniform(l) - 1.0);
    return w;
  };

  Vector ga(d), gb(d), diff(d);
  for (std::size_t t = 0; t < trials; ++t) {
    const Vector a = sample_point(t, 0);
    const Vector b = sample_point(t, 1);
    oracle.full_gradient(a, ga);
    oracle.full_gradient(b, gb);
    double num = 0.0, den = 0.0;
    for (std::size_t l = 0; l < d; ++l) {
      num += (ga[l] - gb[l]) * (ga[l] - gb[l]);
      den += (a[l] - b[l]) * (a[l] - b[l]);
    }
    if (den == 0.0) continue;
    report.max_lipschitz_ratio = std::max(report.max_lipschitz_ratio, std::sqrt(num / den));
    ++report.lipschitz_pairs;
  }
  report.lipschitz_violation = report.max_lipschitz_ratio > oracle.lipschitz() + 1e-9;

  report.variance_points = std::min<std::size_t>(trials, 8);
  report.draws_per_point = 4096;
  report.variance_tolerance = oracle.variance_bound();
  for (std::size_t p = 0; p < report.variance_points; ++p) {
    const Vector w = sample_point(p, 2);
    oracle.full_gradient(w, ga);
    double sum = 0.0, sum_sq = 0.0;
    for (std::size_t s = 0; s < report.draws_per_point; ++s) {
      RngStream rng(seed, Lineage{p, 3, static_cast<std::uint32_t>(s)}, Domain::Certification);
      const Vector g = oracle.stochastic_gradient(w, rng);
      double dev = 0.0;
      for (std::size_t l = 0; l < d; ++l) dev += (g[l] - ga[l]) * (g[l] - ga[l]);
      sum += dev;
      sum_sq += dev * dev;
    }
    const double n = static_cast<double>(report.draws_per_point);
    const double mean = sum / n;
    const double var = std::max(0.0, sum_sq / n - mean * mean);
    const double tolerance = oracle.variance_bound() + 5.0 * std::sqrt(var / n);
    if (mean > tolerance) report.variance_violation = true;
    if (mean >= report.max_noise_second_moment) {
      report.max_noise_second_moment = mean;
      report.variance_tolerance = tolerance;
    }
  }
  return report;
}

}  // namespace kavg
