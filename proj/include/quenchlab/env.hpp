#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "quenchlab/lattice.hpp"
#include "quenchlab/rng.hpp"

namespace quenchlab {

enum class DistKind { gaussian, bernoulli_pm1, uniform, exponential };

std::string to_string(DistKind kind);
DistKind dist_kind_from_string(const std::string& name);

// Law of a single disorder weight. bernoulli_pm1 takes value -1 with
// probability p and +1 with probability 1 - p.
struct DistSpec {
  DistKind kind = DistKind::gaussian;
  double mean = 0.0;
  double sd = 1.0;
  double p = 0.5;
  double a = 0.0;
  double b = 1.0;
  double rate = 1.0;

  static DistSpec gaussian(double mean = 0.0, double sd = 1.0);
  static DistSpec bernoulli_pm1(double p);
  static DistSpec uniform(double a, double b);
  static DistSpec exponential(double rate);

  // Throws ParameterError for out-of-range or degenerate parameters.
  void validate() const;

  double draw(const KeyedStream& stream, const SiteKey& key) const;

  bool is_continuous() const noexcept { return kind != DistKind::bernoulli_pm1; }
  bool is_standard_gaussian() const noexcept {
    return kind == DistKind::gaussian && mean == 0.0 && sd == 1.0;
  }
  double expectation() const;
  double essinf() const;
  double esssup() const;
  // Probability of the value essinf (resp. esssup); zero for continuous laws.
  double atom_at_essinf() const;
  double atom_at_esssup() const;

  // Density and distribution function; continuous kinds only.
  double pdf(double x) const;
  double cdf(double x) const;
  // Survival function 1 - F(x), computed without cancellation.
  double sf(double x) const;

  friend bool operator==(const DistSpec&, const DistSpec&) = default;
};

void to_json(nlohmann::json& j, const DistSpec& dist);
void from_json(const nlohmann::json& j, DistSpec& dist);

// log E exp(beta * omega). Throws DomainError where the mgf is infinite.
double log_mgf(const DistSpec& dist, double beta);

// Same quantity by numerical quadrature against the density (or the exact
// two-point sum for bernoulli_pm1). Independent of the closed forms above.
double log_mgf_numeric(const DistSpec& dist, double beta);

struct WalkStep {
  Coord dz{};
  double prob = 0.0;
};

// Step law of the reference walk, P(y, x) = K(x - y).
class WalkKernel {
 public:
  WalkKernel(int dim, std::vector<WalkStep> steps);

  static WalkKernel simple(int dim);

  int dim() const noexcept { return dim_; }
  std::span<const WalkStep> steps() const noexcept { return steps_; }
  // Largest |component| over the support; the box radius per time step.
  int reach() const noexcept { return reach_; }
  bool is_simple() const noexcept { return simple_; }

 private:
  int dim_;
  std::vector<WalkStep> steps_;
  int reach_ = 1;
  bool simple_ = false;
};

// i.i.d. weights omega(i, x) for 1 <= i <= n and x in the centered box
// [-radius, radius]^d. Immutable once built.
class Environment {
 public:
  Environment(DistSpec dist, int dim, int horizon, int radius, std::uint64_t seed,
              std::vector<double> weights);

  int dim() const noexcept { return dim_; }
  int horizon() const noexcept { return horizon_; }
  int radius() const noexcept { return radius_; }
  int width() const noexcept { return 2 * radius_ + 1; }
  std::uint64_t seed() const noexcept { return seed_; }
  const DistSpec& dist() const noexcept { return dist_; }

  bool contains(const Coord& x) const noexcept;
  double operator()(int i, const Coord& x) const { return weights_[index(i, x)]; }
  std::span<const double> weights() const noexcept { return weights_; }
  std::size_t sites_per_step() const noexcept { return slab_; }

  // Restriction to the first `horizon` steps and a smaller centered box.
  Environment restrict(int horizon, int radius) const;

  // The canonical key of site (i, x); sampling uses it for every entry.
  static SiteKey key(int i, const Coord& x) noexcept { return {i, x[0], x[1], 0}; }

 private:
  std::size_t index(int i, const Coord& x) const noexcept;

  DistSpec dist_;
  int dim_;
  int horizon_;
  int radius_;
  std::uint64_t seed_;
  std::size_t slab_;
  std::vector<double> weights_;
};

// Default radius (negative) is horizon * walk reach for the simple walk, i.e. n.
Environment sample_environment(const DistSpec& dist, int dim, int horizon, std::uint64_t seed,
                               int radius = -1);

}  // namespace quenchlab
