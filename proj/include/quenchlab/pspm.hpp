#pragma once

#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include <json.hpp>

#include "quenchlab/env.hpp"
#include "quenchlab/lattice.hpp"

namespace quenchlab {

class PolymerRun;

// A finite list of sub-pmfs, one per copy of Z^d, of total mass <= 1.
// Empty copies are dropped on construction.
class PSPM {
 public:
  explicit PSPM(int dim = 1) : dim_(dim) {}
  PSPM(int dim, std::vector<LatticePMF> copies);

  static PSPM from_pmf(const LatticePMF& f);

  int dim() const noexcept { return dim_; }
  bool empty() const noexcept { return copies_.empty(); }
  std::span<const LatticePMF> copies() const noexcept { return copies_; }
  std::size_t atom_count() const noexcept;
  double norm() const;

  friend bool operator==(const PSPM& a, const PSPM& b);

 private:
  int dim_;
  std::vector<LatticePMF> copies_;
};

void to_json(nlohmann::json& j, const PSPM& f);
void from_json(const nlohmann::json& j, PSPM& f);

PSPM canonicalize(const PSPM& f);

// An atom location in N x Z^d.
struct Site {
  std::size_t copy = 0;
  Coord x{};
  friend bool operator==(const Site&, const Site&) = default;
};

struct IsometryPair {
  Site from;
  Site to;
};

inline constexpr int kInfiniteDegree = std::numeric_limits<int>::max();

// Maximum degree of a finite partial injection; kInfiniteDegree when it acts
// by translations. Throws ParameterError if the map is not injective.
int isometry_degree(std::span<const IsometryPair> map);

// d_{alpha,phi}(f, g) for the partial injection `map`.
double d_alpha_phi(const PSPM& f, const PSPM& g, std::span<const IsometryPair> map, double alpha);

enum class MetricMode { exact_small, upper };

inline constexpr std::size_t kExactMetricAtoms = 8;

// exact_small searches every partial injection between the supports and
// throws SizeError above kExactMetricAtoms atoms per argument; upper
// minimizes over the empty map and translation matchings seeded by the top
// atom pairs and is an upper bound on the metric.
double d_alpha(const PSPM& f, const PSPM& g, double alpha, MetricMode mode = MetricMode::upper);

// One draw of the updated measure in fresh disorder keyed by `seed`.
PSPM update_map_sample(const PSPM& f, double beta, const WalkKernel& walk, const DistSpec& dist,
                       std::uint64_t seed);

struct Estimate {
  double value = 0.0;
  double se = 0.0;
};

// Monte Carlo of E log(F~) with n_mc independent disorder draws.
Estimate R_functional(const PSPM& f, double beta, const WalkKernel& walk, const DistSpec& dist, int n_mc,
                      std::uint64_t seed);

struct EmpiricalMeasure {
  std::vector<PSPM> atoms;
};

// rho_n built from f_0, ..., f_{n-1}.
EmpiricalMeasure empirical_from_run(const PolymerRun& run);

// Assignment value over the d_alpha(upper) cost matrix. Unequal sizes are
// handled by repeating every atom of each side until both have lcm(n, n') atoms.
double wasserstein_estimate(const EmpiricalMeasure& rho, const EmpiricalMeasure& rho2, double alpha,
                            int jobs = 1);

// W(rho, T rho) with T rho replaced by one update per atom, repeated
// `repetitions` times with independent disorder.
Estimate wasserstein_update_proxy(const EmpiricalMeasure& rho, double beta, const WalkKernel& walk,
                                  const DistSpec& dist, double alpha, int repetitions, std::uint64_t seed,
                                  int jobs = 1);

}  // namespace quenchlab
