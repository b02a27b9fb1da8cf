#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "quenchlab/env.hpp"
#include "quenchlab/lattice.hpp"

namespace quenchlab {

// Dense mass array on the centered box of a given radius at one time step.
struct ConeSlice {
  int dim = 1;
  int radius = 0;
  std::vector<double> mass;

  int width() const noexcept { return 2 * radius + 1; }
  std::size_t index(const Coord& x) const noexcept;
  double at(const Coord& x) const noexcept;
  LatticePMF to_pmf() const;
  template <class F>
  void for_each_site(F&& f) const;
};

struct PolymerOptions {
  bool marginals = true;
};

class PolymerRun {
 public:
  const Environment& env() const noexcept { return *env_; }
  double beta() const noexcept { return beta_; }
  const WalkKernel& walk() const noexcept { return walk_; }
  int horizon() const noexcept { return static_cast<int>(log_norm_.size()); }

  // c_1, ..., c_n; entry i-1 holds c_i.
  std::span<const double> log_normalizers() const noexcept { return log_norm_; }
  double log_partition() const noexcept { return log_z_; }

  // Endpoint pmf f_i, 0 <= i <= n.
  LatticePMF forward(int i) const;
  const ConeSlice& forward_slice(int i) const;

  bool has_marginals() const noexcept { return !marg_.empty(); }
  // Law of sigma_i under the length-n measure, 0 <= i <= n.
  LatticePMF marginal(int i) const;
  const ConeSlice& marginal_slice(int i) const;

 private:
  friend PolymerRun forward_measures(const Environment&, double, const WalkKernel&, PolymerOptions);
  friend void attach_marginals(PolymerRun&);

  const Environment* env_ = nullptr;
  double beta_ = 0.0;
  WalkKernel walk_ = WalkKernel::simple(1);
  std::vector<double> log_norm_;
  double log_z_ = 0.0;
  std::vector<ConeSlice> fwd_;
  std::vector<ConeSlice> marg_;
};

// The environment must outlive the returned run.
PolymerRun forward_measures(const Environment& env, double beta, const WalkKernel& walk,
                            PolymerOptions options = {});
inline PolymerRun forward_measures(const Environment& env, double beta) {
  return forward_measures(env, beta, WalkKernel::simple(env.dim()));
}

// Backward sweep; fills the i-th point marginals of a run built without them.
void attach_marginals(PolymerRun& run);

double free_energy(const PolymerRun& run);
std::vector<LatticePMF> ith_point_marginals(const PolymerRun& run);
double replica_overlap(const PolymerRun& run);

// W_k = Z_k e^{-k lambda(beta)} for the first `steps` steps; steps < 0 means n.
double normalized_partition(const PolymerRun& run, int steps = -1);
double log_normalized_partition(const PolymerRun& run, int steps = -1);

// log of the partition function restricted to paths with sigma_n = x.
double point_to_point_log_partition(const PolymerRun& run, const Coord& x);

Environment ou_flow(const Environment& env, double t, std::uint64_t seed2);

struct OverlapDerivativeResult {
  double lhs = 0.0;
  double rhs = 0.0;
  double se_lhs = 0.0;
  double se_rhs = 0.0;
  // Standard error of the per-seed difference lhs_s - rhs_s.
  double se_paired = 0.0;
  double mean_overlap = 0.0;
  bool one_sided = false;
  std::size_t samples = 0;
};

// Compares beta (1 - E<R>) with a difference quotient of E F_n in beta, the
// same environments being reused at every beta.
OverlapDerivativeResult overlap_derivative_check(const DistSpec& dist, int dim, int n, double beta,
                                                 double dbeta, std::span<const std::uint64_t> seeds,
                                                 int jobs = 1);

template <class F>
void ConeSlice::for_each_site(F&& f) const {
  if (dim == 1) {
    for (int x = -radius; x <= radius; ++x) f(Coord{x, 0}, mass[static_cast<std::size_t>(x + radius)]);
  } else {
    std::size_t k = 0;
    for (int x = -radius; x <= radius; ++x)
      for (int y = -radius; y <= radius; ++y) f(Coord{x, y}, mass[k++]);
  }
}

}  // namespace quenchlab
