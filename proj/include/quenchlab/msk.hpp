#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "quenchlab/quadrature.hpp"

namespace quenchlab {

// Multi-species SK model. The Gibbs weight of sigma in {-1,+1}^N is
// exp(beta N^{-1/2} sum_{i,j} g_ij sigma_i sigma_j + h sum_i sigma_i) with
// E g_ij^2 = delta2(s, t) for i in species s, j in species t.
struct MSKModel {
  std::vector<double> lambda;
  Eigen::MatrixXd delta2;
  double beta = 1.0;
  double h = 0.0;

  int species() const noexcept { return static_cast<int>(lambda.size()); }

  // Throws ParameterError on invalid weights or a non-symmetric delta2.
  void validate() const;
  bool positive_definite() const;
  // Human-readable caveats (indefinite delta2, ...); empty when none apply.
  std::vector<std::string> warnings() const;

  static MSKModel two_species(double lambda1, double d11, double d22, double d12, double beta, double h);
  static MSKModel sk(double beta, double h);
};

// Q_l^s = 2 sum_t delta2(s,t) lambda_t q^t
Eigen::VectorXd species_Q(const MSKModel& m, const Eigen::VectorXd& q);
// Q_l = sum_{s,t} delta2(s,t) lambda_s lambda_t q^s q^t
double total_Q(const MSKModel& m, const Eigen::VectorXd& q);

// q -> (E tanh^2(beta eta sqrt(Q_1^s) + h))_s
Eigen::VectorXd rs_map(const MSKModel& m, const Eigen::VectorXd& q, const Quadrature& quad);

struct RSPoint {
  Eigen::VectorXd q;
  Eigen::VectorXd Q1;
  double residual = 0.0;
  int iterations = 0;
};

struct RSOptions {
  double damping = 0.5;
  double tol = 1e-10;
  int max_iter = 10000;
  int n_starts = 9;
  std::uint64_t seed = 0;
};

struct RSResult {
  // The fixed point with the largest l1 norm among those found.
  RSPoint point;
  // Distinct fixed points (deduplicated at 10 tol), sorted by l1 norm, descending.
  std::vector<RSPoint> all;
  int converged_starts = 0;
  int failed_starts = 0;
};

// Damped iteration from the corners of [0,1]^M, the centre, and random points.
// Throws ConvergenceError (carrying the last iterate) if no start converges.
RSResult rs_fixed_point(const MSKModel& m, const Quadrature& quad, const RSOptions& opt = {});

double rs_free_energy(const MSKModel& m, const Eigen::VectorXd& q, const Quadrature& quad);

// beta_0^2 for two species; the cross variance enters as (delta2_12)^2.
double uniqueness_threshold(const MSKModel& m);

struct ATCheck {
  double gamma1 = 0.0;
  double gamma2 = 0.0;
  double threshold_sq = 0.0;
  bool broken = false;
};

// gamma_s = lambda_s E sech^4(beta eta sqrt(Q_1^s) + h)
Eigen::VectorXd gamma_weights(const MSKModel& m, const Eigen::VectorXd& q, const Quadrature& quad);

ATCheck at_line_check(const MSKModel& m, const Eigen::VectorXd& q_star, const Quadrature& quad);

// beta^2 at which beta^2 equals the AT threshold computed at the RS point of
// that beta (bisection in beta; the model's own beta is ignored).
double at_line_beta_sq(const MSKModel& m, const Quadrature& quad, double beta_max = 10.0);

Eigen::MatrixXd hessian_V(const MSKModel& m, const Eigen::VectorXd& q_star, const Quadrature& quad);

// Requires ordered q <= p <= 1 and zeta in (0, 1].
double parisi_1rsb(const MSKModel& m, const Eigen::VectorXd& q, const Eigen::VectorXd& p, double zeta,
                   const Quadrature& quad);

// d/dzeta of the one-level functional at zeta = 1, by a central difference
// (five-point stencil with spacing dzeta).
double V_function(const MSKModel& m, const Eigen::VectorXd& q_star, const Eigen::VectorXd& p, const Quadrature& quad,
                  double dzeta = 1e-2);

struct VDerivatives {
  Eigen::VectorXd gradient;
  Eigen::MatrixXd hessian;
};

// One-sided difference estimates of grad V and HV at q_star from quartic fits
// of V along +t x, t = step, ..., 4 step, for x in {e_i, e_i + e_j}.
VDerivatives V_derivatives_fd(const MSKModel& m, const Eigen::VectorXd& q_star, const Quadrature& quad,
                              double step = 1e-3, double dzeta = 1e-2);

struct ParisiParams {
  // zeta_0 = 0 < zeta_1 < ... < zeta_{k+1} = 1
  std::vector<double> zeta;
  // q[l] holds (q_l^s)_s for l = 0, ..., k+2 with q_0 = 0 and q_{k+2} = 1.
  std::vector<Eigen::VectorXd> q;

  int k() const noexcept { return static_cast<int>(zeta.size()) - 2; }
  void validate(int species) const;
};

inline constexpr int kMaxParisiLevels = 3;

double parisi_general(const MSKModel& m, const ParisiParams& params, const Quadrature& quad);

struct SymmetryWitness {
  Eigen::VectorXd x;
  double eps = 0.0;
  double zeta = 1.0;
  double p1rsb = 0.0;
  double prs = 0.0;
  bool boundary_hit = false;

  double gap() const noexcept { return p1rsb - prs; }
};

struct SymmetrySearchOptions {
  double eps_min = 1e-3;
  double eps_max = 1e-1;
  int eps_points = 8;
  double zeta_min = 0.5;
  double zeta_max = 0.999;
  int zeta_points = 16;
  double margin = 1e-8;
};

// Nonnegative x with x^T K x > 0 for K = 2 beta^2 D G D - D, if any.
std::optional<Eigen::VectorXd> breaking_direction(const MSKModel& m, const Eigen::VectorXd& q_star,
                                                  const Quadrature& quad);

// Grid plus golden-section search over (eps, zeta) for P_1RSB(q_star, q_star + eps x, zeta)
// below P_RS - margin. Tries x from breaking_direction first, then the nonnegative
// maximizer of x^T HV x.
std::optional<SymmetryWitness> verify_symmetry_breaking(const MSKModel& m, const Eigen::VectorXd& q_star,
                                                        const Quadrature& quad,
                                                        const SymmetrySearchOptions& opt = {});

struct MonteCarloEstimate {
  double mean = 0.0;
  double se = 0.0;
  int samples = 0;
};

inline constexpr int kMaxExactSpins = 24;

// Species sizes round(lambda_s N), the last species taking the remainder.
std::vector<int> species_sizes(const MSKModel& m, int N);

// (1/N) log Z_N for one disorder draw, by exhaustive spin enumeration.
double finite_N_log_partition(const MSKModel& m, int N, std::uint64_t seed);

MonteCarloEstimate finite_N_free_energy_mc(const MSKModel& m, int N, int n_seeds, std::uint64_t seed = 0,
                                           int jobs = 1);

}  // namespace quenchlab
