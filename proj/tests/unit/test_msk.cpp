#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "brute_force.hpp"
#include "quenchlab/errors.hpp"
#include "quenchlab/msk.hpp"

using namespace quenchlab;

namespace {

const Quadrature& quad() {
  static const Quadrature q;
  return q;
}

double sech4(double x) {
  const double c = std::cosh(x);
  return 1.0 / (c * c * c * c);
}

// Positive definite two-species model with h > 0.
MSKModel random_model(std::mt19937_64& rng, double h) {
  std::uniform_real_distribution<double> lam(0.2, 0.8), diag(0.6, 2.5), beta(0.2, 1.8), cross(0.1, 1.0);
  const double d11 = diag(rng), d22 = diag(rng);
  const double d12 = cross(rng) * std::sqrt(d11 * d22);
  return MSKModel::two_species(lam(rng), d11, d22, d12, beta(rng), h);
}

Eigen::VectorXd vec2(double a, double b) {
  Eigen::VectorXd v(2);
  v << a, b;
  return v;
}

}  // namespace

TEST_CASE("quadrature rule") {
  for (int order : {1, 5, 40, 120, 240}) {
    const Quadrature q(order);
    double s = 0.0;
    for (double w : q.weights()) {
      CHECK(w > 0.0);
      s += w;
    }
    CHECK(std::abs(s - 1.0) <= 1e-14);
  }
  CHECK_THROWS(Quadrature(0));
  auto tanh2 = [](double x) { return std::tanh(x) * std::tanh(x); };
  CHECK(gauss_expect(tanh2, 0.7, 0.0, quad()) == tanh2(0.7));
  CHECK(std::abs(gauss_expect([](double x) { return x * x; }, 0.0, 1.0, quad()) - 1.0) <= 1e-12);
  CHECK(std::abs(gauss_expect([](double x) { return x * x * x * x; }, 0.0, 1.0, quad()) - 3.0) <= 1e-12);
  const double a = gauss_expect(sech4, 0.5, 1.0, Quadrature(kDefaultQuadratureOrder));
  const double b = gauss_expect(sech4, 0.5, 1.0, Quadrature(2 * kDefaultQuadratureOrder));
  CHECK(std::abs(a - b) < 1e-10);
  const double ref = oracle::normal_expect([](double x) { return sech4(0.5 + x); });
  CHECK(std::abs(a - ref) < 1e-10);
}

TEST_CASE("model validation") {
  CHECK_NOTHROW(MSKModel::sk(1.0, 0.0));
  CHECK_THROWS_AS(MSKModel::two_species(1.0, 1, 1, 1, 1, 0), ParameterError);
  MSKModel m = MSKModel::two_species(0.5, 1, 1, 0.5, 1, 0);
  m.delta2(0, 1) = 0.7;
  CHECK_THROWS_AS(m.validate(), ParameterError);
  m = MSKModel::two_species(0.5, 1, 1, 0.5, 1, 0);
  m.lambda = {0.5, 0.6};
  CHECK_THROWS_AS(m.validate(), ParameterError);
  CHECK_THROWS_AS(MSKModel::two_species(0.5, 1, 1, 1, 1, -0.1), ParameterError);
  const MSKModel indefinite = MSKModel::two_species(0.5, 1, 1, 2, 1, 0.3);
  CHECK_FALSE(indefinite.positive_definite());
  CHECK_FALSE(indefinite.warnings().empty());
  const MSKModel pd = MSKModel::two_species(0.5, 2, 2, 1, 1, 0.3);
  CHECK(pd.positive_definite());
  CHECK(pd.warnings().empty());
}

TEST_CASE("RS fixed point below the uniqueness threshold at h = 0 is zero") {
  for (double d12 : {0.5, 1.0}) {
    MSKModel m = MSKModel::two_species(0.4, 1.3, 0.8, d12, 1.0, 0.0);
    m.beta = std::sqrt(0.8 * uniqueness_threshold(m));
    const RSResult r = rs_fixed_point(m, quad());
    CHECK(r.all.size() == 1);
    CHECK(r.point.q.lpNorm<Eigen::Infinity>() <= 1e-8);
  }
}

TEST_CASE("one-species RS point against bisection") {
  const MSKModel m = MSKModel::sk(1.0, 0.0);
  const RSResult r = rs_fixed_point(m, quad());
  const double q = r.point.q(0);
  CHECK(q > 0.1);
  CHECK(r.point.residual <= 1e-10);
  CHECK(std::abs(q - oracle::sk_rs_bisection(1.0, 0.0)) <= 1e-8);
  // zero is also a fixed point and must be reported
  CHECK(r.all.size() == 2);
  CHECK(std::abs(oracle::sk_rs_bisection(0.8, 0.4) - rs_fixed_point(MSKModel::sk(0.8, 0.4), quad()).point.q(0)) <= 1e-8);
}

TEST_CASE("positive field gives positive overlaps and a unique point") {
  std::mt19937_64 rng(11);
  for (int t = 0; t < 50; ++t) {
    const MSKModel m = random_model(rng, 0.5);
    const RSResult r = rs_fixed_point(m, quad());
    CHECK(r.all.size() == 1);
    CHECK(r.point.q.minCoeff() > 0.0);
    CHECK(r.point.residual <= 1e-10);
  }
}

TEST_CASE("RS free energy values") {
  for (double h : {0.0, 0.4}) {
    MSKModel m = MSKModel::two_species(0.3, 1.2, 0.7, 0.5, 0.0, h);
    CHECK(std::abs(rs_free_energy(m, vec2(0.3, 0.6), quad()) - (std::log(2.0) + std::log(std::cosh(h)))) <= 1e-15);
  }
  for (double beta : {0.3, 1.0, 2.0}) {
    const MSKModel sk = MSKModel::sk(beta, 0.0);
    Eigen::VectorXd zero = Eigen::VectorXd::Zero(1);
    CHECK(std::abs(rs_free_energy(sk, zero, quad()) - (std::log(2.0) + beta * beta / 2)) <= 1e-14);
  }
}

TEST_CASE("RS free energy is stationary at fixed points") {
  std::mt19937_64 rng(12);
  for (int t = 0; t < 10; ++t) {
    const MSKModel m = random_model(rng, 0.5);
    const Eigen::VectorXd q = rs_fixed_point(m, quad()).point.q;
    const double h = 1e-5;
    for (int s = 0; s < 2; ++s) {
      Eigen::VectorXd up = q, dn = q;
      up(s) += h;
      dn(s) -= h;
      const double g = (rs_free_energy(m, up, quad()) - rs_free_energy(m, dn, quad())) / (2 * h);
      CHECK(std::abs(g) <= 1e-6);
    }
  }
}

TEST_CASE("uniqueness threshold") {
  const MSKModel sk2 = MSKModel::two_species(0.5, 1, 1, 1, 1, 0);
  CHECK(std::abs(uniqueness_threshold(sk2) - 0.5) <= 1e-12);
  const MSKModel m = MSKModel::two_species(0.6, 2.0, 1.5, 1.0, 1, 0);
  CHECK(std::abs(uniqueness_threshold(m) - 1.0 / (1.8 + std::sqrt(1.32))) <= 1e-14);
  // scaling delta2 by c scales the threshold by 1/c
  for (double c : {0.5, 3.0}) {
    const MSKModel s = MSKModel::two_species(0.6, 2.0 * c, 1.5 * c, c, 1, 0);
    CHECK(std::abs(uniqueness_threshold(s) * c - uniqueness_threshold(m)) <= 1e-14);
  }
  CHECK_THROWS_AS(uniqueness_threshold(MSKModel::sk(1, 0)), ParameterError);
}

TEST_CASE("AT check reduces to the one-species condition") {
  for (double beta : {0.4, 0.9, 1.5}) {
    const MSKModel m = MSKModel::two_species(0.5, 1, 1, 1, beta, 0.5);
    const Eigen::VectorXd q = rs_fixed_point(m, quad()).point.q;
    CHECK(std::abs(q(0) - q(1)) <= 1e-9);
    const ATCheck at = at_line_check(m, q, quad());
    const double Q1 = species_Q(m, q)(0);
    const double e4 = gauss_expect(sech4, m.h, beta * std::sqrt(Q1), quad());
    CHECK(std::abs(at.threshold_sq - 1.0 / (2.0 * e4)) <= 1e-12);
    CHECK(at.broken == (2 * beta * beta * e4 > 1.0));
  }
}

TEST_CASE("AT check at small beta and small field") {
  const MSKModel cold = MSKModel::two_species(0.3, 1.7, 0.9, 0.6, 0.05, 0.5);
  const ATCheck a = at_line_check(cold, rs_fixed_point(cold, quad()).point.q, quad());
  CHECK_FALSE(a.broken);
  CHECK(a.threshold_sq >= uniqueness_threshold(cold));

  MSKModel weak = MSKModel::two_species(0.3, 1.7, 0.9, 0.6, 1.0, 1e-4);
  weak.beta = std::sqrt(0.5 * uniqueness_threshold(weak));
  const Eigen::VectorXd q = rs_fixed_point(weak, quad()).point.q;
  const ATCheck b = at_line_check(weak, q, quad());
  CHECK(std::abs(b.threshold_sq - uniqueness_threshold(weak)) <= 1e-3);
  MSKModel zero_field = weak;
  zero_field.h = 0.0;
  CHECK_THROWS_AS(at_line_check(zero_field, q, quad()), ParameterError);
}

TEST_CASE("Hessian of V") {
  std::mt19937_64 rng(13);
  const MSKModel m = random_model(rng, 0.5);
  const Eigen::VectorXd q = rs_fixed_point(m, quad()).point.q;
  const Eigen::MatrixXd H = hessian_V(m, q, quad());
  CHECK((H - H.transpose()).norm() == 0.0);
  const VDerivatives fd = V_derivatives_fd(m, q, quad());
  CHECK((fd.hessian - H).cwiseAbs().maxCoeff() <= 1e-4 * H.cwiseAbs().maxCoeff());
  CHECK(fd.gradient.lpNorm<Eigen::Infinity>() <= 1e-6);
  CHECK(std::abs(V_function(m, q, q, quad())) <= 1e-9);
}

TEST_CASE("one-level functional reductions") {
  std::mt19937_64 rng(14);
  std::uniform_real_distribution<double> u(0.0, 1.0), z(0.05, 0.95);
  for (int t = 0; t < 20; ++t) {
    const MSKModel m = random_model(rng, 0.1 + u(rng));
    const Eigen::VectorXd q = vec2(0.8 * u(rng), 0.8 * u(rng));
    const Eigen::VectorXd p = q + vec2(0.2 * u(rng), 0.2 * u(rng));
    const double rs = rs_free_energy(m, q, quad());
    CHECK(std::abs(parisi_1rsb(m, q, p, 1.0, quad()) - rs) <= 1e-10);
    CHECK(std::abs(parisi_1rsb(m, q, q, z(rng), quad()) - rs) <= 1e-10);

    ParisiParams k0{{0.0, 1.0}, {Eigen::VectorXd::Zero(2), q, Eigen::VectorXd::Ones(2)}};
    CHECK(std::abs(parisi_general(m, k0, quad()) - rs) <= 1e-10);
    const double zeta = z(rng);
    ParisiParams k1{{0.0, zeta, 1.0}, {Eigen::VectorXd::Zero(2), q, p, Eigen::VectorXd::Ones(2)}};
    CHECK(std::abs(parisi_general(m, k1, quad()) - parisi_1rsb(m, q, p, zeta, quad())) <= 1e-10);
  }
  MSKModel hot = MSKModel::two_species(0.4, 1, 1, 0.5, 0.0, 0.7);
  CHECK(std::abs(parisi_1rsb(hot, vec2(0.1, 0.2), vec2(0.3, 0.4), 0.6, quad()) - (std::log(2.0) + std::log(std::cosh(0.7)))) <=
        1e-14);
  CHECK_THROWS_AS(parisi_1rsb(hot, vec2(0.5, 0.2), vec2(0.3, 0.4), 0.6, quad()), ParameterError);
  CHECK_THROWS_AS(parisi_1rsb(hot, vec2(0.1, 0.2), vec2(0.3, 0.4), 0.0, quad()), ParameterError);
}

TEST_CASE("parisi_general degenerate levels and limits") {
  const MSKModel m = MSKModel::two_species(0.4, 1.4, 0.9, 0.6, 1.1, 0.3);
  const Quadrature coarse(24);
  const Eigen::VectorXd a = vec2(0.35, 0.5);
  const double rs = rs_free_energy(m, a, coarse);
  for (auto zs : {std::vector<double>{0.0, 0.2, 0.7, 1.0}, std::vector<double>{0.0, 0.5, 0.6, 1.0}}) {
    ParisiParams p{zs, {Eigen::VectorXd::Zero(2), a, a, a, Eigen::VectorXd::Ones(2)}};
    CHECK(std::abs(parisi_general(m, p, coarse) - rs) <= 1e-10);
  }
  ParisiParams k4{{0.0, 0.1, 0.2, 0.3, 0.4, 1.0}, std::vector<Eigen::VectorXd>(7, a)};
  k4.q.front() = Eigen::VectorXd::Zero(2);
  k4.q.back() = Eigen::VectorXd::Ones(2);
  CHECK_THROWS_AS(parisi_general(m, k4, coarse), SizeError);
  ParisiParams bad{{0.0, 0.6, 0.4, 1.0}, {Eigen::VectorXd::Zero(2), a, a, a, Eigen::VectorXd::Ones(2)}};
  CHECK_THROWS_AS(parisi_general(m, bad, coarse), ParameterError);
}

TEST_CASE("symmetry breaking search") {
  MSKModel m = MSKModel::two_species(0.5, 2, 2, 1, 1, 0.5);
  const double bsq = at_line_beta_sq(m, quad());
  m.beta = std::sqrt(0.5 * bsq);
  const Eigen::VectorXd q_lo = rs_fixed_point(m, quad()).point.q;
  CHECK_FALSE(at_line_check(m, q_lo, quad()).broken);
  CHECK_FALSE(verify_symmetry_breaking(m, q_lo, quad()).has_value());

  m.beta = std::sqrt(1.5 * bsq);
  const Eigen::VectorXd q_hi = rs_fixed_point(m, quad()).point.q;
  CHECK(at_line_check(m, q_hi, quad()).broken);
  const auto dir = breaking_direction(m, q_hi, quad());
  REQUIRE(dir.has_value());
  CHECK(dir->minCoeff() >= 0.0);
  const auto w = verify_symmetry_breaking(m, q_hi, quad());
  REQUIRE(w.has_value());
  CHECK(w->x.minCoeff() >= 0.0);
  CHECK(w->p1rsb < w->prs - 1e-8);
  CHECK(std::abs(w->prs - rs_free_energy(m, q_hi, quad())) <= 1e-14);
  CHECK(std::abs(w->p1rsb - parisi_1rsb(m, q_hi, q_hi + w->eps * w->x, w->zeta, quad())) <= 1e-14);
  CHECK((w->zeta >= 0.5 && w->zeta < 1.0));
}

TEST_CASE("quadrature order doubling leaves reported scalars stable") {
  const Quadrature fine(2 * kDefaultQuadratureOrder);
  std::mt19937_64 rng(15);
  for (int t = 0; t < 5; ++t) {
    const MSKModel m = random_model(rng, 0.5);
    const Eigen::VectorXd qa = rs_fixed_point(m, quad()).point.q;
    const Eigen::VectorXd qb = rs_fixed_point(m, fine).point.q;
    CHECK((qa - qb).lpNorm<Eigen::Infinity>() < 1e-8);
    CHECK(std::abs(rs_free_energy(m, qa, quad()) - rs_free_energy(m, qb, fine)) < 1e-8);
    const ATCheck a = at_line_check(m, qa, quad()), b = at_line_check(m, qb, fine);
    CHECK(std::abs(a.gamma1 - b.gamma1) < 1e-8);
    CHECK(std::abs(a.gamma2 - b.gamma2) < 1e-8);
    CHECK(std::abs(a.threshold_sq - b.threshold_sq) < 1e-8 * std::max(1.0, a.threshold_sq));
  }
}

TEST_CASE("finite N at beta = 0") {
  const MSKModel m = MSKModel::two_species(0.5, 1, 1, 0.5, 0.0, 0.6);
  for (std::uint64_t s = 0; s < 5; ++s)
    CHECK(std::abs(finite_N_log_partition(m, 10, s) - (std::log(2.0) + std::log(std::cosh(0.6)))) <= 1e-14);
  CHECK_THROWS_AS(finite_N_log_partition(m, kMaxExactSpins + 1, 0), SizeError);
  CHECK(species_sizes(m, 16) == std::vector<int>{8, 8});
  CHECK(species_sizes(MSKModel::two_species(0.3, 1, 1, 0.5, 1, 0), 10) == std::vector<int>{3, 7});
}

TEST_CASE("finite N free energy sits below the variational bound") {
  const MSKModel m = MSKModel::two_species(0.5, 1.5, 1.0, 0.6, 1.0, 0.3);
  REQUIRE(m.positive_definite());
  const int N = 16;
  const MonteCarloEstimate mc = finite_N_free_energy_mc(m, N, 200, 7);
  double bound = std::numeric_limits<double>::infinity();
  const Quadrature coarse(60);
  for (double a = 0.0; a <= 1.0; a += 0.1)
    for (double b = 0.0; b <= 1.0; b += 0.1) {
      const Eigen::VectorXd q = vec2(a, b);
      bound = std::min(bound, rs_free_energy(m, q, coarse));
      for (double zeta : {0.5, 0.8})
        bound = std::min(bound, parisi_1rsb(m, q, (q.array() + 0.2).min(1.0).matrix(), zeta, coarse));
    }
  CHECK(mc.mean <= bound + 3 * mc.se + 2.0 / N);
}

TEST_CASE("Monte Carlo standard error scales like one over root n") {
  const MSKModel m = MSKModel::two_species(0.5, 1.5, 1.0, 0.6, 1.0, 0.3);
  const MonteCarloEstimate a = finite_N_free_energy_mc(m, 10, 100, 3);
  const MonteCarloEstimate b = finite_N_free_energy_mc(m, 10, 200, 3);
  const MonteCarloEstimate c = finite_N_free_energy_mc(m, 10, 400, 3);
  CHECK(std::abs(b.se / a.se - 1.0 / std::sqrt(2.0)) <= 0.3 / std::sqrt(2.0));
  CHECK(std::abs(c.se / a.se - 0.5) <= 0.3 * 0.5);
  CHECK(a.samples == 100);
}
