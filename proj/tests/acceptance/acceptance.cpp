// Acceptance checks: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "brute_force.hpp"
#include "quenchlab/growth.hpp"
#include "quenchlab/msk.hpp"
#include "quenchlab/polymer.hpp"
#include "quenchlab/pspm.hpp"

using namespace quenchlab;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct MeanSe {
  double mean = 0.0;
  double se = 0.0;
};

MeanSe mean_se(const std::vector<double>& v) {
  const double n = static_cast<double>(v.size());
  const double m = std::accumulate(v.begin(), v.end(), 0.0) / n;
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return {m, std::sqrt(ss / (n - 1) / n)};
}

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0, double d = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c, d);
  return buf;
}

double pmf_gap(const LatticePMF& f, const std::map<Coord, double>& ref) {
  double d = 0.0;
  for (const Atom& a : f.atoms()) {
    const auto it = ref.find(a.x);
    d = std::max(d, std::abs(a.mass - (it == ref.end() ? 0.0 : it->second)));
  }
  for (const auto& [x, m] : ref) d = std::max(d, std::abs(f.mass_at(x) - m));
  return d;
}

Outcome polymer_brute_force() {
  std::mt19937_64 rng(20240601);
  const double betas[] = {0.0, 0.5, 1.0, 3.0};
  double worst = 0.0;
  for (int t = 0; t < 50; ++t) {
    const int d = 1 + t % 2;
    const int n = 1 + static_cast<int>(rng() % static_cast<std::uint64_t>(d == 1 ? 6 : 4));
    const double beta = betas[rng() % 4];
    const Environment env = sample_environment(DistSpec::gaussian(), d, n, rng());
    const PolymerRun run = forward_measures(env, beta);
    const auto ref = oracle::enumerate_polymer(env, n, beta);
    worst = std::max(worst, std::abs(run.log_partition() - ref.log_z));
    worst = std::max(worst, pmf_gap(run.forward(n), ref.endpoint));
    for (int i = 0; i <= n; ++i) worst = std::max(worst, pmf_gap(run.marginal(i), ref.marginal[static_cast<std::size_t>(i)]));
  }
  return {worst <= 1e-10, fmt("max deviation %.2e over 50 instances", worst)};
}

Outcome annealed_bound() {
  std::vector<double> F;
  for (std::uint64_t s = 0; s < 200; ++s)
    F.push_back(free_energy(forward_measures(sample_environment(DistSpec::gaussian(), 1, 50, 1000 + s), 1.0)));
  const MeanSe m = mean_se(F);
  const double margin = 0.5 - m.mean;
  return {margin >= 3 * m.se, fmt("mean F_n %.5f, beta^2/2 - mean = %.5f, 3 SE = %.5f", m.mean, margin, 3 * m.se)};
}

Outcome martingale_mean() {
  std::vector<double> W;
  for (std::uint64_t s = 0; s < 2000; ++s)
    W.push_back(normalized_partition(forward_measures(sample_environment(DistSpec::gaussian(), 1, 20, 5000 + s), 0.3)));
  const MeanSe m = mean_se(W);
  return {std::abs(m.mean - 1.0) <= 3 * m.se, fmt("mean W_n %.5f, SE %.5f", m.mean, m.se)};
}

Outcome overlap_identity() {
  const double beta = 1.0, db = 0.05;
  const int n = 64, seeds = 500;
  std::vector<double> lhs, rhs;
  for (int s = 0; s < seeds; ++s) {
    const Environment env = sample_environment(DistSpec::gaussian(), 1, n, 90000 + static_cast<std::uint64_t>(s));
    lhs.push_back(beta * (1.0 - replica_overlap(forward_measures(env, beta))));
    const PolymerOptions no_marg{false};
    const double up = free_energy(forward_measures(env, beta + db, WalkKernel::simple(1), no_marg));
    const double dn = free_energy(forward_measures(env, beta - db, WalkKernel::simple(1), no_marg));
    rhs.push_back((up - dn) / (2 * db));
  }
  const MeanSe l = mean_se(lhs), r = mean_se(rhs);
  const double bound = 3 * (l.se + r.se) + 0.1 * std::abs(r.mean);
  const double gap = std::abs(l.mean - r.mean);
  return {gap <= bound, fmt("lhs %.5f, rhs %.5f, |diff| %.5f <= %.5f", l.mean, r.mean, gap, bound)};
}

PSPM random_pspm(std::mt19937_64& rng, int atoms, bool unit) {
  const int dim = 1 + static_cast<int>(rng() % 2);
  if (atoms == 0) return PSPM(dim);
  std::uniform_int_distribution<int> pos(-2, 2);
  std::exponential_distribution<double> w(1.0);
  std::uniform_real_distribution<double> scale(0.1, 1.0);
  std::vector<std::vector<Atom>> raw(3);
  std::vector<double> m(static_cast<std::size_t>(atoms));
  for (double& x : m) x = w(rng);
  const double s = std::accumulate(m.begin(), m.end(), 0.0);
  const double total = unit ? 1.0 : scale(rng);
  for (int k = 0; k < atoms; ++k)
    raw[rng() % 3].push_back({Coord{pos(rng), dim == 2 ? pos(rng) : 0}, total * m[static_cast<std::size_t>(k)] / s});
  std::vector<LatticePMF> copies;
  for (auto& c : raw)
    if (!c.empty()) copies.emplace_back(dim, c);
  return PSPM(dim, copies);
}

PSPM moved(const PSPM& f, std::mt19937_64& rng) {
  std::uniform_int_distribution<int> shift(-9, 9);
  std::vector<LatticePMF> copies;
  for (const LatticePMF& c : f.copies()) {
    const Coord t{shift(rng), f.dim() == 2 ? shift(rng) : 0};
    std::vector<Atom> a;
    for (const Atom& x : c.atoms()) a.push_back({x.x + t, x.mass});
    copies.emplace_back(f.dim(), a);
  }
  std::reverse(copies.begin(), copies.end());
  return PSPM(f.dim(), copies);
}

Outcome metric_axioms() {
  std::mt19937_64 rng(77);
  int asym = 0, tri = 0, moved_nonzero = 0;
  double worst_tri = -1e300;
  for (int t = 0; t < 200; ++t) {
    PSPM f = random_pspm(rng, static_cast<int>(rng() % 6), false);
    const int dim = f.dim();
    auto same_dim = [&](int atoms) {
      for (;;) {
        PSPM g = random_pspm(rng, atoms, false);
        if (g.dim() == dim) return g;
      }
    };
    const PSPM g = same_dim(static_cast<int>(rng() % 6)), h = same_dim(static_cast<int>(rng() % 6));
    const double fg = d_alpha(f, g, 2.0, MetricMode::exact_small), gf = d_alpha(g, f, 2.0, MetricMode::exact_small);
    const double fh = d_alpha(f, h, 2.0, MetricMode::exact_small), gh = d_alpha(g, h, 2.0, MetricMode::exact_small);
    asym += fg != gf;
    worst_tri = std::max(worst_tri, fh - fg - gh);
    tri += fh > fg + gh + 1e-12;
    moved_nonzero += d_alpha(f, moved(f, rng), 2.0, MetricMode::exact_small) != 0.0;
  }
  return {asym == 0 && tri == 0 && moved_nonzero == 0,
          fmt("asymmetric %g, triangle violations %g (worst excess %.1e), nonzero moved %g", asym, tri, worst_tri, moved_nonzero)};
}

Outcome mass_classes() {
  std::mt19937_64 rng(91);
  double worst = 0.0;
  int nonzero = 0;
  for (int t = 0; t < 100; ++t) {
    const PSPM f = random_pspm(rng, 1 + static_cast<int>(rng() % 5), true);
    const PSPM F = update_map_sample(f, 1.5, WalkKernel::simple(f.dim()), DistSpec::gaussian(), rng());
    worst = std::max(worst, std::abs(F.norm() - 1.0));
    const PSPM Z = update_map_sample(PSPM(f.dim()), 1.5, WalkKernel::simple(f.dim()), DistSpec::gaussian(), rng());
    nonzero += !Z.empty();
  }
  return {worst <= 1e-12 && nonzero == 0, fmt("max | ||F|| - 1 | = %.2e, nonzero images of 0: %g", worst, nonzero)};
}

Outcome sk_reduction() {
  const double b = uniqueness_threshold(MSKModel::two_species(0.5, 1.0, 1.0, 1.0, 1.0, 0.0));
  return {std::abs(b - 0.5) <= 1e-12, fmt("beta_0^2 = %.15f", b)};
}

MSKModel random_model(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> lam(0.25, 0.75), diag(0.7, 2.2), beta(0.4, 1.6), cross(0.2, 0.9);
  const double d11 = diag(rng), d22 = diag(rng);
  return MSKModel::two_species(lam(rng), d11, d22, cross(rng) * std::sqrt(d11 * d22), beta(rng), 0.5);
}

Outcome hessian_formula() {
  const Quadrature quad;
  std::mt19937_64 rng(1234);
  double worst = 0.0;
  for (int t = 0; t < 5; ++t) {
    const MSKModel m = random_model(rng);
    const Eigen::VectorXd q = rs_fixed_point(m, quad).point.q;
    const Eigen::MatrixXd H = hessian_V(m, q, quad);
    const Eigen::MatrixXd fd = V_derivatives_fd(m, q, quad).hessian;
    worst = std::max(worst, (fd - H).cwiseAbs().maxCoeff() / H.cwiseAbs().maxCoeff());
  }
  return {worst <= 1e-4, fmt("max relative deviation %.2e over 5 models", worst)};
}

Outcome rs_consistency() {
  const Quadrature quad;
  std::mt19937_64 rng(4321);
  std::uniform_real_distribution<double> u(0.0, 1.0), z(0.05, 0.95);
  double worst_rs = 0.0, worst_k1 = 0.0;
  for (int t = 0; t < 20; ++t) {
    MSKModel m = random_model(rng);
    m.h = 0.1 + u(rng);
    Eigen::VectorXd q(2), p(2);
    q << 0.8 * u(rng), 0.8 * u(rng);
    p << q(0) + 0.2 * u(rng), q(1) + 0.2 * u(rng);
    worst_rs = std::max(worst_rs, std::abs(parisi_1rsb(m, q, p, 1.0, quad) - rs_free_energy(m, q, quad)));
    const double zeta = z(rng);
    const ParisiParams k1{{0.0, zeta, 1.0}, {Eigen::VectorXd::Zero(2), q, p, Eigen::VectorXd::Ones(2)}};
    worst_k1 = std::max(worst_k1, std::abs(parisi_general(m, k1, quad) - parisi_1rsb(m, q, p, zeta, quad)));
  }
  return {worst_rs <= 1e-10 && worst_k1 <= 1e-10, fmt("zeta=1 vs RS %.2e, k=1 vs one-level %.2e", worst_rs, worst_k1)};
}

Outcome symmetry_witness() {
  const Quadrature quad;
  MSKModel m = MSKModel::two_species(0.5, 2.0, 2.0, 1.0, 1.0, 0.5);
  const double at = at_line_beta_sq(m, quad);
  m.beta = std::sqrt(1.5 * at);
  const auto above = verify_symmetry_breaking(m, rs_fixed_point(m, quad).point.q, quad);
  m.beta = std::sqrt(0.5 * at);
  const auto below = verify_symmetry_breaking(m, rs_fixed_point(m, quad).point.q, quad);
  const bool ok_above = above && above->p1rsb < above->prs - 1e-8 && above->x.minCoeff() >= 0.0;
  return {ok_above && !below, fmt("AT beta^2 %.6f; gap at 1.5x %.3e; witness at 0.5x: %g", at, above ? above->gap() : 0.0,
                                  below ? 1.0 : 0.0)};
}

Outcome passage_oracles() {
  int fpp_bad = 0, lpp_bad = 0;
  double dp_worst = 0.0;
  for (std::uint64_t s = 0; s < 25; ++s) {
    const WeightField e = WeightField::sample(FieldKind::edge, Box{0, 2, 0, 2}, DistSpec::exponential(1.0), 300 + s);
    for (const auto& [a, b] : std::vector<std::pair<Coord, Coord>>{{{0, 0}, {2, 2}}, {{0, 2}, {2, 0}}, {{1, 1}, {0, 2}}, {{0, 0}, {2, 1}}})
      fpp_bad += fpp_passage(e, a, b).time != oracle::fpp_enumerate(e, a, b);
    const WeightField v = WeightField::sample(FieldKind::vertex, Box{0, 3, 0, 3}, DistSpec::uniform(0.0, 1.0), 400 + s);
    lpp_bad += oracle::lpp_path_weights(v, {0, 0}, {3, 3}).size() != 20;
    lpp_bad += lpp_passage(v, {0, 0}, {3, 3}).time != oracle::lpp_enumerate(v, {0, 0}, {3, 3});
    const WeightField g = WeightField::sample(FieldKind::vertex, Box{0, 4, 0, 4}, DistSpec::gaussian(), 500 + s);
    for (double beta : {0.5, 1.0, 2.0}) dp_worst = std::max(dp_worst, std::abs(dp_free_energy(g, beta, 4) - oracle::dp_enumerate(g, beta, 4)));
  }
  return {fpp_bad == 0 && lpp_bad == 0 && dp_worst <= 1e-10,
          fmt("FPP mismatches %g, LPP mismatches %g, dp max deviation %.2e", fpp_bad, lpp_bad, dp_worst)};
}

Outcome coupling_invariants() {
  int negative = 0, replicas = 0;
  for (int n : {16, 32}) {
    const Box box = default_box(GrowthModel::fpp, n);
    const WeightField shape = WeightField::constant(FieldKind::edge, box, 0.0);
    const EpsMap eps = eps_radial(shape, n, 1.0);
    for (std::uint64_t r = 0; r < 50; ++r) {
      const WeightField f = WeightField::sample(FieldKind::edge, box, DistSpec::exponential(1.0), 7000 + r);
      const CoupledField c = couple(f, 1, CouplingMode::min, eps.values, 8000 + r);
      const double T = fpp_passage(f, {0, 0}, {n, 0}).time;
      const double Tt = fpp_passage(c.perturbed, {0, 0}, {n, 0}).time;
      negative += T - Tt < 0.0;
      ++replicas;
    }
  }
  const double target = 2.0 * std::sqrt(2.0) / 3.0;
  double worst = 0.0;
  for (const DistSpec& d : {DistSpec::exponential(1.0), DistSpec::uniform(0.0, 1.0)})
    worst = std::max(worst, std::abs(1.0 - hellinger_one_minus_affinity(d, 1, CouplingMode::min, 1.0) - target));
  return {negative == 0 && worst <= 1e-6,
          fmt("negative gaps %g of %g, affinity deviation from 2 sqrt(2)/3: %.2e", negative, replicas, worst)};
}

Outcome fluctuation_growth() {
  FluctuationConfig cfg;
  cfg.model = GrowthModel::fpp;
  cfg.dist = DistSpec::exponential(1.0);
  cfg.n_list = {64, 128, 256};
  cfg.replicas = 200;
  cfg.seed = 2026;
  const FluctuationStats st = fluctuation_experiment(cfg);
  std::vector<double> ratio;
  bool positive = true;
  for (const auto& s : st.summary) {
    positive &= s.shorth > 0.0;
    ratio.push_back(s.shorth / std::sqrt(std::log(static_cast<double>(s.n))));
  }
  int inversions = 0;
  bool small = true;
  for (std::size_t k = 1; k < ratio.size(); ++k)
    if (ratio[k] < ratio[k - 1]) {
      ++inversions;
      small &= ratio[k] >= 0.85 * ratio[k - 1];
    }
  return {positive && inversions <= 1 && small,
          fmt("shorth/sqrt(log n) = %.4f, %.4f, %.4f; inversions %g", ratio[0], ratio[1], ratio[2], inversions)};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"polymer marginals and log Z match path enumeration", polymer_brute_force},
      {"quenched free energy below the annealed bound", annealed_bound},
      {"normalized partition function has mean one", martingale_mean},
      {"overlap identity against the beta derivative of F_n", overlap_identity},
      {"exact d_alpha metric axioms", metric_axioms},
      {"update map preserves mass classes 0 and 1", mass_classes},
      {"two-species threshold reduces to the SK value", sk_reduction},
      {"closed-form HV matches the double finite difference", hessian_formula},
      {"one-level functional reduces to the RS expression", rs_consistency},
      {"symmetry-breaking witness above the AT line only", symmetry_witness},
      {"FPP, LPP and directed polymer against enumeration", passage_oracles},
      {"coupled gaps and Hellinger affinity", coupling_invariants},
      {"shorth width grows at least like sqrt(log n)", fluctuation_growth},
  };
  int failed = 0;
  for (std::size_t k = 0; k < criteria.size(); ++k) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[k].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("%s %2zu %s (%.2f s): %s\n", o.pass ? "PASS" : "FAIL", k + 1, criteria[k].first.c_str(), secs, o.detail.c_str());
    std::fflush(stdout);
    failed += !o.pass;
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
