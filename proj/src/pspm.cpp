#include "quenchlab/pspm.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "quenchlab/assignment.hpp"
#include "quenchlab/errors.hpp"
#include "quenchlab/parallel.hpp"
#include "quenchlab/polymer.hpp"
#include "quenchlab/rng.hpp"

namespace quenchlab {

namespace {

constexpr double kPruneMass = 1e-15;
constexpr std::size_t kTopAtoms = 5;

struct SiteMass {
  Site site;
  double mass;
};

std::vector<SiteMass> flatten(const PSPM& f) {
  std::vector<SiteMass> out;
  for (std::size_t c = 0; c < f.copies().size(); ++c)
    for (const auto& a : f.copies()[c].atoms()) out.push_back({{c, a.x}, a.mass});
  return out;
}

// l1 distance with distinct copies at infinite distance.
int site_distance(const Site& a, const Site& b) {
  return a.copy == b.copy ? l1_dist(a.x, b.x) : kInfiniteDegree;
}

bool same_displacement(const Site& u, const Site& v, const Site& pu, const Site& pv) {
  const bool cross_dom = u.copy != v.copy;
  const bool cross_img = pu.copy != pv.copy;
  if (cross_dom || cross_img) return cross_dom && cross_img;
  return (u.x - v.x) == (pu.x - pv.x);
}

// Largest m allowed by the pair (u -> pu, v -> pv).
int pair_degree(const IsometryPair& a, const IsometryPair& b) {
  if (same_displacement(a.from, b.from, a.to, b.to)) return kInfiniteDegree;
  return std::min(site_distance(a.from, b.from), site_distance(a.to, b.to));
}

double degree_penalty(int deg) { return deg == kInfiniteDegree ? 0.0 : std::ldexp(1.0, -deg); }

double power_sum(const PSPM& f, double alpha) {
  double s = 0.0;
  for (const auto& c : f.copies())
    for (const auto& a : c.atoms()) s += std::pow(a.mass, alpha);
  return s;
}

bool copy_less(const LatticePMF& a, const LatticePMF& b) {
  const double ma = a.total_mass(), mb = b.total_mass();
  if (ma != mb) return ma > mb;
  const auto xa = a.atoms(), xb = b.atoms();
  return std::lexicographical_compare(xa.begin(), xa.end(), xb.begin(), xb.end(), [](const Atom& p, const Atom& q) {
    if (p.x != q.x) return p.x < q.x;
    return p.mass < q.mass;
  });
}

struct ExactSearch {
  std::vector<SiteMass> fs, gs;
  double alpha = 2.0;
  double best = 0.0;
  std::vector<IsometryPair> pairs;
  std::vector<char> used;

  void run(std::size_t k, double partial, int deg) {
    if (partial + degree_penalty(deg) >= best) return;
    if (k == fs.size()) {
      double rest = 0.0;
      for (std::size_t j = 0; j < gs.size(); ++j)
        if (!used[j]) rest += std::pow(gs[j].mass, alpha);
      best = std::min(best, partial + rest + degree_penalty(deg));
      return;
    }
    const double fm = fs[k].mass;
    for (std::size_t j = 0; j < gs.size(); ++j) {
      if (used[j]) continue;
      const IsometryPair p{fs[k].site, gs[j].site};
      int d = deg;
      for (const auto& q : pairs) d = std::min(d, pair_degree(p, q));
      used[j] = 1;
      pairs.push_back(p);
      run(k + 1, partial + alpha * std::abs(fm - gs[j].mass), d);
      pairs.pop_back();
      used[j] = 0;
    }
    run(k + 1, partial + std::pow(fm, alpha), deg);
  }
};

std::vector<const Atom*> top_atoms(const LatticePMF& c, std::size_t k) {
  std::vector<const Atom*> out;
  for (const auto& a : c.atoms()) out.push_back(&a);
  std::stable_sort(out.begin(), out.end(), [](const Atom* a, const Atom* b) { return a->mass > b->mass; });
  if (out.size() > k) out.resize(k);
  return out;
}

// Saving over the empty map when copy `fc` is translated by t onto copy `gc`,
// keeping only atoms whose match is cheaper than leaving both unmatched.
double translation_gain(const LatticePMF& fc, const LatticePMF& gc, const Coord& t, double alpha) {
  double gain = 0.0;
  for (const auto& a : fc.atoms()) {
    const double gm = gc.mass_at(a.x + t);
    if (gm <= 0.0) continue;
    const double b = std::pow(a.mass, alpha) + std::pow(gm, alpha) - alpha * std::abs(a.mass - gm);
    if (b > 0.0) gain += b;
  }
  return gain;
}

struct CopyMatch {
  std::size_t f_copy, g_copy;
  Coord t;
};

// Cost of the partial isometry built from the chosen copy translations.
double matching_cost(std::span<const LatticePMF> fc, std::span<const LatticePMF> gc,
                     const std::vector<CopyMatch>& chosen, double alpha) {
  double cost = 0.0;
  std::vector<std::vector<char>> gtaken(gc.size());
  for (std::size_t j = 0; j < gc.size(); ++j) gtaken[j].assign(gc[j].size(), 0);
  std::vector<const CopyMatch*> of_f(fc.size(), nullptr);
  for (const auto& m : chosen) of_f[m.f_copy] = &m;
  for (std::size_t i = 0; i < fc.size(); ++i) {
    for (const auto& a : fc[i].atoms()) {
      const CopyMatch* m = of_f[i];
      if (m != nullptr) {
        const auto ga = gc[m->g_copy].atoms();
        const Coord y = a.x + m->t;
        const auto it = std::lower_bound(ga.begin(), ga.end(), y, [](const Atom& q, const Coord& c) { return q.x < c; });
        if (it != ga.end() && it->x == y) {
          const double keep = alpha * std::abs(a.mass - it->mass);
          if (keep < std::pow(a.mass, alpha) + std::pow(it->mass, alpha)) {
            cost += keep;
            gtaken[m->g_copy][static_cast<std::size_t>(it - ga.begin())] = 1;
            continue;
          }
        }
      }
      cost += std::pow(a.mass, alpha);
    }
  }
  for (std::size_t j = 0; j < gc.size(); ++j) {
    const auto ga = gc[j].atoms();
    for (std::size_t k = 0; k < ga.size(); ++k)
      if (!gtaken[j][k]) cost += std::pow(ga[k].mass, alpha);
  }
  return cost;
}

double upper_metric(const PSPM& f, const PSPM& g, double alpha) {
  const double base = power_sum(f, alpha) + power_sum(g, alpha);
  if (f.empty() || g.empty()) return base;
  const auto fc = f.copies();
  const auto gc = g.copies();
  std::vector<std::vector<const Atom*>> ftop, gtop;
  for (const auto& c : fc) ftop.push_back(top_atoms(c, kTopAtoms));
  for (const auto& c : gc) gtop.push_back(top_atoms(c, kTopAtoms));

  auto best_translation = [&](std::size_t a, std::size_t b, Coord& arg) {
    double best = 0.0;
    for (const Atom* x : ftop[a])
      for (const Atom* y : gtop[b]) {
        const Coord t = y->x - x->x;
        const double v = translation_gain(fc[a], gc[b], t, alpha);
        if (v > best) {
          best = v;
          arg = t;
        }
      }
    return best;
  };

  std::vector<SiteMass> fl = flatten(f), gl = flatten(g);
  auto by_mass = [](const SiteMass& a, const SiteMass& b) { return a.mass > b.mass; };
  std::stable_sort(fl.begin(), fl.end(), by_mass);
  std::stable_sort(gl.begin(), gl.end(), by_mass);
  fl.resize(std::min(fl.size(), kTopAtoms));
  gl.resize(std::min(gl.size(), kTopAtoms));

  double result = base;
  for (const auto& a : fl) {
    for (const auto& b : gl) {
      std::vector<char> fused(fc.size(), 0), gused(gc.size(), 0);
      std::vector<CopyMatch> chosen{{a.site.copy, b.site.copy, b.site.x - a.site.x}};
      fused[a.site.copy] = 1;
      gused[b.site.copy] = 1;
      for (;;) {
        double step = 0.0;
        CopyMatch pick{};
        for (std::size_t i = 0; i < fc.size(); ++i) {
          if (fused[i]) continue;
          for (std::size_t j = 0; j < gc.size(); ++j) {
            if (gused[j]) continue;
            Coord t{0, 0};
            const double s = best_translation(i, j, t);
            if (s > step) {
              step = s;
              pick = {i, j, t};
            }
          }
        }
        if (step <= 0.0) break;
        chosen.push_back(pick);
        fused[pick.f_copy] = 1;
        gused[pick.g_copy] = 1;
      }
      result = std::min(result, matching_cost(fc, gc, chosen, alpha));
    }
  }
  return result;
}

// log F~ for one disorder draw; fills `out` with the updated measure if given.
double log_tilde(const PSPM& f, double beta, const WalkKernel& walk, const DistSpec& dist, double lambda,
                 const KeyedStream& stream, PSPM* out) {
  std::vector<std::vector<Atom>> logw(f.copies().size());
  double peak = -std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < f.copies().size(); ++c) {
    std::vector<Atom> num;
    for (const auto& a : f.copies()[c].atoms())
      for (const auto& s : walk.steps())
        if (s.prob > 0.0) num.push_back({a.x + s.dz, a.mass * s.prob});
    const LatticePMF merged(f.dim(), std::move(num));
    for (const auto& a : merged.atoms()) {
      const double w = dist.draw(stream, SiteKey{static_cast<std::int64_t>(c), a.x[0], a.x[1], 0});
      const double lw = std::log(a.mass) + beta * w;
      logw[c].push_back({a.x, lw});
      peak = std::max(peak, lw);
    }
  }
  const double deficit = std::max(0.0, 1.0 - f.norm());
  const double ld = deficit > 0.0 ? std::log(deficit) + lambda : -std::numeric_limits<double>::infinity();
  peak = std::max(peak, ld);
  double total = deficit > 0.0 ? std::exp(ld - peak) : 0.0;
  for (const auto& c : logw)
    for (const auto& a : c) total += std::exp(a.mass - peak);
  const double log_den = peak + std::log(total);
  if (out) {
    std::vector<LatticePMF> copies;
    for (const auto& c : logw) {
      std::vector<Atom> atoms;
      for (const auto& a : c) {
        const double m = std::exp(a.mass - log_den);
        if (m >= kPruneMass) atoms.push_back({a.x, m});
      }
      copies.emplace_back(f.dim(), std::move(atoms));
    }
    *out = PSPM(f.dim(), std::move(copies));
  }
  return log_den;
}

}  // namespace

PSPM::PSPM(int dim, std::vector<LatticePMF> copies) : dim_(dim) {
  if (dim_ != 1 && dim_ != 2) throw ParameterError("PSPM dimension must be 1 or 2");
  double total = 0.0;
  for (auto& c : copies) {
    if (c.dim() != dim_) throw ParameterError("PSPM copy dimension mismatch");
    if (c.empty()) continue;
    total += c.total_mass();
    copies_.push_back(std::move(c));
  }
  if (total > 1.0 + 1e-12) throw ParameterError("PSPM total mass exceeds 1");
}

PSPM PSPM::from_pmf(const LatticePMF& f) { return PSPM(f.dim(), {f}); }

std::size_t PSPM::atom_count() const noexcept {
  std::size_t n = 0;
  for (const auto& c : copies_) n += c.size();
  return n;
}

double PSPM::norm() const {
  double s = 0.0;
  for (const auto& c : copies_) s += c.total_mass();
  return s;
}

bool operator==(const PSPM& a, const PSPM& b) {
  if (a.dim_ != b.dim_ || a.copies_.size() != b.copies_.size()) return false;
  for (std::size_t c = 0; c < a.copies_.size(); ++c) {
    const auto xa = a.copies_[c].atoms(), xb = b.copies_[c].atoms();
    if (!std::equal(xa.begin(), xa.end(), xb.begin(), xb.end(),
                    [](const Atom& p, const Atom& q) { return p.x == q.x && p.mass == q.mass; }))
      return false;
  }
  return true;
}

void to_json(nlohmann::json& j, const PSPM& f) {
  nlohmann::json copies = nlohmann::json::array();
  for (const auto& c : f.copies()) {
    nlohmann::json atoms = nlohmann::json::array();
    for (const auto& a : c.atoms()) {
      nlohmann::json x = f.dim() == 1 ? nlohmann::json::array({a.x[0]}) : nlohmann::json::array({a.x[0], a.x[1]});
      atoms.push_back({{"x", x}, {"m", a.mass}});
    }
    copies.push_back(atoms);
  }
  j = {{"d", f.dim()}, {"copies", copies}};
}

void from_json(const nlohmann::json& j, PSPM& f) {
  const int d = j.at("d").get<int>();
  if (d != 1 && d != 2) throw ParameterError("PSPM JSON: d must be 1 or 2");
  std::vector<LatticePMF> copies;
  for (const auto& c : j.at("copies")) {
    std::vector<Atom> atoms;
    for (const auto& a : c) {
      const auto& x = a.at("x");
      if (x.size() != static_cast<std::size_t>(d)) throw ParameterError("PSPM JSON: coordinate length differs from d");
      const double m = a.at("m").get<double>();
      if (!(m > 0.0)) throw ParameterError("PSPM JSON: atom masses must be positive");
      atoms.push_back({{x[0].get<int>(), d == 2 ? x[1].get<int>() : 0}, m});
    }
    copies.emplace_back(d, std::move(atoms));
  }
  f = PSPM(d, std::move(copies));
}

PSPM canonicalize(const PSPM& f) {
  std::vector<LatticePMF> copies;
  for (const auto& c : f.copies()) {
    const Atom* top = &c.atoms().front();
    for (const auto& a : c.atoms())
      if (a.mass > top->mass) top = &a;
    const Coord shift = top->x;
    std::vector<Atom> atoms;
    for (const auto& a : c.atoms()) atoms.push_back({a.x - shift, a.mass});
    copies.emplace_back(f.dim(), std::move(atoms));
  }
  std::stable_sort(copies.begin(), copies.end(), copy_less);
  return PSPM(f.dim(), std::move(copies));
}

int isometry_degree(std::span<const IsometryPair> map) {
  int deg = kInfiniteDegree;
  for (std::size_t i = 0; i < map.size(); ++i) {
    for (std::size_t j = i + 1; j < map.size(); ++j) {
      if (map[i].from == map[j].from || map[i].to == map[j].to)
        throw ParameterError("isometry must be an injective function");
      deg = std::min(deg, pair_degree(map[i], map[j]));
    }
  }
  return deg;
}

double d_alpha_phi(const PSPM& f, const PSPM& g, std::span<const IsometryPair> map, double alpha) {
  if (!(alpha > 1.0)) throw ParameterError("alpha must be > 1");
  auto mass = [](const PSPM& h, const Site& s) {
    return s.copy < h.copies().size() ? h.copies()[s.copy].mass_at(s.x) : 0.0;
  };
  double total = 0.0;
  for (const auto& p : map) total += alpha * std::abs(mass(f, p.from) - mass(g, p.to));
  for (const auto& s : flatten(f))
    if (std::none_of(map.begin(), map.end(), [&](const IsometryPair& p) { return p.from == s.site; }))
      total += std::pow(s.mass, alpha);
  for (const auto& s : flatten(g))
    if (std::none_of(map.begin(), map.end(), [&](const IsometryPair& p) { return p.to == s.site; }))
      total += std::pow(s.mass, alpha);
  return total + degree_penalty(isometry_degree(map));
}

namespace {

// Total order on canonical forms; used so d(f, g) and d(g, f) run the same arithmetic.
bool canonical_less(const PSPM& a, const PSPM& b) {
  const auto ca = a.copies(), cb = b.copies();
  return std::lexicographical_compare(ca.begin(), ca.end(), cb.begin(), cb.end(),
                                      [](const LatticePMF& p, const LatticePMF& q) {
                                        if (copy_less(p, q)) return true;
                                        if (copy_less(q, p)) return false;
                                        return p.atoms().size() < q.atoms().size();
                                      });
}

}  // namespace

double d_alpha(const PSPM& f_in, const PSPM& g_in, double alpha, MetricMode mode) {
  if (!(alpha > 1.0)) throw ParameterError("alpha must be > 1");
  if (f_in.dim() != g_in.dim()) throw ParameterError("d_alpha: dimension mismatch");
  PSPM f = canonicalize(f_in), g = canonicalize(g_in);
  if (canonical_less(g, f)) std::swap(f, g);
  if (mode == MetricMode::upper) return upper_metric(f, g, alpha);
  if (f.atom_count() > kExactMetricAtoms || g.atom_count() > kExactMetricAtoms)
    throw SizeError("d_alpha exact_small supports at most 8 atoms per argument; use upper mode");
  ExactSearch s;
  s.fs = flatten(f);
  s.gs = flatten(g);
  // Heavier atoms first tightens the bound earlier.
  auto by_mass = [](const SiteMass& a, const SiteMass& b) { return a.mass > b.mass; };
  std::stable_sort(s.fs.begin(), s.fs.end(), by_mass);
  s.alpha = alpha;
  s.best = std::numeric_limits<double>::infinity();
  s.used.assign(s.gs.size(), 0);
  s.run(0, 0.0, kInfiniteDegree);
  return s.best;
}

PSPM update_map_sample(const PSPM& f, double beta, const WalkKernel& walk, const DistSpec& dist,
                       std::uint64_t seed) {
  if (walk.dim() != f.dim()) throw ParameterError("walk and PSPM dimensions differ");
  const double lambda = log_mgf(dist, beta);
  if (f.empty()) return PSPM(f.dim());
  PSPM out(f.dim());
  log_tilde(f, beta, walk, dist, lambda, KeyedStream(seed), &out);
  return out;
}

Estimate R_functional(const PSPM& f, double beta, const WalkKernel& walk, const DistSpec& dist, int n_mc,
                      std::uint64_t seed) {
  if (n_mc < 2) throw ParameterError("R_functional needs n_mc >= 2");
  if (walk.dim() != f.dim()) throw ParameterError("walk and PSPM dimensions differ");
  const double lambda = log_mgf(dist, beta);
  log_mgf(dist, 2.0 * beta);
  if (f.empty()) return {lambda, 0.0};
  if (beta == 0.0) return {0.0, 0.0};
  std::vector<double> v(static_cast<std::size_t>(n_mc));
  for (int r = 0; r < n_mc; ++r)
    v[static_cast<std::size_t>(r)] = log_tilde(f, beta, walk, dist, lambda, KeyedStream(seed, static_cast<std::uint64_t>(r) + 1), nullptr);
  const double mean = std::accumulate(v.begin(), v.end(), 0.0) / n_mc;
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return {mean, std::sqrt(ss / (n_mc - 1) / n_mc)};
}

EmpiricalMeasure empirical_from_run(const PolymerRun& run) {
  EmpiricalMeasure rho;
  for (int i = 0; i < run.horizon(); ++i) rho.atoms.push_back(canonicalize(PSPM::from_pmf(run.forward(i))));
  return rho;
}

double wasserstein_estimate(const EmpiricalMeasure& rho, const EmpiricalMeasure& rho2, double alpha, int jobs) {
  const std::size_t n = rho.atoms.size(), m = rho2.atoms.size();
  if (n == 0 || m == 0) throw ParameterError("wasserstein_estimate needs nonempty empirical measures");
  std::vector<double> base(n * m);
  parallel_for(n * m, jobs, [&](std::size_t k) {
    base[k] = d_alpha(rho.atoms[k / m], rho2.atoms[k % m], alpha, MetricMode::upper);
  });
  const std::size_t L = std::lcm(n, m);
  const std::size_t rn = L / n, rm = L / m;
  std::vector<double> cost(L * L);
  for (std::size_t i = 0; i < L; ++i)
    for (std::size_t j = 0; j < L; ++j) cost[i * L + j] = base[(i / rn) * m + j / rm];
  return solve_assignment(cost, L).cost / static_cast<double>(L);
}

Estimate wasserstein_update_proxy(const EmpiricalMeasure& rho, double beta, const WalkKernel& walk,
                                  const DistSpec& dist, double alpha, int repetitions, std::uint64_t seed, int jobs) {
  if (repetitions < 1) throw ParameterError("repetitions must be >= 1");
  std::vector<double> w(static_cast<std::size_t>(repetitions));
  for (int r = 0; r < repetitions; ++r) {
    const KeyedStream stream(seed, static_cast<std::uint64_t>(r) + 1);
    EmpiricalMeasure moved;
    for (std::size_t i = 0; i < rho.atoms.size(); ++i)
      moved.atoms.push_back(canonicalize(update_map_sample(rho.atoms[i], beta, walk, dist,
                                                           stream.bits(SiteKey{static_cast<std::int64_t>(i)}))));
    w[static_cast<std::size_t>(r)] = wasserstein_estimate(rho, moved, alpha, jobs);
  }
  const double mean = std::accumulate(w.begin(), w.end(), 0.0) / repetitions;
  double ss = 0.0;
  for (double x : w) ss += (x - mean) * (x - mean);
  return {mean, repetitions > 1 ? std::sqrt(ss / (repetitions - 1) / repetitions) : 0.0};
}

}  // namespace quenchlab
