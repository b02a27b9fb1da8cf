#include "quenchlab/localize.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <ostream>

#include "quenchlab/csv.hpp"
#include "quenchlab/errors.hpp"

namespace quenchlab {

namespace {

constexpr std::size_t kExactAtoms = 20;

struct CliqueSearch {
  std::vector<double> mass;
  std::vector<std::uint32_t> adj;
  double target = 0.0;
  double best = 0.0;

  double mass_of(std::uint32_t set) const {
    double s = 0.0;
    for (std::size_t v = 0; v < mass.size(); ++v)
      if (set >> v & 1u) s += mass[v];
    return s;
  }

  void run(double current, std::uint32_t cand) {
    if (best > target) return;
    if (cand == 0) {
      best = std::max(best, current);
      return;
    }
    if (current + mass_of(cand) <= best) return;
    const int v = std::countr_zero(cand);
    run(current + mass[static_cast<std::size_t>(v)], cand & adj[static_cast<std::size_t>(v)]);
    run(current, cand & ~(1u << v));
  }
};

int support_diameter(std::span<const Atom> atoms) {
  int d = 0;
  for (std::size_t i = 0; i < atoms.size(); ++i)
    for (std::size_t j = i + 1; j < atoms.size(); ++j) d = std::max(d, l1_dist(atoms[i].x, atoms[j].x));
  return d;
}

}  // namespace

double max_mass(const LatticePMF& f) {
  if (f.empty()) throw ParameterError("max_mass of an empty pmf");
  double m = 0.0;
  for (const auto& a : f.atoms()) m = std::max(m, a.mass);
  return m;
}

double atom_mass(const LatticePMF& f, double eps) {
  if (!(eps >= 0.0)) throw ParameterError("atom threshold must be >= 0");
  double s = 0.0;
  for (const auto& a : f.atoms())
    if (a.mass > eps) s += a.mass;
  return s;
}

double cesaro_apa(std::span<const LatticePMF> pmfs, std::span<const double> eps) {
  if (pmfs.size() != eps.size()) throw ParameterError("cesaro_apa: pmf and threshold sequences differ in length");
  if (pmfs.empty()) throw ParameterError("cesaro_apa: empty sequence");
  double s = 0.0;
  for (std::size_t i = 0; i < pmfs.size(); ++i) s += atom_mass(pmfs[i], eps[i]);
  return s / static_cast<double>(pmfs.size());
}

double default_atom_threshold(int i) { return 1.0 / std::log(static_cast<double>(i) + 2.0); }

bool geometric_localization(const LatticePMF& f, double delta, int K, LocalizationMode mode) {
  if (!(delta > 0.0 && delta < 1.0)) throw ParameterError("delta must lie in (0, 1)");
  if (K < 0) throw ParameterError("K must be >= 0");
  const double target = 1.0 - delta;
  const auto atoms = f.atoms();
  if (atoms.empty()) return false;

  if (mode == LocalizationMode::certificate) {
    const int r = K / 2;
    for (const auto& c : atoms) {
      double s = 0.0;
      for (const auto& a : atoms)
        if (l1_dist(a.x, c.x) <= r) s += a.mass;
      if (s > target) return true;
    }
    return false;
  }

  if (f.total_mass() > target && support_diameter(atoms) <= K) return true;

  std::vector<Atom> sorted(atoms.begin(), atoms.end());
  std::stable_sort(sorted.begin(), sorted.end(), [](const Atom& a, const Atom& b) { return a.mass > b.mass; });
  const std::size_t top = std::min(sorted.size(), kExactAtoms);
  CliqueSearch search;
  search.target = target;
  search.mass.resize(top);
  search.adj.assign(top, 0u);
  for (std::size_t i = 0; i < top; ++i) {
    search.mass[i] = sorted[i].mass;
    for (std::size_t j = 0; j < top; ++j)
      if (i != j && l1_dist(sorted[i].x, sorted[j].x) <= K) search.adj[i] |= 1u << j;
  }
  search.run(0.0, top == 32 ? ~0u : (1u << top) - 1u);
  if (search.best > target) return true;
  double rest = 0.0;
  for (std::size_t i = top; i < sorted.size(); ++i) rest += sorted[i].mass;
  if (search.best + rest <= target) return false;
  throw SizeError("geometric_localization: more than 20 atoms are relevant for exact mode; use certificate mode");
}

FavoriteRegion favorite_region(const LatticePMF& f, int K, double tie_tol) {
  if (K < 0) throw ParameterError("K must be >= 0");
  if (!(tie_tol >= 0.0)) throw ParameterError("tie_tol must be >= 0");
  FavoriteRegion out;
  if (f.empty()) return out;
  const double top = max_mass(f);
  for (const auto& a : f.atoms())
    if (a.mass >= top - tie_tol) out.modes.push_back(a.x);
  const Coord c = out.modes.front();
  const int ky = f.dim() == 2 ? K : 0;
  for (int dx = -K; dx <= K; ++dx) {
    for (int dy = -ky; dy <= ky; ++dy) {
      if (std::abs(dx) + std::abs(dy) > K) continue;
      const Coord x{c[0] + dx, c[1] + dy};
      const bool ok = std::all_of(out.modes.begin(), out.modes.end(), [&](const Coord& m) { return l1_dist(x, m) <= K; });
      if (!ok) continue;
      out.region.push_back(x);
      out.mass += f.mass_at(x);
    }
  }
  std::sort(out.region.begin(), out.region.end());
  out.mass = std::min(out.mass, 1.0);
  return out;
}

LocalizationReport localization_report(std::span<const LatticePMF> pmfs, double delta, int K, LocalizationMode mode,
                                       std::span<const double> eps, double tie_tol) {
  if (!eps.empty() && eps.size() != pmfs.size())
    throw ParameterError("localization_report: threshold sequence length mismatch");
  LocalizationReport rep;
  rep.delta = delta;
  rep.K = K;
  rep.mode = mode;
  for (std::size_t i = 0; i < pmfs.size(); ++i) {
    LocalizationRow row;
    row.i = static_cast<int>(i);
    row.max_mass = max_mass(pmfs[i]);
    row.eps = eps.empty() ? default_atom_threshold(row.i) : eps[i];
    row.atom_mass = atom_mass(pmfs[i], row.eps);
    row.localized = geometric_localization(pmfs[i], delta, K, mode);
    row.favorite_mass = favorite_region(pmfs[i], K, tie_tol).mass;
    rep.cesaro_max_mass += row.max_mass;
    rep.cesaro_atom_mass += row.atom_mass;
    rep.localized_fraction += row.localized ? 1.0 : 0.0;
    rep.rows.push_back(row);
  }
  if (!pmfs.empty()) {
    const double n = static_cast<double>(pmfs.size());
    rep.cesaro_max_mass /= n;
    rep.cesaro_atom_mass /= n;
    rep.localized_fraction /= n;
  }
  return rep;
}

void LocalizationReport::write_csv(std::ostream& out) const {
  CsvRow(out) << "i" << "max_mass" << "eps" << "atom_mass" << "localized" << "favorite_mass";
  for (const auto& r : rows) CsvRow(out) << r.i << r.max_mass << r.eps << r.atom_mass << r.localized << r.favorite_mass;
}

nlohmann::json LocalizationReport::summary() const {
  return {{"delta", delta},
          {"K", K},
          {"mode", mode == LocalizationMode::exact ? "exact" : "certificate"},
          {"count", rows.size()},
          {"cesaro_max_mass", cesaro_max_mass},
          {"cesaro_atom_mass", cesaro_atom_mass},
          {"localized_fraction", localized_fraction}};
}

}  // namespace quenchlab
