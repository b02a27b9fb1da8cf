#include "quenchlab/lattice.hpp"

#include <algorithm>
#include <cmath>

#include "quenchlab/errors.hpp"

namespace quenchlab {

LatticePMF::LatticePMF(int dim, std::vector<Atom> atoms) : dim_(dim) {
  if (dim_ != 1 && dim_ != 2) throw ParameterError("pmf dimension must be 1 or 2");
  std::sort(atoms.begin(), atoms.end(), [](const Atom& a, const Atom& b) { return a.x < b.x; });
  for (const auto& a : atoms) {
    if (!(a.mass >= 0.0) || !std::isfinite(a.mass)) throw ParameterError("pmf masses must be finite and nonnegative");
    if (dim_ == 1 && a.x[1] != 0) throw ParameterError("1-d pmf atom with a second coordinate");
    if (a.mass == 0.0) continue;
    if (!atoms_.empty() && atoms_.back().x == a.x)
      atoms_.back().mass += a.mass;
    else
      atoms_.push_back(a);
  }
}

LatticePMF LatticePMF::point_mass(int dim, Coord x) { return LatticePMF(dim, {Atom{x, 1.0}}); }

LatticePMF LatticePMF::uniform(int dim, std::span<const Coord> points) {
  if (points.empty()) throw ParameterError("uniform pmf needs at least one point");
  std::vector<Atom> atoms;
  for (const auto& x : points) atoms.push_back({x, 1.0 / static_cast<double>(points.size())});
  return LatticePMF(dim, std::move(atoms));
}

double LatticePMF::total_mass() const {
  double s = 0.0;
  for (const auto& a : atoms_) s += a.mass;
  return s;
}

double LatticePMF::mass_at(const Coord& x) const {
  auto it = std::lower_bound(atoms_.begin(), atoms_.end(), x, [](const Atom& a, const Coord& c) { return a.x < c; });
  return (it != atoms_.end() && it->x == x) ? it->mass : 0.0;
}

}  // namespace quenchlab
