#pragma once

#include <array>
#include <cstdlib>
#include <span>
#include <vector>

namespace quenchlab {

// A point of Z^d for d in {1, 2}; the unused coordinate is 0 when d = 1.
using Coord = std::array<int, 2>;

inline Coord operator+(const Coord& a, const Coord& b) { return {a[0] + b[0], a[1] + b[1]}; }
inline Coord operator-(const Coord& a, const Coord& b) { return {a[0] - b[0], a[1] - b[1]}; }
inline int l1_norm(const Coord& a) { return std::abs(a[0]) + std::abs(a[1]); }
inline int l1_dist(const Coord& a, const Coord& b) { return l1_norm(a - b); }

struct Atom {
  Coord x{};
  double mass = 0.0;
};

// Finite mass function on Z^d. Atoms are kept sorted by coordinate
// (lexicographically), unique, and strictly positive.
class LatticePMF {
 public:
  LatticePMF() = default;
  explicit LatticePMF(int dim) : dim_(dim) {}
  LatticePMF(int dim, std::vector<Atom> atoms);

  static LatticePMF point_mass(int dim, Coord x = {0, 0});
  static LatticePMF uniform(int dim, std::span<const Coord> points);

  int dim() const noexcept { return dim_; }
  bool empty() const noexcept { return atoms_.empty(); }
  std::size_t size() const noexcept { return atoms_.size(); }
  std::span<const Atom> atoms() const noexcept { return atoms_; }

  double total_mass() const;
  double mass_at(const Coord& x) const;

 private:
  int dim_ = 1;
  std::vector<Atom> atoms_;
};

}  // namespace quenchlab
