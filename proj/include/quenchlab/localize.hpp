#pragma once

#include <iosfwd>
#include <span>
#include <vector>

#include <json.hpp>

#include "quenchlab/lattice.hpp"

namespace quenchlab {

double max_mass(const LatticePMF& f);

// Mass of the strict eps-atoms {x : f(x) > eps}.
double atom_mass(const LatticePMF& f, double eps);

double cesaro_apa(std::span<const LatticePMF> pmfs, std::span<const double> eps);

// Convention for the vanishing threshold sequence: eps_i = 1 / log(i + 2).
double default_atom_threshold(int i);

enum class LocalizationMode { exact, certificate };

// Whether some set of l1 diameter <= K carries mass > 1 - delta.
// exact: maximum-mass clique search over the 20 heaviest atoms; throws
// SizeError when atoms beyond those could change the answer.
// certificate: l1 balls of radius floor(K/2) around support points; a true
// answer is always correct, a false one may not be.
bool geometric_localization(const LatticePMF& f, double delta, int K, LocalizationMode mode);

struct FavoriteRegion {
  std::vector<Coord> modes;
  std::vector<Coord> region;
  double mass = 0.0;
};

// Points of Z^d within l1 distance K of every mode; modes are atoms within
// tie_tol of the maximum.
FavoriteRegion favorite_region(const LatticePMF& f, int K, double tie_tol = 1e-12);

struct LocalizationRow {
  int i = 0;
  double max_mass = 0.0;
  double eps = 0.0;
  double atom_mass = 0.0;
  bool localized = false;
  double favorite_mass = 0.0;
};

struct LocalizationReport {
  double delta = 0.0;
  int K = 0;
  LocalizationMode mode = LocalizationMode::certificate;
  std::vector<LocalizationRow> rows;
  double cesaro_max_mass = 0.0;
  double cesaro_atom_mass = 0.0;
  double localized_fraction = 0.0;

  void write_csv(std::ostream& out) const;
  nlohmann::json summary() const;
};

// One row per pmf; row i uses eps[i] when given, the default threshold otherwise.
LocalizationReport localization_report(std::span<const LatticePMF> pmfs, double delta, int K,
                                       LocalizationMode mode = LocalizationMode::certificate,
                                       std::span<const double> eps = {}, double tie_tol = 1e-12);

}  // namespace quenchlab
