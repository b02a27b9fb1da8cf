#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "quenchlab/env.hpp"
#include "quenchlab/lattice.hpp"

namespace quenchlab {

enum class FieldKind { edge, vertex };

// Inclusive rectangle [x0, x1] x [y0, y1] of Z^2.
struct Box {
  int x0 = 0;
  int x1 = 0;
  int y0 = 0;
  int y1 = 0;

  int width() const noexcept { return x1 - x0 + 1; }
  int height() const noexcept { return y1 - y0 + 1; }
  std::size_t vertex_count() const noexcept {
    return static_cast<std::size_t>(width()) * static_cast<std::size_t>(height());
  }
  bool contains(const Coord& v) const noexcept { return v[0] >= x0 && v[0] <= x1 && v[1] >= y0 && v[1] <= y1; }
  void validate() const;

  friend bool operator==(const Box&, const Box&) = default;
};

// dir 0 is the edge u -- u + e1, dir 1 is u -- u + e2.
struct Edge {
  Coord u{};
  int dir = 0;

  Coord v() const noexcept { return dir == 0 ? Coord{u[0] + 1, u[1]} : Coord{u[0], u[1] + 1}; }
};

// i.i.d. weights on the vertices or nearest-neighbour edges of a box.
// Site indices: vertex (x - x0) * height + (y - y0); edge 2 * vertex_index(u) + dir.
// Edges leaving the box have storage but are not sites of the graph.
class WeightField {
 public:
  WeightField(FieldKind kind, Box box, DistSpec dist, std::uint64_t seed, std::vector<double> values);

  static WeightField sample(FieldKind kind, const Box& box, const DistSpec& dist, std::uint64_t seed);
  // Deterministic fields for tests and fixed instances; dist is recorded only.
  static WeightField constant(FieldKind kind, const Box& box, double value);

  FieldKind kind() const noexcept { return kind_; }
  const Box& box() const noexcept { return box_; }
  const DistSpec& dist() const noexcept { return dist_; }
  std::uint64_t seed() const noexcept { return seed_; }
  std::span<const double> values() const noexcept { return values_; }
  std::size_t size() const noexcept { return values_.size(); }

  std::size_t vertex_index(const Coord& v) const;
  std::size_t edge_index(const Edge& e) const;
  double vertex(const Coord& v) const { return values_[vertex_index(v)]; }
  double edge(const Edge& e) const { return values_[edge_index(e)]; }
  void set(std::size_t index, double value);

  // True if the index is a vertex of the box, or an edge with both ends in it.
  bool is_site(std::size_t index) const noexcept;
  Edge edge_at(std::size_t index) const noexcept;
  Coord vertex_at(std::size_t index) const noexcept;
  // Min l1 norm over the endpoints (edges) or the l1 norm (vertices).
  int site_norm(std::size_t index) const noexcept;
  SiteKey site_key(std::size_t index) const noexcept;

  WeightField with_values(std::vector<double> values) const;

 private:
  FieldKind kind_;
  Box box_;
  DistSpec dist_;
  std::uint64_t seed_;
  std::vector<double> values_;
};

struct PassageResult {
  double time = 0.0;
  std::vector<Coord> geodesic;  // src first, dst last
};

// Dijkstra over the edges of the box. Among equal-time predecessors the
// lexicographically smallest is kept, so the geodesic is deterministic.
PassageResult fpp_passage(const WeightField& field, const Coord& src, const Coord& dst);

// Up-right paths, T = sum of X_v over the path excluding src. Ties prefer the
// lexicographically smaller predecessor (v - e1).
PassageResult lpp_passage(const WeightField& field, const Coord& src, const Coord& dst);

// log sum over directed paths of length n from the origin of exp(beta * sum_{i >= 1} X_{v_i}).
// beta = 0 returns n log 2 exactly. The box must contain [0, n]^2.
double dp_free_energy(const WeightField& field, double beta, int n);

enum class CouplingMode { min, max };

std::string to_string(CouplingMode mode);
CouplingMode coupling_mode_from_string(const std::string& name);

struct EpsMap {
  std::vector<double> values;  // per site index of the field
  double sum_sq = 0.0;         // over sites with norm <= n
};

// eps_e = alpha / ((|e| + 1) sqrt(log n)) for |e| <= n, zero elsewhere and on non-sites.
EpsMap eps_radial(const WeightField& field, int n, double alpha);

struct CoupledField {
  WeightField base;
  WeightField perturbed;
  int m = 1;
  CouplingMode mode = CouplingMode::min;
  std::vector<double> eps;
  std::vector<std::uint8_t> switched;
  std::uint64_t seed2 = 0;

  std::size_t switched_count() const noexcept;
};

// X' = min or max of X and m fresh copies; Y ~ Bernoulli(eps) per site; X~ = X' where Y = 1.
// All draws are keyed by (seed2, site), independent of the base field.
CoupledField couple(const WeightField& field, int m, CouplingMode mode, std::span<const double> eps,
                    std::uint64_t seed2);

struct HellingerResult {
  std::vector<double> affinity;
  double log_affinity_sum = 0.0;
  double tv_bound = 0.0;
};

// 1 - rho for one site, by integrating against the density of the base law.
double hellinger_one_minus_affinity(const DistSpec& dist, int m, CouplingMode mode, double eps);

// rho_i = E sqrt(eps_i f(X) + 1 - eps_i) with f the density ratio of X' to X, and
// the bound d_TV <= sqrt(1 - prod rho_i^2). Continuous laws only.
HellingerResult hellinger_tv(const DistSpec& dist, int m, CouplingMode mode, std::span<const double> eps);

// Minimal length of an interval holding ceil(coverage * size) of the samples.
double shorth_width(std::vector<double> samples, double coverage = 0.5);
// Linear-interpolation quantile (type 7).
double quantile(std::vector<double> samples, double prob);
double interquartile_range(const std::vector<double>& samples);

// Warnings when the atom of the weight law at its essinf (FPP) or esssup (LPP)
// reaches the percolation thresholds that the fluctuation bounds assume away.
std::vector<std::string> percolation_warnings(const DistSpec& dist, FieldKind kind);

inline constexpr double kBondThresholdZ2 = 0.5;
inline constexpr double kDirectedBondUpper = 0.6735;
inline constexpr double kDirectedSiteUpper = 0.75;

enum class GrowthModel { fpp, lpp, polymer };

std::string to_string(GrowthModel model);
GrowthModel growth_model_from_string(const std::string& name);

inline constexpr int kMinReplicas = 20;

struct FluctuationConfig {
  GrowthModel model = GrowthModel::fpp;
  DistSpec dist = DistSpec::exponential(1.0);
  std::vector<int> n_list;
  int replicas = 200;
  int m = 1;
  // Defaults to min for fpp and max for lpp and polymer, so every gap is >= 0.
  std::optional<CouplingMode> mode;
  double alpha = 1.0;
  double beta = 1.0;  // polymer only
  std::uint64_t seed = 0;
  int jobs = 1;

  CouplingMode coupling_mode() const noexcept;
  void validate() const;
};

// FPP: T(0, (n, 0)) on x in [-n/4, n + n/4], y in [-n/2, n/2].
// LPP: T(0, (ceil(n/2), floor(n/2))) on that rectangle. Polymer: dp_free_energy at length n.
Box default_box(GrowthModel model, int n);
double observable(GrowthModel model, const WeightField& field, int n, double beta);

struct FluctuationRow {
  int n = 0;
  int replica = 0;
  double T = 0.0;
  double T_tilde = 0.0;
  double gap = 0.0;  // T - T~ under min coupling, T~ - T under max coupling
};

struct FluctuationSummary {
  int n = 0;
  int samples = 0;
  double shorth = 0.0;
  double iqr = 0.0;
  double gap_q10 = 0.0;
  double gap_median = 0.0;
  double gap_q90 = 0.0;
  double tv_bound = 0.0;
  double sum_eps_sq = 0.0;
};

struct FluctuationStats {
  GrowthModel model = GrowthModel::fpp;
  std::vector<FluctuationRow> raw;
  std::vector<FluctuationSummary> summary;
  std::vector<std::string> warnings;

  void write_raw_csv(std::ostream& out) const;
  void write_summary_csv(std::ostream& out) const;
};

// Replica r at size n uses base seed KeyedStream(seed, n).bits({r}) and coupling
// seed .bits({r}, 1), so results do not depend on jobs.
FluctuationStats fluctuation_experiment(const FluctuationConfig& config);

}  // namespace quenchlab
