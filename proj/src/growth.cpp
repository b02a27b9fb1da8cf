#include "quenchlab/growth.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>
#include <queue>
#include <string>

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/sinh_sinh.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>

#include "quenchlab/csv.hpp"
#include "quenchlab/errors.hpp"
#include "quenchlab/parallel.hpp"

namespace quenchlab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

bool lex_less(const Coord& a, const Coord& b) { return a < b; }

double log_add(double a, double b) {
  if (a == -kInf) return b;
  if (b == -kInf) return a;
  const double hi = std::max(a, b), lo = std::min(a, b);
  return hi + std::log1p(std::exp(lo - hi));
}

}  // namespace

void Box::validate() const {
  if (x1 < x0 || y1 < y0) throw ParameterError("box must satisfy x0 <= x1 and y0 <= y1");
  if (static_cast<double>(width()) * height() > 5e7) throw SizeError("box has too many vertices");
}

WeightField::WeightField(FieldKind kind, Box box, DistSpec dist, std::uint64_t seed, std::vector<double> values)
    : kind_(kind), box_(box), dist_(dist), seed_(seed), values_(std::move(values)) {
  box_.validate();
  const std::size_t expected = (kind_ == FieldKind::vertex ? 1 : 2) * box_.vertex_count();
  if (values_.size() != expected) throw ParameterError("weight array size does not match the box");
  for (std::size_t i = 0; i < values_.size(); ++i) {
    if (!std::isfinite(values_[i])) throw ParameterError("weights must be finite");
    if (kind_ == FieldKind::edge && values_[i] < 0.0 && is_site(i))
      throw ParameterError("FPP edge weights must be nonnegative");
  }
}

WeightField WeightField::sample(FieldKind kind, const Box& box, const DistSpec& dist, std::uint64_t seed) {
  dist.validate();
  if (kind == FieldKind::edge && dist.essinf() < 0.0)
    throw ParameterError("FPP edge weights need a law supported on [0, inf)");
  box.validate();
  WeightField proto(kind, box, dist, seed,
                    std::vector<double>((kind == FieldKind::vertex ? 1 : 2) * box.vertex_count(), 0.0));
  const KeyedStream rng(seed);
  std::vector<double> values(proto.size());
  for (std::size_t i = 0; i < values.size(); ++i) values[i] = dist.draw(rng, proto.site_key(i));
  return proto.with_values(std::move(values));
}

WeightField WeightField::constant(FieldKind kind, const Box& box, double value) {
  box.validate();
  return WeightField(kind, box, DistSpec{}, 0,
                     std::vector<double>((kind == FieldKind::vertex ? 1 : 2) * box.vertex_count(), value));
}

std::size_t WeightField::vertex_index(const Coord& v) const {
  if (!box_.contains(v)) throw ParameterError("vertex outside the box");
  return static_cast<std::size_t>(v[0] - box_.x0) * static_cast<std::size_t>(box_.height()) +
         static_cast<std::size_t>(v[1] - box_.y0);
}

std::size_t WeightField::edge_index(const Edge& e) const {
  if (kind_ != FieldKind::edge) throw ParameterError("vertex field has no edge weights");
  if (!box_.contains(e.u) || !box_.contains(e.v())) throw ParameterError("edge outside the box");
  return 2 * vertex_index(e.u) + static_cast<std::size_t>(e.dir);
}

void WeightField::set(std::size_t index, double value) {
  if (index >= values_.size()) throw ParameterError("site index out of range");
  if (!std::isfinite(value) || (kind_ == FieldKind::edge && value < 0.0))
    throw ParameterError("invalid weight value");
  values_[index] = value;
}

Coord WeightField::vertex_at(std::size_t index) const noexcept {
  const std::size_t v = kind_ == FieldKind::vertex ? index : index / 2;
  const auto h = static_cast<std::size_t>(box_.height());
  return {box_.x0 + static_cast<int>(v / h), box_.y0 + static_cast<int>(v % h)};
}

Edge WeightField::edge_at(std::size_t index) const noexcept { return {vertex_at(index), static_cast<int>(index % 2)}; }

bool WeightField::is_site(std::size_t index) const noexcept {
  if (index >= values_.size()) return false;
  if (kind_ == FieldKind::vertex) return true;
  return box_.contains(edge_at(index).v());
}

int WeightField::site_norm(std::size_t index) const noexcept {
  if (kind_ == FieldKind::vertex) return l1_norm(vertex_at(index));
  const Edge e = edge_at(index);
  return std::min(l1_norm(e.u), l1_norm(e.v()));
}

SiteKey WeightField::site_key(std::size_t index) const noexcept {
  if (kind_ == FieldKind::vertex) {
    const Coord v = vertex_at(index);
    return {v[0], v[1], 0, 0};
  }
  const Edge e = edge_at(index);
  return {e.u[0], e.u[1], e.dir + 1, 0};
}

WeightField WeightField::with_values(std::vector<double> values) const {
  return WeightField(kind_, box_, dist_, seed_, std::move(values));
}

PassageResult fpp_passage(const WeightField& field, const Coord& src, const Coord& dst) {
  if (field.kind() != FieldKind::edge) throw ParameterError("fpp_passage needs an edge field");
  const Box& box = field.box();
  if (!box.contains(src) || !box.contains(dst)) throw ParameterError("fpp endpoints must lie in the box");
  const std::size_t nv = box.vertex_count();
  std::vector<double> dist(nv, kInf);
  std::vector<std::int64_t> pred(nv, -1);
  std::vector<std::uint8_t> done(nv, 0);
  using Item = std::pair<double, std::size_t>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> heap;
  const std::size_t s = field.vertex_index(src), t = field.vertex_index(dst);
  dist[s] = 0.0;
  heap.emplace(0.0, s);
  auto coord_of = [&](std::size_t v) { return field.vertex_at(field.kind() == FieldKind::edge ? 2 * v : v); };
  while (!heap.empty()) {
    const auto [d, v] = heap.top();
    heap.pop();
    if (done[v] || d > dist[v]) continue;
    // Keep settling ties with dst so its predecessor choice is final.
    if (done[t] && d > dist[t]) break;
    done[v] = 1;
    const Coord c = coord_of(v);
    const Edge nbrs[4] = {{c, 0}, {c, 1}, {{c[0] - 1, c[1]}, 0}, {{c[0], c[1] - 1}, 1}};
    for (int k = 0; k < 4; ++k) {
      const Edge& e = nbrs[k];
      if (!box.contains(e.u) || !box.contains(e.v())) continue;
      const Coord other = k < 2 ? e.v() : e.u;
      const std::size_t w = field.vertex_index(other);
      if (done[w]) continue;
      const double nd = d + field.edge(e);
      if (nd < dist[w] || (nd == dist[w] && pred[w] >= 0 && lex_less(c, coord_of(static_cast<std::size_t>(pred[w]))))) {
        dist[w] = nd;
        pred[w] = static_cast<std::int64_t>(v);
        heap.emplace(nd, w);
      }
    }
  }
  if (!std::isfinite(dist[t])) throw ParameterError("destination unreachable");
  PassageResult out;
  out.time = dist[t];
  for (std::int64_t v = static_cast<std::int64_t>(t); v >= 0; v = pred[static_cast<std::size_t>(v)])
    out.geodesic.push_back(coord_of(static_cast<std::size_t>(v)));
  std::reverse(out.geodesic.begin(), out.geodesic.end());
  return out;
}

PassageResult lpp_passage(const WeightField& field, const Coord& src, const Coord& dst) {
  if (field.kind() != FieldKind::vertex) throw ParameterError("lpp_passage needs a vertex field");
  if (!field.box().contains(src) || !field.box().contains(dst)) throw ParameterError("lpp endpoints must lie in the box");
  if (dst[0] < src[0] || dst[1] < src[1]) throw ParameterError("lpp_passage requires dst >= src componentwise");
  const int W = dst[0] - src[0] + 1, H = dst[1] - src[1] + 1;
  std::vector<double> T(static_cast<std::size_t>(W) * H);
  std::vector<std::uint8_t> from_e2(T.size(), 0);
  auto at = [&](int a, int b) -> std::size_t { return static_cast<std::size_t>(a) * H + b; };
  for (int a = 0; a < W; ++a)
    for (int b = 0; b < H; ++b) {
      if (a == 0 && b == 0) {
        T[0] = 0.0;
        continue;
      }
      const double x = field.vertex({src[0] + a, src[1] + b});
      const double left = a > 0 ? T[at(a - 1, b)] : -kInf;
      const double down = b > 0 ? T[at(a, b - 1)] : -kInf;
      // ties go to v - e1, the lexicographically smaller predecessor
      if (down > left) {
        T[at(a, b)] = x + down;
        from_e2[at(a, b)] = 1;
      } else {
        T[at(a, b)] = x + left;
      }
    }
  PassageResult out;
  out.time = T[at(W - 1, H - 1)];
  int a = W - 1, b = H - 1;
  out.geodesic.push_back(dst);
  while (a > 0 || b > 0) {
    if (from_e2[at(a, b)])
      --b;
    else
      --a;
    out.geodesic.push_back({src[0] + a, src[1] + b});
  }
  std::reverse(out.geodesic.begin(), out.geodesic.end());
  return out;
}

double dp_free_energy(const WeightField& field, double beta, int n) {
  if (field.kind() != FieldKind::vertex) throw ParameterError("dp_free_energy needs a vertex field");
  if (n < 0) throw ParameterError("n must be >= 0");
  if (!std::isfinite(beta)) throw ParameterError("beta must be finite");
  if (!field.box().contains({0, 0}) || !field.box().contains({n, n})) throw SizeError("n exceeds the box");
  if (beta == 0.0) return n * std::numbers::ln2;
  // L[a] holds log Z over paths to (a, k - a) after k steps.
  std::vector<double> L{0.0}, next;
  for (int k = 1; k <= n; ++k) {
    next.assign(static_cast<std::size_t>(k + 1), -kInf);
    for (int a = 0; a <= k; ++a) {
      double acc = -kInf;
      if (a <= k - 1) acc = log_add(acc, L[static_cast<std::size_t>(a)]);
      if (a >= 1) acc = log_add(acc, L[static_cast<std::size_t>(a - 1)]);
      next[static_cast<std::size_t>(a)] = acc + beta * field.vertex({a, k - a});
    }
    L.swap(next);
  }
  double total = -kInf;
  for (double v : L) total = log_add(total, v);
  return total;
}

std::string to_string(CouplingMode mode) { return mode == CouplingMode::min ? "min" : "max"; }

CouplingMode coupling_mode_from_string(const std::string& name) {
  if (name == "min") return CouplingMode::min;
  if (name == "max") return CouplingMode::max;
  throw ParameterError("unknown coupling mode '" + name + "'");
}

EpsMap eps_radial(const WeightField& field, int n, double alpha) {
  if (n < 3) throw ParameterError("eps_radial requires n >= 3");
  if (!(alpha > 0.0) || !std::isfinite(alpha)) throw ParameterError("eps_radial requires alpha > 0");
  EpsMap out;
  out.values.assign(field.size(), 0.0);
  const double scale = alpha / std::sqrt(std::log(static_cast<double>(n)));
  for (std::size_t i = 0; i < field.size(); ++i) {
    if (!field.is_site(i)) continue;
    const int r = field.site_norm(i);
    if (r > n) continue;
    const double e = scale / (r + 1.0);
    out.values[i] = e;
    out.sum_sq += e * e;
  }
  return out;
}

std::size_t CoupledField::switched_count() const noexcept {
  return static_cast<std::size_t>(std::count(switched.begin(), switched.end(), std::uint8_t{1}));
}

CoupledField couple(const WeightField& field, int m, CouplingMode mode, std::span<const double> eps,
                    std::uint64_t seed2) {
  if (m < 1) throw ParameterError("couple requires m >= 1");
  if (eps.size() != field.size()) throw ParameterError("eps map size does not match the field");
  for (double e : eps)
    if (!(e >= 0.0 && e < 1.0)) throw ParameterError("eps entries must lie in [0, 1)");
  field.dist().validate();
  CoupledField out{field, field, m, mode, std::vector<double>(eps.begin(), eps.end()),
                   std::vector<std::uint8_t>(field.size(), 0), seed2};
  const KeyedStream switch_rng(seed2, 0);
  std::vector<double> values(field.values().begin(), field.values().end());
  for (std::size_t i = 0; i < field.size(); ++i) {
    if (eps[i] == 0.0) continue;
    const SiteKey key = field.site_key(i);
    if (!(switch_rng.uniform(key) < eps[i])) continue;
    double x = values[i];
    for (int r = 0; r < m; ++r) {
      const double y = field.dist().draw(KeyedStream(seed2, static_cast<std::uint64_t>(r) + 1), key);
      x = mode == CouplingMode::min ? std::min(x, y) : std::max(x, y);
    }
    values[i] = x;
    out.switched[i] = 1;
  }
  out.perturbed = field.with_values(std::move(values));
  return out;
}

double hellinger_one_minus_affinity(const DistSpec& dist, int m, CouplingMode mode, double eps) {
  dist.validate();
  if (!dist.is_continuous()) throw UnsupportedError("hellinger_tv needs a continuous weight law");
  if (m < 1) throw ParameterError("m must be >= 1");
  if (!(eps >= 0.0 && eps <= 1.0)) throw ParameterError("eps must lie in [0, 1]");
  if (eps == 0.0) return 0.0;
  // 1 - sqrt(1 - eps (1 - f)) written without cancellation.
  auto integrand = [&](double x) {
    const double tail = mode == CouplingMode::min ? dist.sf(x) : dist.cdf(x);
    const double f = (m + 1) * std::pow(tail, m);
    const double g = eps * (1.0 - f);
    return g / (1.0 + std::sqrt(std::max(0.0, 1.0 - g))) * dist.pdf(x);
  };
  switch (dist.kind) {
    case DistKind::uniform: {
      boost::math::quadrature::tanh_sinh<double> q;
      return q.integrate(integrand, dist.a, dist.b);
    }
    case DistKind::exponential: {
      boost::math::quadrature::exp_sinh<double> q;
      return q.integrate(integrand, 0.0, kInf);
    }
    case DistKind::gaussian: {
      boost::math::quadrature::sinh_sinh<double> q;
      auto shifted = [&](double z) { return integrand(dist.mean + z); };
      return q.integrate(shifted);
    }
    default:
      throw UnsupportedError("hellinger_tv needs a continuous weight law");
  }
}

HellingerResult hellinger_tv(const DistSpec& dist, int m, CouplingMode mode, std::span<const double> eps) {
  std::map<double, double> cache;
  HellingerResult out;
  out.affinity.reserve(eps.size());
  for (double e : eps) {
    auto it = cache.find(e);
    if (it == cache.end()) it = cache.emplace(e, hellinger_one_minus_affinity(dist, m, mode, e)).first;
    out.affinity.push_back(1.0 - it->second);
    out.log_affinity_sum += std::log1p(-it->second);
  }
  out.tv_bound = std::sqrt(std::clamp(-std::expm1(2.0 * out.log_affinity_sum), 0.0, 1.0));
  return out;
}

double shorth_width(std::vector<double> samples, double coverage) {
  if (samples.empty()) throw ParameterError("shorth of an empty sample");
  if (!(coverage > 0.0 && coverage <= 1.0)) throw ParameterError("coverage must lie in (0, 1]");
  std::sort(samples.begin(), samples.end());
  const auto k = static_cast<std::size_t>(std::ceil(coverage * static_cast<double>(samples.size()) - 1e-12));
  const std::size_t span = std::max<std::size_t>(k, 1);
  double best = kInf;
  for (std::size_t i = 0; i + span <= samples.size(); ++i) best = std::min(best, samples[i + span - 1] - samples[i]);
  return best;
}

double quantile(std::vector<double> samples, double prob) {
  if (samples.empty()) throw ParameterError("quantile of an empty sample");
  if (!(prob >= 0.0 && prob <= 1.0)) throw ParameterError("quantile level must lie in [0, 1]");
  std::sort(samples.begin(), samples.end());
  const double h = prob * static_cast<double>(samples.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, samples.size() - 1);
  return samples[lo] + (h - static_cast<double>(lo)) * (samples[hi] - samples[lo]);
}

double interquartile_range(const std::vector<double>& samples) {
  return quantile(samples, 0.75) - quantile(samples, 0.25);
}

std::vector<std::string> percolation_warnings(const DistSpec& dist, FieldKind kind) {
  std::vector<std::string> out;
  if (kind == FieldKind::edge) {
    const double atom = dist.atom_at_essinf();
    if (dist.essinf() == 0.0 && atom >= kBondThresholdZ2)
      out.emplace_back("P(X = 0) >= 1/2 = p_c(Z^2): zero-weight edges percolate and T may be tight");
    if (dist.essinf() > 0.0 && atom >= kBondThresholdZ2) {
      if (atom > kDirectedBondUpper)
        out.emplace_back("P(X = essinf) exceeds 0.6735 >= directed p_c(Z^2): T - n essinf may be tight");
      else
        out.emplace_back("P(X = essinf) >= 1/2 with essinf > 0: the lower bound needs P(X = essinf) below directed p_c "
                         "(about 0.6445) and a moment condition");
    }
  } else {
    const double atom = dist.atom_at_esssup();
    if (atom >= kDirectedSiteUpper)
      out.emplace_back("P(X = esssup) >= 3/4 >= directed site p_c(Z^2): LPP fluctuation lower bound does not apply");
    else if (atom > kBondThresholdZ2)
      out.emplace_back("P(X = esssup) > 1/2: directed site p_c(Z^2) lies in (1/2, 3/4], hypothesis not verified");
  }
  return out;
}

std::string to_string(GrowthModel model) {
  switch (model) {
    case GrowthModel::fpp:
      return "fpp";
    case GrowthModel::lpp:
      return "lpp";
    case GrowthModel::polymer:
      return "polymer";
  }
  return "fpp";
}

GrowthModel growth_model_from_string(const std::string& name) {
  if (name == "fpp") return GrowthModel::fpp;
  if (name == "lpp") return GrowthModel::lpp;
  if (name == "polymer") return GrowthModel::polymer;
  throw ParameterError("unknown growth model '" + name + "'");
}

CouplingMode FluctuationConfig::coupling_mode() const noexcept {
  if (mode) return *mode;
  return model == GrowthModel::fpp ? CouplingMode::min : CouplingMode::max;
}

void FluctuationConfig::validate() const {
  dist.validate();
  if (n_list.empty()) throw ParameterError("n_list must be nonempty");
  for (int n : n_list)
    if (n < 3) throw ParameterError("every n must be >= 3");
  if (replicas < kMinReplicas) throw ParameterError("fluctuation statistics need at least 20 replicas");
  if (m < 1) throw ParameterError("m must be >= 1");
  if (!(alpha > 0.0)) throw ParameterError("alpha must be > 0");
  for (int n : n_list)
    if (!(alpha < std::sqrt(std::log(static_cast<double>(n)))))
      throw ParameterError("alpha must be < sqrt(log n) so every switch probability is below 1 (n = " +
                           std::to_string(n) + ")");
  if (model == GrowthModel::fpp && dist.essinf() < 0.0) throw ParameterError("FPP needs nonnegative weights");
  if (model == GrowthModel::polymer && !(beta > 0.0)) throw ParameterError("polymer fluctuations need beta > 0");
  if (jobs < 1) throw ParameterError("jobs must be >= 1");
}

Box default_box(GrowthModel model, int n) {
  switch (model) {
    case GrowthModel::fpp:
      return {-n / 4, n + n / 4, -n / 2, n / 2};
    case GrowthModel::lpp:
      return {0, (n + 1) / 2, 0, n / 2};
    case GrowthModel::polymer:
      return {0, n, 0, n};
  }
  return {};
}

double observable(GrowthModel model, const WeightField& field, int n, double beta) {
  switch (model) {
    case GrowthModel::fpp:
      return fpp_passage(field, {0, 0}, {n, 0}).time;
    case GrowthModel::lpp:
      return lpp_passage(field, {0, 0}, {(n + 1) / 2, n / 2}).time;
    case GrowthModel::polymer:
      return dp_free_energy(field, beta, n);
  }
  return 0.0;
}

void FluctuationStats::write_raw_csv(std::ostream& out) const {
  CsvRow(out) << "model" << "n" << "replica" << "T" << "T_tilde" << "gap";
  for (const auto& r : raw) CsvRow(out) << to_string(model) << r.n << r.replica << r.T << r.T_tilde << r.gap;
}

void FluctuationStats::write_summary_csv(std::ostream& out) const {
  CsvRow(out) << "n" << "shorth" << "iqr" << "tv_bound" << "sum_eps_sq";
  for (const auto& s : summary) CsvRow(out) << s.n << s.shorth << s.iqr << s.tv_bound << s.sum_eps_sq;
}

FluctuationStats fluctuation_experiment(const FluctuationConfig& config) {
  config.validate();
  const FieldKind kind = config.model == GrowthModel::fpp ? FieldKind::edge : FieldKind::vertex;
  const CouplingMode mode = config.coupling_mode();
  FluctuationStats stats;
  stats.model = config.model;
  stats.warnings = percolation_warnings(config.dist, kind);
  for (int n : config.n_list) {
    const Box box = default_box(config.model, n);
    const WeightField shape = WeightField::constant(kind, box, 0.0);
    const EpsMap eps = eps_radial(shape, n, config.alpha);
    const KeyedStream seeds(config.seed, static_cast<std::uint64_t>(n));
    std::vector<FluctuationRow> rows(static_cast<std::size_t>(config.replicas));
    parallel_for(rows.size(), config.jobs, [&](std::size_t r) {
      const SiteKey key{static_cast<std::int64_t>(r)};
      const WeightField field = WeightField::sample(kind, box, config.dist, seeds.bits(key, 0));
      const CoupledField cf = couple(field, config.m, mode, eps.values, seeds.bits(key, 1));
      FluctuationRow& row = rows[r];
      row.n = n;
      row.replica = static_cast<int>(r);
      row.T = observable(config.model, field, n, config.beta);
      row.T_tilde = observable(config.model, cf.perturbed, n, config.beta);
      row.gap = mode == CouplingMode::min ? row.T - row.T_tilde : row.T_tilde - row.T;
    });
    std::vector<double> T, gaps;
    for (const auto& row : rows) {
      T.push_back(row.T);
      gaps.push_back(row.gap);
    }
    FluctuationSummary s;
    s.n = n;
    s.samples = config.replicas;
    s.shorth = shorth_width(T, 0.5);
    s.iqr = interquartile_range(T);
    s.gap_q10 = quantile(gaps, 0.1);
    s.gap_median = quantile(gaps, 0.5);
    s.gap_q90 = quantile(gaps, 0.9);
    if (config.dist.is_continuous()) {
      std::vector<double> site_eps;
      for (std::size_t i = 0; i < shape.size(); ++i)
        if (shape.is_site(i) && eps.values[i] > 0.0) site_eps.push_back(eps.values[i]);
      s.tv_bound = hellinger_tv(config.dist, config.m, mode, site_eps).tv_bound;
    } else {
      s.tv_bound = std::numeric_limits<double>::quiet_NaN();
    }
    s.sum_eps_sq = eps.sum_sq;
    stats.summary.push_back(s);
    stats.raw.insert(stats.raw.end(), rows.begin(), rows.end());
  }
  return stats;
}

}  // namespace quenchlab
