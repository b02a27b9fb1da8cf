#include "quenchlab/polymer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "quenchlab/errors.hpp"
#include "quenchlab/parallel.hpp"

namespace quenchlab {

namespace {

ConeSlice make_slice(int dim, int radius) {
  ConeSlice s;
  s.dim = dim;
  s.radius = radius;
  const std::size_t w = static_cast<std::size_t>(2 * radius + 1);
  s.mass.assign(dim == 1 ? w : w * w, 0.0);
  return s;
}

bool inside(const ConeSlice& s, const Coord& x) {
  return std::abs(x[0]) <= s.radius && (s.dim == 1 ? x[1] == 0 : std::abs(x[1]) <= s.radius);
}

void normalize(ConeSlice& s) {
  double total = 0.0;
  for (double v : s.mass) total += v;
  for (double& v : s.mass) v /= total;
}

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double se_of(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = mean_of(v);
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(v.size() - 1) / static_cast<double>(v.size()));
}

}  // namespace

std::size_t ConeSlice::index(const Coord& x) const noexcept {
  std::size_t k = static_cast<std::size_t>(x[0] + radius);
  if (dim == 2) k = k * static_cast<std::size_t>(width()) + static_cast<std::size_t>(x[1] + radius);
  return k;
}

double ConeSlice::at(const Coord& x) const noexcept { return inside(*this, x) ? mass[index(x)] : 0.0; }

LatticePMF ConeSlice::to_pmf() const {
  std::vector<Atom> atoms;
  for_each_site([&](const Coord& x, double m) {
    if (m > 0.0) atoms.push_back({x, m});
  });
  return LatticePMF(dim, std::move(atoms));
}

LatticePMF PolymerRun::forward(int i) const { return forward_slice(i).to_pmf(); }

const ConeSlice& PolymerRun::forward_slice(int i) const {
  if (i < 0 || i > horizon()) throw ParameterError("forward index out of range");
  return fwd_[static_cast<std::size_t>(i)];
}

LatticePMF PolymerRun::marginal(int i) const { return marginal_slice(i).to_pmf(); }

const ConeSlice& PolymerRun::marginal_slice(int i) const {
  if (!has_marginals()) throw ParameterError("run was built without i-th point marginals");
  if (i < 0 || i > horizon()) throw ParameterError("marginal index out of range");
  return marg_[static_cast<std::size_t>(i)];
}

PolymerRun forward_measures(const Environment& env, double beta, const WalkKernel& walk, PolymerOptions options) {
  if (walk.dim() != env.dim()) throw ParameterError("walk and environment dimensions differ");
  if (!(beta >= 0.0) || !std::isfinite(beta)) throw ParameterError("beta must be finite and >= 0");
  const int n = env.horizon();
  const int reach = walk.reach();
  if (env.radius() < n * reach)
    throw ParameterError("environment box (radius " + std::to_string(env.radius()) +
                         ") does not contain every site reachable in " + std::to_string(n) + " steps");
  PolymerRun run;
  run.env_ = &env;
  run.beta_ = beta;
  run.walk_ = walk;
  run.log_norm_.reserve(static_cast<std::size_t>(n));
  run.fwd_.reserve(static_cast<std::size_t>(n) + 1);

  ConeSlice f0 = make_slice(env.dim(), 0);
  f0.mass[0] = 1.0;
  run.fwd_.push_back(std::move(f0));

  for (int i = 1; i <= n; ++i) {
    const ConeSlice& prev = run.fwd_.back();
    ConeSlice cur = make_slice(env.dim(), i * reach);
    prev.for_each_site([&](const Coord& y, double m) {
      if (m == 0.0) return;
      for (const auto& s : walk.steps()) {
        if (s.prob == 0.0) continue;
        cur.mass[cur.index(y + s.dz)] += m * s.prob;
      }
    });
    double shift = -std::numeric_limits<double>::infinity();
    cur.for_each_site([&](const Coord& x, double m) {
      if (m > 0.0) shift = std::max(shift, beta * env(i, x));
    });
    if (beta == 0.0) shift = 0.0;
    double total = 0.0;
    std::size_t k = 0;
    cur.for_each_site([&](const Coord& x, double m) {
      if (m > 0.0 && beta != 0.0) cur.mass[k] = m * std::exp(beta * env(i, x) - shift);
      total += cur.mass[k];
      ++k;
    });
    for (double& v : cur.mass) v /= total;
    const double c = beta == 0.0 ? 0.0 : shift + std::log(total);
    run.log_norm_.push_back(c);
    run.log_z_ += c;
    run.fwd_.push_back(std::move(cur));
  }
  if (options.marginals) attach_marginals(run);
  return run;
}

void attach_marginals(PolymerRun& run) {
  const Environment& env = *run.env_;
  const int n = run.horizon();
  const int reach = run.walk_.reach();
  const double beta = run.beta_;
  std::vector<ConeSlice> marg(static_cast<std::size_t>(n) + 1);

  ConeSlice b = make_slice(env.dim(), n * reach);
  std::fill(b.mass.begin(), b.mass.end(), 1.0);
  marg[static_cast<std::size_t>(n)] = run.fwd_[static_cast<std::size_t>(n)];

  for (int i = n - 1; i >= 0; --i) {
    // Tilted backward weights at time i+1, shifted for range safety.
    const ConeSlice& next = b;
    double shift = -std::numeric_limits<double>::infinity();
    next.for_each_site([&](const Coord& x, double v) {
      if (v > 0.0) shift = std::max(shift, beta * env(i + 1, x));
    });
    ConeSlice cur = make_slice(env.dim(), i * reach);
    std::size_t k = 0;
    cur.for_each_site([&](const Coord& y, double) {
      double acc = 0.0;
      for (const auto& s : run.walk_.steps()) {
        if (s.prob == 0.0) continue;
        const Coord x = y + s.dz;
        const double v = next.at(x);
        if (v > 0.0) acc += s.prob * v * std::exp(beta * env(i + 1, x) - shift);
      }
      cur.mass[k++] = acc;
    });
    double peak = 0.0;
    for (double v : cur.mass) peak = std::max(peak, v);
    if (peak > 0.0)
      for (double& v : cur.mass) v /= peak;
    b = std::move(cur);

    ConeSlice m = run.fwd_[static_cast<std::size_t>(i)];
    for (std::size_t j = 0; j < m.mass.size(); ++j) m.mass[j] *= b.mass[j];
    normalize(m);
    marg[static_cast<std::size_t>(i)] = std::move(m);
  }
  run.marg_ = std::move(marg);
}

double free_energy(const PolymerRun& run) { return run.log_partition() / static_cast<double>(run.horizon()); }

std::vector<LatticePMF> ith_point_marginals(const PolymerRun& run) {
  std::vector<LatticePMF> out;
  for (int i = 0; i <= run.horizon(); ++i) out.push_back(run.marginal(i));
  return out;
}

double replica_overlap(const PolymerRun& run) {
  double total = 0.0;
  for (int i = 1; i <= run.horizon(); ++i) {
    double sq = 0.0;
    for (double v : run.marginal_slice(i).mass) sq += v * v;
    total += sq;
  }
  return std::clamp(total / static_cast<double>(run.horizon()), 0.0, 1.0);
}

double log_normalized_partition(const PolymerRun& run, int steps) {
  if (steps < 0) steps = run.horizon();
  if (steps > run.horizon()) throw ParameterError("normalized_partition: step count exceeds run length");
  if (steps == 0 || run.beta() == 0.0) return 0.0;
  const double lambda = log_mgf(run.env().dist(), run.beta());
  double acc = 0.0;
  for (int i = 0; i < steps; ++i) acc += run.log_normalizers()[static_cast<std::size_t>(i)];
  return acc - steps * lambda;
}

double normalized_partition(const PolymerRun& run, int steps) {
  const double lw = log_normalized_partition(run, steps);
  if (lw > std::log(std::numeric_limits<double>::max()))
    throw DomainError("normalized partition overflows double; use log_normalized_partition");
  return std::exp(lw);
}

double point_to_point_log_partition(const PolymerRun& run, const Coord& x) {
  const double m = run.forward_slice(run.horizon()).at(x);
  if (m <= 0.0) return -std::numeric_limits<double>::infinity();
  return std::log(m) + run.log_partition();
}

Environment ou_flow(const Environment& env, double t, std::uint64_t seed2) {
  if (!env.dist().is_standard_gaussian()) throw UnsupportedError("ou_flow requires a standard gaussian environment");
  if (!(t >= 0.0) || !std::isfinite(t)) throw ParameterError("ou_flow requires finite t >= 0");
  const double a = std::exp(-t);
  const double b = std::sqrt(-std::expm1(-2.0 * t));
  const KeyedStream fresh(seed2);
  std::vector<double> out;
  out.reserve(env.weights().size());
  const int r = env.radius();
  for (int i = 1; i <= env.horizon(); ++i) {
    for (int x = -r; x <= r; ++x) {
      if (env.dim() == 1) {
        out.push_back(a * env(i, {x, 0}) + b * fresh.normal(Environment::key(i, {x, 0})));
      } else {
        for (int y = -r; y <= r; ++y)
          out.push_back(a * env(i, {x, y}) + b * fresh.normal(Environment::key(i, {x, y})));
      }
    }
  }
  return Environment(env.dist(), env.dim(), env.horizon(), env.radius(), env.seed(), std::move(out));
}

OverlapDerivativeResult overlap_derivative_check(const DistSpec& dist, int dim, int n, double beta, double dbeta,
                                                 std::span<const std::uint64_t> seeds, int jobs) {
  if (dist.kind != DistKind::gaussian) throw UnsupportedError("overlap identity is checked for gaussian disorder only");
  if (!(dbeta > 0.0)) throw ParameterError("dbeta must be > 0");
  if (!(beta >= 0.0)) throw ParameterError("beta must be >= 0");
  if (seeds.size() < 2) throw ParameterError("need at least two seeds");
  OverlapDerivativeResult res;
  res.one_sided = beta < dbeta;
  const double lo = res.one_sided ? beta : beta - dbeta;
  const double hi = beta + dbeta;
  std::vector<double> overlap(seeds.size()), slope(seeds.size());
  parallel_for(seeds.size(), jobs, [&](std::size_t k) {
    const Environment env = sample_environment(dist, dim, n, seeds[k]);
    const WalkKernel walk = WalkKernel::simple(dim);
    overlap[k] = replica_overlap(forward_measures(env, beta, walk));
    const double f_hi = free_energy(forward_measures(env, hi, walk, {.marginals = false}));
    const double f_lo = free_energy(forward_measures(env, lo, walk, {.marginals = false}));
    slope[k] = (f_hi - f_lo) / (hi - lo);
  });
  std::vector<double> lhs(seeds.size()), diff(seeds.size());
  for (std::size_t k = 0; k < seeds.size(); ++k) {
    lhs[k] = beta * (1.0 - overlap[k]);
    diff[k] = lhs[k] - slope[k];
  }
  res.mean_overlap = mean_of(overlap);
  res.lhs = beta * (1.0 - res.mean_overlap);
  res.se_lhs = se_of(lhs);
  res.rhs = mean_of(slope);
  res.se_rhs = se_of(slope);
  res.se_paired = se_of(diff);
  res.samples = seeds.size();
  return res;
}

}  // namespace quenchlab
