#pragma once

// Exhaustive reference computations used by the unit and acceptance tests.
// Nothing here calls the library's solvers; only the input containers
// (Environment, WeightField) are shared.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <numeric>
#include <vector>

#include <boost/math/quadrature/sinh_sinh.hpp>
#include <boost/math/tools/roots.hpp>

#include "quenchlab/env.hpp"
#include "quenchlab/growth.hpp"
#include "quenchlab/lattice.hpp"

namespace oracle {

using quenchlab::Coord;
using quenchlab::operator+;

inline double logsumexp(const std::vector<double>& v) {
  double m = -std::numeric_limits<double>::infinity();
  for (double x : v) m = std::max(m, x);
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (double x : v) s += std::exp(x - m);
  return m + std::log(s);
}

struct PolymerEnumeration {
  double log_z = 0.0;
  std::map<Coord, double> endpoint;
  // marginal[i] is the law of sigma_i, i = 0..n
  std::vector<std::map<Coord, double>> marginal;
  double best_energy = -std::numeric_limits<double>::infinity();
  int best_count = 0;  // paths within 1e-12 of the best energy
  double runner_up = -std::numeric_limits<double>::infinity();  // best energy strictly below best_energy - 1e-12
};

// Every nearest-neighbour path of length n from the origin, each with
// probability (2d)^-n, weighted by exp(beta sum_{i=1}^n omega(i, sigma_i)).
inline PolymerEnumeration enumerate_polymer(const quenchlab::Environment& env, int n, double beta) {
  const int d = env.dim();
  std::vector<Coord> steps;
  for (int k = 0; k < d; ++k) {
    Coord e{0, 0};
    e[static_cast<std::size_t>(k)] = 1;
    steps.push_back(e);
    steps.push_back(Coord{-e[0], -e[1]});
  }
  const double log_step = -std::log(static_cast<double>(2 * d));
  std::vector<std::vector<Coord>> paths;
  std::vector<double> energies;
  std::vector<Coord> path{Coord{0, 0}};
  std::function<void(double)> rec = [&](double energy) {
    const int i = static_cast<int>(path.size()) - 1;
    if (i == n) {
      paths.push_back(path);
      energies.push_back(energy);
      return;
    }
    for (const Coord& s : steps) {
      const Coord x = path.back() + s;
      path.push_back(x);
      rec(energy + env(i + 1, x));
      path.pop_back();
    }
  };
  rec(0.0);

  PolymerEnumeration out;
  std::vector<double> logw(paths.size());
  for (std::size_t p = 0; p < paths.size(); ++p) logw[p] = beta * energies[p] + n * log_step;
  out.log_z = logsumexp(logw);
  out.marginal.resize(static_cast<std::size_t>(n) + 1);
  for (std::size_t p = 0; p < paths.size(); ++p) {
    const double w = std::exp(logw[p] - out.log_z);
    for (int i = 0; i <= n; ++i) out.marginal[static_cast<std::size_t>(i)][paths[p][static_cast<std::size_t>(i)]] += w;
    out.endpoint[paths[p].back()] += w;
  }
  for (double e : energies) out.best_energy = std::max(out.best_energy, e);
  for (double e : energies)
    if (e >= out.best_energy - 1e-12) ++out.best_count;
    else out.runner_up = std::max(out.runner_up, e);
  return out;
}

// Minimum over self-avoiding nearest-neighbour paths inside the box.
inline double fpp_enumerate(const quenchlab::WeightField& field, const Coord& src, const Coord& dst) {
  const quenchlab::Box& box = field.box();
  std::vector<char> seen(box.vertex_count(), 0);
  auto idx = [&](const Coord& v) {
    return static_cast<std::size_t>((v[0] - box.x0) * box.height() + (v[1] - box.y0));
  };
  auto weight = [&](const Coord& a, const Coord& b) {
    const Coord lo = std::min(a, b);
    const int dir = (a[0] != b[0]) ? 0 : 1;
    return field.edge(quenchlab::Edge{lo, dir});
  };
  double best = std::numeric_limits<double>::infinity();
  const Coord moves[4] = {{1, 0}, {-1, 0}, {0, 1}, {0, -1}};
  std::function<void(const Coord&, double)> rec = [&](const Coord& v, double t) {
    if (v == dst) {
      best = std::min(best, t);
      return;
    }
    for (const Coord& m : moves) {
      const Coord w = v + m;
      if (!box.contains(w) || seen[idx(w)]) continue;
      seen[idx(w)] = 1;
      rec(w, t + weight(v, w));
      seen[idx(w)] = 0;
    }
  };
  seen[idx(src)] = 1;
  rec(src, 0.0);
  return best;
}

// Every up-right path from src to dst; the source weight is not counted.
inline std::vector<double> lpp_path_weights(const quenchlab::WeightField& field, const Coord& src, const Coord& dst) {
  std::vector<double> out;
  std::function<void(const Coord&, double)> rec = [&](const Coord& v, double t) {
    if (v == dst) {
      out.push_back(t);
      return;
    }
    if (v[0] < dst[0]) {
      const Coord w{v[0] + 1, v[1]};
      rec(w, t + field.vertex(w));
    }
    if (v[1] < dst[1]) {
      const Coord w{v[0], v[1] + 1};
      rec(w, t + field.vertex(w));
    }
  };
  rec(src, 0.0);
  return out;
}

inline double lpp_enumerate(const quenchlab::WeightField& field, const Coord& src, const Coord& dst) {
  const auto w = lpp_path_weights(field, src, dst);
  return *std::max_element(w.begin(), w.end());
}

// All 2^n directed paths of length n from the origin.
inline std::vector<double> directed_path_weights(const quenchlab::WeightField& field, int n) {
  std::vector<double> out;
  for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
    Coord v{0, 0};
    double t = 0.0;
    for (int i = 0; i < n; ++i) {
      if (mask >> i & 1u) ++v[1];
      else ++v[0];
      t += field.vertex(v);
    }
    out.push_back(t);
  }
  return out;
}

inline double dp_enumerate(const quenchlab::WeightField& field, double beta, int n) {
  auto w = directed_path_weights(field, n);
  for (double& x : w) x *= beta;
  return logsumexp(w);
}

// Minimum-cost perfect matching by trying every permutation.
inline double assignment_enumerate(const std::vector<double>& cost, std::size_t n) {
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  double best = std::numeric_limits<double>::infinity();
  do {
    double c = 0.0;
    for (std::size_t i = 0; i < n; ++i) c += cost[i * n + perm[i]];
    best = std::min(best, c);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

// E g(eta) for eta standard normal, by double-exponential quadrature.
template <class G>
double normal_expect(G&& g) {
  boost::math::quadrature::sinh_sinh<double> integrator;
  const double c = 1.0 / std::sqrt(2.0 * std::acos(-1.0));
  return integrator.integrate([&](double x) { return c * std::exp(-0.5 * x * x) * g(x); });
}

// Positive root of q = E tanh^2(beta eta sqrt(2 q) + h) for the one-species
// model with unit variance, by bracketing on [lo, 1].
inline double sk_rs_bisection(double beta, double h, double lo = 1e-6) {
  auto excess = [&](double q) {
    const double s = beta * std::sqrt(2.0 * q);
    return normal_expect([&](double x) {
             const double t = std::tanh(s * x + h);
             return t * t;
           }) -
           q;
  };
  boost::math::tools::eps_tolerance<double> tol(50);
  auto r = boost::math::tools::bisect(excess, lo, 1.0, tol);
  return 0.5 * (r.first + r.second);
}

}  // namespace oracle
