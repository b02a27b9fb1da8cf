#include "quenchlab/msk.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>

#include "quenchlab/errors.hpp"
#include "quenchlab/parallel.hpp"
#include "quenchlab/rng.hpp"

namespace quenchlab {

namespace {

double log_cosh(double x) {
  const double a = std::abs(x);
  return a + std::log1p(std::exp(-2.0 * a)) - std::numbers::ln2;
}

double sech4(double x) {
  const double c = 1.0 / std::cosh(x);
  return c * c * c * c;
}

double tanh2(double x) {
  const double t = std::tanh(x);
  return t * t;
}

void require_two_species(const MSKModel& m, const char* what) {
  if (m.species() != 2) throw ParameterError(std::string(what) + " is defined for two species only");
}

Eigen::VectorXd ones(int M) { return Eigen::VectorXd::Ones(M); }

double two_species_threshold(double a1, double a2, double c12) {
  // 1 / (a1 + a2 + sqrt((a1 - a2)^2 + 4 c12)), a_s = w_s delta2_ss, c12 = w1 w2 (delta2_12)^2
  return 1.0 / (a1 + a2 + std::sqrt((a1 - a2) * (a1 - a2) + 4.0 * c12));
}

// One-level functional without the ordering and zeta-range checks, so the
// zeta-derivative at zeta = 1 can be taken by a symmetric stencil.
double parisi_1rsb_unchecked(const MSKModel& m, const Eigen::VectorXd& q, const Eigen::VectorXd& p, double zeta,
                             const Quadrature& quad) {
  const int M = m.species();
  const Eigen::VectorXd Q1s = species_Q(m, q);
  const Eigen::VectorXd Q2s = species_Q(m, p);
  const Eigen::VectorXd Q3s = species_Q(m, ones(M));
  const double Q1 = total_Q(m, q), Q2 = total_Q(m, p), Q3 = total_Q(m, ones(M));
  const double b = m.beta;
  const auto x = quad.nodes();
  const auto w = quad.weights();
  double value = std::numbers::ln2;
  for (int s = 0; s < M; ++s) {
    const double sd1 = b * std::sqrt(std::max(0.0, Q1s(s)));
    const double sd2 = b * std::sqrt(std::max(0.0, Q2s(s) - Q1s(s)));
    auto inner = [&](double y) {
      if (sd2 == 0.0) return zeta * log_cosh(y);
      double peak = -std::numeric_limits<double>::infinity();
      for (double xi : x) peak = std::max(peak, zeta * log_cosh(y + sd2 * xi));
      double acc = 0.0;
      for (std::size_t i = 0; i < x.size(); ++i) acc += w[i] * std::exp(zeta * log_cosh(y + sd2 * x[i]) - peak);
      return peak + std::log(acc);
    };
    const double outer = gauss_expect(inner, m.h, sd1, quad);
    value += m.lambda[static_cast<std::size_t>(s)] * (outer / zeta + 0.5 * b * b * (Q3s(s) - Q2s(s)));
  }
  value -= 0.5 * b * b * (Q3 - Q2 + zeta * (Q2 - Q1));
  return value;
}

void check_unit_box(const Eigen::VectorXd& q, int M, const char* what) {
  if (q.size() != M) throw ParameterError(std::string(what) + ": vector length differs from the species count");
  for (int s = 0; s < M; ++s)
    if (!(q(s) >= 0.0 && q(s) <= 1.0)) throw ParameterError(std::string(what) + ": entries must lie in [0, 1]");
}

struct XLevel {
  const MSKModel* m;
  const ParisiParams* params;
  const Quadrature* quad;
  int s;
  int k;
  std::vector<double> sd;  // beta sqrt(Q_{l+1}^s - Q_l^s), l = 0..k+1

  // X_l^s as a function of the accumulated field y.
  double eval(int l, double y) const {
    if (l == k + 1) return 0.5 * sd[static_cast<std::size_t>(k + 1)] * sd[static_cast<std::size_t>(k + 1)] + log_cosh(y);
    const double z = params->zeta[static_cast<std::size_t>(l)];
    const double s_l = sd[static_cast<std::size_t>(l)];
    const auto x = quad->nodes();
    const auto w = quad->weights();
    if (l == 0) {
      double acc = 0.0;
      if (s_l == 0.0) return eval(1, y);
      for (std::size_t i = 0; i < x.size(); ++i) acc += w[i] * eval(1, y + s_l * x[i]);
      return acc;
    }
    if (s_l == 0.0) return eval(l + 1, y);
    std::vector<double> vals(x.size());
    double peak = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < x.size(); ++i) {
      vals[i] = z * eval(l + 1, y + s_l * x[i]);
      peak = std::max(peak, vals[i]);
    }
    double acc = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) acc += w[i] * std::exp(vals[i] - peak);
    return (peak + std::log(acc)) / z;
  }
};

double golden_min(const std::function<double(double)>& f, double a, double b, int iters, double& xbest) {
  const double r = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = b - r * (b - a), d = a + r * (b - a);
  double fc = f(c), fd = f(d);
  for (int it = 0; it < iters; ++it) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - r * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + r * (b - a);
      fd = f(d);
    }
  }
  if (fc < fd) {
    xbest = c;
    return fc;
  }
  xbest = d;
  return fd;
}

}  // namespace

void MSKModel::validate() const {
  const int M = species();
  if (M < 1) throw ParameterError("MSK model needs at least one species");
  if (delta2.rows() != M || delta2.cols() != M) throw ParameterError("delta2 must be M x M");
  double total = 0.0;
  for (double l : lambda) {
    if (M == 1 ? !(l == 1.0) : !(l > 0.0 && l < 1.0)) throw ParameterError("species weights must lie in (0, 1)");
    total += l;
  }
  if (std::abs(total - 1.0) > 1e-12) throw ParameterError("species weights must sum to 1");
  for (int s = 0; s < M; ++s)
    for (int t = 0; t < M; ++t) {
      if (!std::isfinite(delta2(s, t)) || delta2(s, t) < 0.0) throw ParameterError("delta2 entries must be finite and >= 0");
      if (delta2(s, t) != delta2(t, s)) throw ParameterError("delta2 must be symmetric");
    }
  if (!(beta >= 0.0) || !std::isfinite(beta)) throw ParameterError("beta must be finite and >= 0");
  if (!(h >= 0.0) || !std::isfinite(h)) throw ParameterError("h must be finite and >= 0");
}

bool MSKModel::positive_definite() const {
  Eigen::LLT<Eigen::MatrixXd> llt(delta2);
  return llt.info() == Eigen::Success;
}

std::vector<std::string> MSKModel::warnings() const {
  std::vector<std::string> out;
  if (!positive_definite())
    out.emplace_back("delta2 is not positive definite; the variational formula is only a lower bound here");
  return out;
}

MSKModel MSKModel::two_species(double lambda1, double d11, double d22, double d12, double beta, double h) {
  MSKModel m;
  m.lambda = {lambda1, 1.0 - lambda1};
  m.delta2.resize(2, 2);
  m.delta2 << d11, d12, d12, d22;
  m.beta = beta;
  m.h = h;
  m.validate();
  return m;
}

MSKModel MSKModel::sk(double beta, double h) {
  MSKModel m;
  m.lambda = {1.0};
  m.delta2 = Eigen::MatrixXd::Ones(1, 1);
  m.beta = beta;
  m.h = h;
  m.validate();
  return m;
}

Eigen::VectorXd species_Q(const MSKModel& m, const Eigen::VectorXd& q) {
  const int M = m.species();
  Eigen::VectorXd out(M);
  for (int s = 0; s < M; ++s) {
    double acc = 0.0;
    for (int t = 0; t < M; ++t) acc += m.delta2(s, t) * m.lambda[static_cast<std::size_t>(t)] * q(t);
    out(s) = 2.0 * acc;
  }
  return out;
}

double total_Q(const MSKModel& m, const Eigen::VectorXd& q) {
  const int M = m.species();
  double acc = 0.0;
  for (int s = 0; s < M; ++s)
    for (int t = 0; t < M; ++t)
      acc += m.delta2(s, t) * m.lambda[static_cast<std::size_t>(s)] * m.lambda[static_cast<std::size_t>(t)] * q(s) * q(t);
  return acc;
}

Eigen::VectorXd rs_map(const MSKModel& m, const Eigen::VectorXd& q, const Quadrature& quad) {
  const Eigen::VectorXd Q1 = species_Q(m, q);
  Eigen::VectorXd out(m.species());
  for (int s = 0; s < m.species(); ++s)
    out(s) = gauss_expect(tanh2, m.h, m.beta * std::sqrt(std::max(0.0, Q1(s))), quad);
  return out;
}

RSResult rs_fixed_point(const MSKModel& m, const Quadrature& quad, const RSOptions& opt) {
  m.validate();
  if (!(opt.tol > 0.0)) throw ParameterError("tol must be > 0");
  if (!(opt.damping > 0.0 && opt.damping <= 1.0)) throw ParameterError("damping must lie in (0, 1]");
  if (opt.max_iter < 1 || opt.n_starts < 1) throw ParameterError("max_iter and n_starts must be >= 1");
  const int M = m.species();
  std::vector<Eigen::VectorXd> starts;
  if (M <= 10)
    for (unsigned c = 0; c < (1u << M); ++c) {
      Eigen::VectorXd v(M);
      for (int s = 0; s < M; ++s) v(s) = (c >> s) & 1u ? 1.0 : 0.0;
      starts.push_back(v);
    }
  starts.push_back(Eigen::VectorXd::Constant(M, 0.5));
  const KeyedStream rng(opt.seed, 0x5253);
  for (int r = 0; static_cast<int>(starts.size()) < opt.n_starts; ++r) {
    Eigen::VectorXd v(M);
    for (int s = 0; s < M; ++s) v(s) = rng.uniform(SiteKey{r, s});
    starts.push_back(v);
  }
  if (static_cast<int>(starts.size()) > opt.n_starts) starts.resize(static_cast<std::size_t>(opt.n_starts));

  RSResult res;
  Eigen::VectorXd last;
  for (const auto& start : starts) {
    Eigen::VectorXd q = start;
    bool ok = false;
    int it = 0;
    double resid = 0.0;
    for (; it < opt.max_iter; ++it) {
      const Eigen::VectorXd g = rs_map(m, q, quad);
      resid = (g - q).cwiseAbs().maxCoeff();
      if (resid <= opt.tol) {
        ok = true;
        break;
      }
      q = ((1.0 - opt.damping) * q + opt.damping * g).cwiseMax(0.0).cwiseMin(1.0);
    }
    last = q;
    if (!ok) {
      ++res.failed_starts;
      continue;
    }
    ++res.converged_starts;
    const bool dup = std::any_of(res.all.begin(), res.all.end(), [&](const RSPoint& p) {
      return (p.q - q).cwiseAbs().maxCoeff() <= 10.0 * opt.tol;
    });
    if (dup) continue;
    RSPoint pt;
    pt.q = q;
    pt.Q1 = species_Q(m, q);
    pt.residual = resid;
    pt.iterations = it;
    res.all.push_back(pt);
  }
  if (res.all.empty())
    throw ConvergenceError("rs_fixed_point: no start converged", std::vector<double>(last.data(), last.data() + last.size()));
  std::stable_sort(res.all.begin(), res.all.end(),
                   [](const RSPoint& a, const RSPoint& b) { return a.q.lpNorm<1>() > b.q.lpNorm<1>(); });
  res.point = res.all.front();
  return res;
}

double rs_free_energy(const MSKModel& m, const Eigen::VectorXd& q, const Quadrature& quad) {
  m.validate();
  const int M = m.species();
  check_unit_box(q, M, "rs_free_energy");
  const Eigen::VectorXd Q1s = species_Q(m, q);
  const Eigen::VectorXd Q2s = species_Q(m, ones(M));
  const double b = m.beta;
  double value = std::numbers::ln2;
  for (int s = 0; s < M; ++s) {
    const double e = gauss_expect(log_cosh, m.h, b * std::sqrt(std::max(0.0, Q1s(s))), quad);
    value += m.lambda[static_cast<std::size_t>(s)] * (e + 0.5 * b * b * (Q2s(s) - Q1s(s)));
  }
  return value - 0.5 * b * b * (total_Q(m, ones(M)) - total_Q(m, q));
}

double uniqueness_threshold(const MSKModel& m) {
  m.validate();
  require_two_species(m, "uniqueness_threshold");
  const double l1 = m.lambda[0], l2 = m.lambda[1];
  const double d12 = m.delta2(0, 1);
  return two_species_threshold(l1 * m.delta2(0, 0), l2 * m.delta2(1, 1), l1 * l2 * d12 * d12);
}

Eigen::VectorXd gamma_weights(const MSKModel& m, const Eigen::VectorXd& q, const Quadrature& quad) {
  const Eigen::VectorXd Q1 = species_Q(m, q);
  Eigen::VectorXd g(m.species());
  for (int s = 0; s < m.species(); ++s)
    g(s) = m.lambda[static_cast<std::size_t>(s)] * gauss_expect(sech4, m.h, m.beta * std::sqrt(std::max(0.0, Q1(s))), quad);
  return g;
}

ATCheck at_line_check(const MSKModel& m, const Eigen::VectorXd& q_star, const Quadrature& quad) {
  m.validate();
  require_two_species(m, "at_line_check");
  if (!(m.h > 0.0)) throw ParameterError("at_line_check requires h > 0");
  check_unit_box(q_star, 2, "at_line_check");
  const Eigen::VectorXd g = gamma_weights(m, q_star, quad);
  ATCheck out;
  out.gamma1 = g(0);
  out.gamma2 = g(1);
  const double d12 = m.delta2(0, 1);
  out.threshold_sq = two_species_threshold(g(0) * m.delta2(0, 0), g(1) * m.delta2(1, 1), g(0) * g(1) * d12 * d12);
  out.broken = m.beta * m.beta > out.threshold_sq;
  return out;
}

double at_line_beta_sq(const MSKModel& m, const Quadrature& quad, double beta_max) {
  require_two_species(m, "at_line_beta_sq");
  auto excess = [&](double beta) {
    MSKModel mb = m;
    mb.beta = beta;
    const RSResult rs = rs_fixed_point(mb, quad);
    return beta * beta - at_line_check(mb, rs.point.q, quad).threshold_sq;
  };
  double lo = 1e-3;
  if (excess(lo) >= 0.0) throw ConvergenceError("at_line_beta_sq: already broken at the smallest beta", {lo});
  double hi = 0.5;
  while (excess(hi) < 0.0) {
    lo = hi;
    hi *= 1.5;
    if (hi > beta_max) throw ConvergenceError("at_line_beta_sq: no crossing below beta_max", {hi});
  }
  for (int it = 0; it < 100 && hi - lo > 1e-13 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    (excess(mid) < 0.0 ? lo : hi) = mid;
  }
  const double b = 0.5 * (lo + hi);
  return b * b;
}

Eigen::MatrixXd hessian_V(const MSKModel& m, const Eigen::VectorXd& q_star, const Quadrature& quad) {
  m.validate();
  check_unit_box(q_star, m.species(), "hessian_V");
  const int M = m.species();
  const Eigen::VectorXd g = gamma_weights(m, q_star, quad);
  Eigen::VectorXd lam(M);
  for (int s = 0; s < M; ++s) lam(s) = m.lambda[static_cast<std::size_t>(s)];
  const double b2 = m.beta * m.beta;
  const Eigen::MatrixXd K = 2.0 * b2 * m.delta2 * g.asDiagonal() * m.delta2 - m.delta2;
  Eigen::MatrixXd H = b2 * lam.asDiagonal() * K * lam.asDiagonal();
  for (int i = 0; i < M; ++i)
    for (int j = i + 1; j < M; ++j) H(j, i) = H(i, j);
  return H;
}

double parisi_1rsb(const MSKModel& m, const Eigen::VectorXd& q, const Eigen::VectorXd& p, double zeta,
                   const Quadrature& quad) {
  m.validate();
  const int M = m.species();
  check_unit_box(q, M, "parisi_1rsb");
  check_unit_box(p, M, "parisi_1rsb");
  for (int s = 0; s < M; ++s)
    if (q(s) > p(s)) throw ParameterError("parisi_1rsb requires q <= p componentwise");
  if (!(zeta > 0.0 && zeta <= 1.0)) throw ParameterError("parisi_1rsb requires zeta in (0, 1]");
  return parisi_1rsb_unchecked(m, q, p, zeta, quad);
}

double V_function(const MSKModel& m, const Eigen::VectorXd& q_star, const Eigen::VectorXd& p, const Quadrature& quad,
                  double dzeta) {
  m.validate();
  check_unit_box(q_star, m.species(), "V_function");
  check_unit_box(p, m.species(), "V_function");
  for (int s = 0; s < m.species(); ++s)
    if (q_star(s) > p(s)) throw ParameterError("V_function requires p >= q_star componentwise");
  if (!(dzeta > 0.0 && dzeta < 0.25)) throw ParameterError("dzeta must lie in (0, 0.25)");
  auto P = [&](double z) { return parisi_1rsb_unchecked(m, q_star, p, z, quad); };
  return (-P(1.0 + 2.0 * dzeta) + 8.0 * P(1.0 + dzeta) - 8.0 * P(1.0 - dzeta) + P(1.0 - 2.0 * dzeta)) / (12.0 * dzeta);
}

VDerivatives V_derivatives_fd(const MSKModel& m, const Eigen::VectorXd& q_star, const Quadrature& quad, double step,
                              double dzeta) {
  const int M = m.species();
  const double v0 = V_function(m, q_star, q_star, quad, dzeta);
  // Coefficients (b, a) of g(t) = b t + a t^2 + c t^3 + e t^4 through t = step, ..., 4 step.
  auto fit = [&](const Eigen::VectorXd& x) {
    Eigen::Matrix4d A;
    Eigen::Vector4d y;
    for (int k = 1; k <= 4; ++k) {
      const double t = k * step;
      for (int c = 0; c < 4; ++c) A(k - 1, c) = std::pow(t, c + 1);
      y(k - 1) = V_function(m, q_star, (q_star + t * x).cwiseMin(1.0), quad, dzeta) - v0;
    }
    const Eigen::Vector4d c = A.fullPivLu().solve(y);
    return std::pair<double, double>{c(0), c(1)};
  };
  VDerivatives out;
  out.gradient.resize(M);
  out.hessian.resize(M, M);
  for (int i = 0; i < M; ++i) {
    const auto [b, a] = fit(Eigen::VectorXd::Unit(M, i));
    out.gradient(i) = b;
    out.hessian(i, i) = 2.0 * a;
  }
  for (int i = 0; i < M; ++i)
    for (int j = i + 1; j < M; ++j) {
      const auto [b, a] = fit(Eigen::VectorXd::Unit(M, i) + Eigen::VectorXd::Unit(M, j));
      (void)b;
      out.hessian(i, j) = out.hessian(j, i) = (2.0 * a - out.hessian(i, i) - out.hessian(j, j)) / 2.0;
    }
  return out;
}

void ParisiParams::validate(int species) const {
  const int kk = k();
  if (kk < 0) throw ParameterError("ParisiParams needs at least zeta_0 and zeta_1");
  if (kk > kMaxParisiLevels)
    throw SizeError("parisi_general supports at most 3 breaking levels (cost grows as order^(k+1))");
  if (zeta.front() != 0.0 || zeta.back() != 1.0) throw ParameterError("zeta must start at 0 and end at 1");
  for (std::size_t l = 1; l < zeta.size(); ++l)
    if (!(zeta[l] > zeta[l - 1])) throw ParameterError("zeta must be strictly increasing");
  if (q.size() != static_cast<std::size_t>(kk + 3)) throw ParameterError("q must hold k+3 levels");
  for (const auto& lvl : q)
    if (lvl.size() != species) throw ParameterError("q level length differs from the species count");
  for (int s = 0; s < species; ++s) {
    if (q.front()(s) != 0.0 || q.back()(s) != 1.0) throw ParameterError("q_0 must be 0 and q_{k+2} must be 1");
    for (std::size_t l = 1; l < q.size(); ++l)
      if (!(q[l](s) >= q[l - 1](s))) throw ParameterError("q levels must be nondecreasing");
  }
}

double parisi_general(const MSKModel& m, const ParisiParams& params, const Quadrature& quad) {
  m.validate();
  const int M = m.species();
  params.validate(M);
  const int k = params.k();
  std::vector<Eigen::VectorXd> Qs;
  std::vector<double> Qt;
  for (const auto& lvl : params.q) {
    Qs.push_back(species_Q(m, lvl));
    Qt.push_back(total_Q(m, lvl));
  }
  double value = std::numbers::ln2;
  for (int s = 0; s < M; ++s) {
    XLevel X{&m, &params, &quad, s, k, {}};
    for (int l = 0; l <= k + 1; ++l)
      X.sd.push_back(m.beta * std::sqrt(std::max(0.0, Qs[static_cast<std::size_t>(l + 1)](s) - Qs[static_cast<std::size_t>(l)](s))));
    value += m.lambda[static_cast<std::size_t>(s)] * X.eval(0, m.h);
  }
  double pen = 0.0;
  for (int l = 1; l <= k + 1; ++l)
    pen += params.zeta[static_cast<std::size_t>(l)] * (Qt[static_cast<std::size_t>(l + 1)] - Qt[static_cast<std::size_t>(l)]);
  return value - 0.5 * m.beta * m.beta * pen;
}

std::optional<Eigen::VectorXd> breaking_direction(const MSKModel& m, const Eigen::VectorXd& q_star,
                                                  const Quadrature& quad) {
  require_two_species(m, "breaking_direction");
  const Eigen::VectorXd g = gamma_weights(m, q_star, quad);
  const Eigen::MatrixXd K = 2.0 * m.beta * m.beta * m.delta2 * g.asDiagonal() * m.delta2 - m.delta2;
  const double u = K(0, 0), t = K(1, 1), v = K(0, 1);
  if (u > 0.0) return Eigen::Vector2d(1.0, 0.0);
  if (t > 0.0) return Eigen::Vector2d(0.0, 1.0);
  if (std::sqrt(u * t) < v) {
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(K.topLeftCorner<2, 2>());
    Eigen::Vector2d x = es.eigenvectors().col(1);
    if (x(0) < 0.0) x = -x;
    x = x.cwiseMax(0.0);
    return Eigen::VectorXd(x / x.maxCoeff());
  }
  return std::nullopt;
}

namespace {

std::optional<SymmetryWitness> search_direction(const MSKModel& m, const Eigen::VectorXd& q_star,
                                                const Eigen::VectorXd& x, double prs, const Quadrature& quad,
                                                const SymmetrySearchOptions& opt) {
  auto p_of = [&](double eps, bool* hit) {
    Eigen::VectorXd p = q_star + eps * x;
    for (int s = 0; s < p.size(); ++s)
      if (p(s) > 1.0) {
        p(s) = 1.0;
        if (hit) *hit = true;
      }
    return p;
  };
  auto value = [&](double eps, double zeta) { return parisi_1rsb(m, q_star, p_of(eps, nullptr), zeta, quad); };

  double best = std::numeric_limits<double>::infinity();
  double best_eps = opt.eps_min, best_zeta = opt.zeta_max;
  const double leps0 = std::log(opt.eps_min), leps1 = std::log(opt.eps_max);
  for (int i = 0; i < opt.eps_points; ++i) {
    const double eps = std::exp(leps0 + (leps1 - leps0) * i / (opt.eps_points - 1));
    for (int j = 0; j < opt.zeta_points; ++j) {
      const double zeta = opt.zeta_min + (opt.zeta_max - opt.zeta_min) * j / (opt.zeta_points - 1);
      const double v = value(eps, zeta);
      if (v < best) {
        best = v;
        best_eps = eps;
        best_zeta = zeta;
      }
    }
  }
  // Alternate golden-section refinements in zeta and log eps around the grid optimum.
  const double dz = (opt.zeta_max - opt.zeta_min) / (opt.zeta_points - 1);
  const double dl = (leps1 - leps0) / (opt.eps_points - 1);
  for (int round = 0; round < 2; ++round) {
    double zb = best_zeta;
    const double vz = golden_min([&](double z) { return value(best_eps, z); }, std::max(opt.zeta_min, best_zeta - dz),
                                 std::min(opt.zeta_max, best_zeta + dz), 40, zb);
    if (vz < best) {
      best = vz;
      best_zeta = zb;
    }
    double lb = std::log(best_eps);
    const double ve = golden_min([&](double le) { return value(std::exp(le), best_zeta); },
                                 std::max(leps0, lb - dl), std::min(leps1, lb + dl), 40, lb);
    if (ve < best) {
      best = ve;
      best_eps = std::exp(lb);
    }
  }
  if (!(best < prs - opt.margin)) return std::nullopt;
  SymmetryWitness w;
  w.x = x;
  w.eps = best_eps;
  w.zeta = best_zeta;
  w.p1rsb = best;
  w.prs = prs;
  bool hit = false;
  p_of(best_eps, &hit);
  w.boundary_hit = hit;
  return w;
}

}  // namespace

std::optional<SymmetryWitness> verify_symmetry_breaking(const MSKModel& m, const Eigen::VectorXd& q_star,
                                                        const Quadrature& quad, const SymmetrySearchOptions& opt) {
  m.validate();
  require_two_species(m, "verify_symmetry_breaking");
  if (!(m.h > 0.0)) throw ParameterError("verify_symmetry_breaking requires h > 0");
  if (q_star.size() != 2) throw ParameterError("verify_symmetry_breaking needs the RS fixed point");
  check_unit_box(q_star, 2, "verify_symmetry_breaking");
  if (!(opt.eps_min > 0.0 && opt.eps_max > opt.eps_min && opt.eps_points >= 2 && opt.zeta_points >= 2 &&
        opt.zeta_min > 0.0 && opt.zeta_max < 1.0 && opt.zeta_min < opt.zeta_max))
    throw ParameterError("invalid symmetry search grid");
  const auto dir = breaking_direction(m, q_star, quad);
  if (!dir) return std::nullopt;
  const double prs = rs_free_energy(m, q_star, quad);
  std::vector<Eigen::VectorXd> candidates{*dir};
  // Fallback: the nonnegative maximizer of x^T H x / |x|^2. The case-split
  // direction can carry curvature too weak to clear the margin on the grid.
  {
    const Eigen::Matrix2d H = hessian_V(m, q_star, quad).topLeftCorner<2, 2>();
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(H);
    Eigen::Vector2d v = es.eigenvectors().col(1);
    if (v(0) < 0.0 || (v(0) == 0.0 && v(1) < 0.0)) v = -v;
    Eigen::VectorXd best_dir;
    if (v(1) >= 0.0)
      best_dir = v / v.maxCoeff();
    else
      best_dir = H(0, 0) >= H(1, 1) ? Eigen::Vector2d(1.0, 0.0) : Eigen::Vector2d(0.0, 1.0);
    if ((best_dir - *dir).cwiseAbs().maxCoeff() > 1e-12) candidates.push_back(best_dir);
  }
  for (const auto& x : candidates) {
    auto w = search_direction(m, q_star, x, prs, quad, opt);
    if (w) return w;
  }
  return std::nullopt;
}

std::vector<int> species_sizes(const MSKModel& m, int N) {
  std::vector<int> sizes;
  int used = 0;
  for (int s = 0; s + 1 < m.species(); ++s) {
    const int n = static_cast<int>(std::lround(m.lambda[static_cast<std::size_t>(s)] * N));
    sizes.push_back(n);
    used += n;
  }
  sizes.push_back(N - used);
  for (int n : sizes)
    if (n < 0) throw ParameterError("species sizes are not representable at this N");
  return sizes;
}

double finite_N_log_partition(const MSKModel& m, int N, std::uint64_t seed) {
  m.validate();
  if (N < 1) throw ParameterError("N must be >= 1");
  if (N > kMaxExactSpins) throw SizeError("exact spin enumeration is limited to N <= 24");
  if (m.beta == 0.0) return std::numbers::ln2 + log_cosh(m.h) + 0.0 * N;
  const std::vector<int> sizes = species_sizes(m, N);
  std::vector<int> species(static_cast<std::size_t>(N));
  for (int s = 0, i = 0; s < m.species(); ++s)
    for (int c = 0; c < sizes[static_cast<std::size_t>(s)]; ++c) species[static_cast<std::size_t>(i++)] = s;
  const KeyedStream rng(seed, 0x534b);
  const double scale = m.beta / std::sqrt(static_cast<double>(N));
  std::vector<double> J(static_cast<std::size_t>(N * N), 0.0);
  double diag = 0.0;
  for (int i = 0; i < N; ++i)
    for (int j = 0; j < N; ++j) {
      const double sd = std::sqrt(m.delta2(species[static_cast<std::size_t>(i)], species[static_cast<std::size_t>(j)]));
      const double g = sd * rng.normal(SiteKey{i, j});
      if (i == j)
        diag += g;
      else {
        J[static_cast<std::size_t>(i * N + j)] += g;
        J[static_cast<std::size_t>(j * N + i)] += g;
      }
    }
  // All spins up: energy and local fields L_k = sum_j J_kj sigma_j.
  std::vector<int> sigma(static_cast<std::size_t>(N), 1);
  std::vector<double> field(static_cast<std::size_t>(N), 0.0);
  double pair = 0.0;
  for (int i = 0; i < N; ++i)
    for (int j = 0; j < N; ++j) field[static_cast<std::size_t>(i)] += J[static_cast<std::size_t>(i * N + j)];
  for (int i = 0; i < N; ++i) pair += 0.5 * field[static_cast<std::size_t>(i)];
  double energy = scale * (diag + pair) + m.h * N;
  double peak = energy, acc = 1.0;
  const std::uint64_t total = std::uint64_t{1} << N;
  for (std::uint64_t step = 1; step < total; ++step) {
    const int k = std::countr_zero(step);
    const double sk = sigma[static_cast<std::size_t>(k)];
    energy += -2.0 * sk * (scale * field[static_cast<std::size_t>(k)] + m.h);
    for (int j = 0; j < N; ++j) field[static_cast<std::size_t>(j)] -= 2.0 * sk * J[static_cast<std::size_t>(j * N + k)];
    sigma[static_cast<std::size_t>(k)] = -sigma[static_cast<std::size_t>(k)];
    if (energy > peak) {
      acc = acc * std::exp(peak - energy) + 1.0;
      peak = energy;
    } else {
      acc += std::exp(energy - peak);
    }
  }
  return (peak + std::log(acc)) / N;
}

MonteCarloEstimate finite_N_free_energy_mc(const MSKModel& m, int N, int n_seeds, std::uint64_t seed, int jobs) {
  if (n_seeds < 2) throw ParameterError("need at least two disorder samples");
  if (N > kMaxExactSpins) throw SizeError("exact spin enumeration is limited to N <= 24");
  std::vector<double> v(static_cast<std::size_t>(n_seeds));
  const KeyedStream base(seed, 0x4d43);
  parallel_for(v.size(), jobs, [&](std::size_t k) {
    v[k] = finite_N_log_partition(m, N, base.bits(SiteKey{static_cast<std::int64_t>(k)}));
  });
  MonteCarloEstimate out;
  out.samples = n_seeds;
  for (double x : v) out.mean += x;
  out.mean /= n_seeds;
  double ss = 0.0;
  for (double x : v) ss += (x - out.mean) * (x - out.mean);
  out.se = std::sqrt(ss / (n_seeds - 1) / n_seeds);
  return out;
}

}  // namespace quenchlab
