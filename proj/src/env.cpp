#include "quenchlab/env.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "quenchlab/errors.hpp"

namespace quenchlab {

std::string to_string(DistKind kind) {
  switch (kind) {
    case DistKind::gaussian: return "gaussian";
    case DistKind::bernoulli_pm1: return "bernoulli_pm1";
    case DistKind::uniform: return "uniform";
    case DistKind::exponential: return "exponential";
  }
  return "unknown";
}

DistKind dist_kind_from_string(const std::string& name) {
  if (name == "gaussian") return DistKind::gaussian;
  if (name == "bernoulli_pm1") return DistKind::bernoulli_pm1;
  if (name == "uniform") return DistKind::uniform;
  if (name == "exponential") return DistKind::exponential;
  throw ParameterError("unknown distribution kind '" + name + "'");
}

DistSpec DistSpec::gaussian(double mean, double sd) {
  DistSpec d;
  d.kind = DistKind::gaussian;
  d.mean = mean;
  d.sd = sd;
  d.validate();
  return d;
}

DistSpec DistSpec::bernoulli_pm1(double p) {
  DistSpec d;
  d.kind = DistKind::bernoulli_pm1;
  d.p = p;
  d.validate();
  return d;
}

DistSpec DistSpec::uniform(double a, double b) {
  DistSpec d;
  d.kind = DistKind::uniform;
  d.a = a;
  d.b = b;
  d.validate();
  return d;
}

DistSpec DistSpec::exponential(double rate) {
  DistSpec d;
  d.kind = DistKind::exponential;
  d.rate = rate;
  d.validate();
  return d;
}

void DistSpec::validate() const {
  switch (kind) {
    case DistKind::gaussian:
      if (!std::isfinite(mean) || !(sd > 0.0) || !std::isfinite(sd))
        throw ParameterError("gaussian requires finite mean and sd > 0");
      break;
    case DistKind::bernoulli_pm1:
      if (!(p > 0.0 && p < 1.0))
        throw ParameterError("bernoulli_pm1 requires 0 < p < 1 (degenerate laws are rejected)");
      break;
    case DistKind::uniform:
      if (!std::isfinite(a) || !std::isfinite(b) || !(a < b))
        throw ParameterError("uniform requires finite endpoints a < b");
      break;
    case DistKind::exponential:
      if (!(rate > 0.0) || !std::isfinite(rate)) throw ParameterError("exponential requires rate > 0");
      break;
  }
}

double DistSpec::draw(const KeyedStream& stream, const SiteKey& key) const {
  switch (kind) {
    case DistKind::gaussian: return mean + sd * stream.normal(key);
    case DistKind::bernoulli_pm1: return stream.uniform(key) < p ? -1.0 : 1.0;
    case DistKind::uniform: return a + (b - a) * stream.uniform(key);
    case DistKind::exponential: return -std::log(stream.uniform(key)) / rate;
  }
  return 0.0;
}

double DistSpec::expectation() const {
  switch (kind) {
    case DistKind::gaussian: return mean;
    case DistKind::bernoulli_pm1: return 1.0 - 2.0 * p;
    case DistKind::uniform: return 0.5 * (a + b);
    case DistKind::exponential: return 1.0 / rate;
  }
  return 0.0;
}

double DistSpec::essinf() const {
  switch (kind) {
    case DistKind::gaussian: return -std::numeric_limits<double>::infinity();
    case DistKind::bernoulli_pm1: return -1.0;
    case DistKind::uniform: return a;
    case DistKind::exponential: return 0.0;
  }
  return 0.0;
}

double DistSpec::esssup() const {
  switch (kind) {
    case DistKind::bernoulli_pm1: return 1.0;
    case DistKind::uniform: return b;
    default: return std::numeric_limits<double>::infinity();
  }
}

double DistSpec::atom_at_essinf() const { return kind == DistKind::bernoulli_pm1 ? p : 0.0; }
double DistSpec::atom_at_esssup() const { return kind == DistKind::bernoulli_pm1 ? 1.0 - p : 0.0; }

double DistSpec::pdf(double x) const {
  switch (kind) {
    case DistKind::gaussian: {
      const double z = (x - mean) / sd;
      return std::exp(-0.5 * z * z) / (sd * std::sqrt(2.0 * std::numbers::pi));
    }
    case DistKind::uniform: return (x >= a && x <= b) ? 1.0 / (b - a) : 0.0;
    case DistKind::exponential: return x >= 0.0 ? rate * std::exp(-rate * x) : 0.0;
    case DistKind::bernoulli_pm1: break;
  }
  throw UnsupportedError("bernoulli_pm1 has no density");
}

double DistSpec::cdf(double x) const {
  switch (kind) {
    case DistKind::gaussian: return 0.5 * std::erfc(-(x - mean) / (sd * std::numbers::sqrt2));
    case DistKind::uniform: return std::clamp((x - a) / (b - a), 0.0, 1.0);
    case DistKind::exponential: return x <= 0.0 ? 0.0 : -std::expm1(-rate * x);
    case DistKind::bernoulli_pm1: break;
  }
  throw UnsupportedError("cdf is only provided for continuous laws");
}

double DistSpec::sf(double x) const {
  switch (kind) {
    case DistKind::gaussian: return 0.5 * std::erfc((x - mean) / (sd * std::numbers::sqrt2));
    case DistKind::uniform: return std::clamp((b - x) / (b - a), 0.0, 1.0);
    case DistKind::exponential: return x <= 0.0 ? 1.0 : std::exp(-rate * x);
    case DistKind::bernoulli_pm1: break;
  }
  throw UnsupportedError("sf is only provided for continuous laws");
}

void to_json(nlohmann::json& j, const DistSpec& dist) {
  nlohmann::json params;
  switch (dist.kind) {
    case DistKind::gaussian: params = {{"mean", dist.mean}, {"sd", dist.sd}}; break;
    case DistKind::bernoulli_pm1: params = {{"p", dist.p}}; break;
    case DistKind::uniform: params = {{"a", dist.a}, {"b", dist.b}}; break;
    case DistKind::exponential: params = {{"rate", dist.rate}}; break;
  }
  j = {{"kind", to_string(dist.kind)}, {"params", params}};
}

void from_json(const nlohmann::json& j, DistSpec& dist) {
  if (!j.is_object() || !j.contains("kind")) throw ParameterError("DistSpec JSON needs a 'kind' field");
  for (const auto& [key, _] : j.items())
    if (key != "kind" && key != "params") throw ParameterError("unknown DistSpec key '" + key + "'");
  DistSpec d;
  d.kind = dist_kind_from_string(j.at("kind").get<std::string>());
  const nlohmann::json params = j.value("params", nlohmann::json::object());
  auto take = [&](const char* name, double& slot) {
    if (params.contains(name)) slot = params.at(name).get<double>();
  };
  std::vector<std::string> allowed;
  switch (d.kind) {
    case DistKind::gaussian: allowed = {"mean", "sd"}; take("mean", d.mean); take("sd", d.sd); break;
    case DistKind::bernoulli_pm1: allowed = {"p"}; take("p", d.p); break;
    case DistKind::uniform: allowed = {"a", "b"}; take("a", d.a); take("b", d.b); break;
    case DistKind::exponential: allowed = {"rate"}; take("rate", d.rate); break;
  }
  for (const auto& [key, _] : params.items())
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end())
      throw ParameterError("parameter '" + key + "' is not valid for " + to_string(d.kind));
  d.validate();
  dist = d;
}

double log_mgf(const DistSpec& dist, double beta) {
  dist.validate();
  if (!std::isfinite(beta)) throw DomainError("log_mgf: beta must be finite");
  if (beta == 0.0) return 0.0;
  switch (dist.kind) {
    case DistKind::gaussian: return beta * dist.mean + 0.5 * beta * beta * dist.sd * dist.sd;
    case DistKind::bernoulli_pm1: {
      // log(p e^{-beta} + (1-p) e^{beta}), evaluated around the larger term.
      const double lo = std::log(dist.p) - beta;
      const double hi = std::log1p(-dist.p) + beta;
      const double m = std::max(lo, hi);
      return m + std::log(std::exp(lo - m) + std::exp(hi - m));
    }
    case DistKind::uniform: {
      const double w = beta * (dist.b - dist.a);
      // E e^{beta U} = e^{beta a} (e^w - 1) / w; use the larger endpoint for w < 0.
      if (w > 0.0) return beta * dist.a + std::log(std::expm1(w) / w);
      return beta * dist.b + std::log(std::expm1(-w) / -w);
    }
    case DistKind::exponential:
      if (beta >= dist.rate) throw DomainError("log_mgf: exponential law requires beta < rate");
      return std::log(dist.rate) - std::log(dist.rate - beta);
  }
  return 0.0;
}

double log_mgf_numeric(const DistSpec& dist, double beta) {
  dist.validate();
  if (beta == 0.0) return 0.0;
  using boost::math::quadrature::gauss_kronrod;
  switch (dist.kind) {
    case DistKind::bernoulli_pm1:
      return std::log(dist.p * std::exp(-beta) + (1.0 - dist.p) * std::exp(beta));
    case DistKind::gaussian: {
      // Integrate in the standardized variable; shift the exponent by its
      // maximum over a grid so large beta stays representable.
      const double s = beta * dist.sd;
      auto expo = [&](double z) { return -0.5 * z * z + s * z; };
      double shift = -std::numeric_limits<double>::infinity();
      double centre = 0.0;
      for (double z = -60.0 - std::abs(s); z <= 60.0 + std::abs(s); z += 0.01)
        if (expo(z) > shift) { shift = expo(z); centre = z; }
      auto f = [&](double z) { return std::exp(expo(z) - shift) / std::sqrt(2.0 * std::numbers::pi); };
      const double integral = gauss_kronrod<double, 61>::integrate(f, centre - 40.0, centre + 40.0, 20, 1e-14);
      return beta * dist.mean + shift + std::log(integral);
    }
    case DistKind::uniform: {
      const double shift = std::max(beta * dist.a, beta * dist.b);
      auto f = [&](double x) { return std::exp(beta * x - shift) / (dist.b - dist.a); };
      return shift + std::log(gauss_kronrod<double, 61>::integrate(f, dist.a, dist.b, 20, 1e-14));
    }
    case DistKind::exponential: {
      if (beta >= dist.rate) throw DomainError("log_mgf_numeric: exponential law requires beta < rate");
      boost::math::quadrature::exp_sinh<double> integrator;
      auto f = [&](double x) { return dist.rate * std::exp(-(dist.rate - beta) * x); };
      return std::log(integrator.integrate(f, 0.0, std::numeric_limits<double>::infinity()));
    }
  }
  return 0.0;
}

WalkKernel::WalkKernel(int dim, std::vector<WalkStep> steps) : dim_(dim), steps_(std::move(steps)) {
  if (dim_ != 1 && dim_ != 2) throw ParameterError("walk dimension must be 1 or 2");
  if (steps_.empty()) throw ParameterError("walk kernel needs at least one step");
  double total = 0.0;
  double largest = 0.0;
  reach_ = 0;
  for (const auto& s : steps_) {
    if (!(s.prob >= 0.0)) throw ParameterError("walk kernel probabilities must be nonnegative");
    if (dim_ == 1 && s.dz[1] != 0) throw ParameterError("1-d walk step with a second coordinate");
    total += s.prob;
    largest = std::max(largest, s.prob);
    reach_ = std::max({reach_, std::abs(s.dz[0]), std::abs(s.dz[1])});
  }
  if (std::abs(total - 1.0) > 1e-12) throw ParameterError("walk kernel must sum to 1");
  if (!(largest < 1.0)) throw ParameterError("walk kernel must not be deterministic (max K(z) < 1)");
  reach_ = std::max(reach_, 1);
}

WalkKernel WalkKernel::simple(int dim) {
  std::vector<WalkStep> steps;
  if (dim == 1) {
    steps = {{{-1, 0}, 0.5}, {{1, 0}, 0.5}};
  } else if (dim == 2) {
    steps = {{{-1, 0}, 0.25}, {{1, 0}, 0.25}, {{0, -1}, 0.25}, {{0, 1}, 0.25}};
  } else {
    throw ParameterError("walk dimension must be 1 or 2");
  }
  WalkKernel k(dim, std::move(steps));
  k.simple_ = true;
  return k;
}

Environment::Environment(DistSpec dist, int dim, int horizon, int radius, std::uint64_t seed,
                         std::vector<double> weights)
    : dist_(dist), dim_(dim), horizon_(horizon), radius_(radius), seed_(seed), weights_(std::move(weights)) {
  if (dim_ != 1 && dim_ != 2) throw ParameterError("environment dimension must be 1 or 2");
  if (horizon_ < 1) throw ParameterError("environment horizon must be >= 1");
  if (radius_ < 0) throw ParameterError("environment radius must be >= 0");
  const std::size_t w = static_cast<std::size_t>(width());
  slab_ = dim_ == 1 ? w : w * w;
  if (weights_.size() != slab_ * static_cast<std::size_t>(horizon_))
    throw ParameterError("environment weight array has the wrong size");
  for (double v : weights_)
    if (!std::isfinite(v)) throw ParameterError("environment weights must be finite");
}

bool Environment::contains(const Coord& x) const noexcept {
  if (std::abs(x[0]) > radius_) return false;
  return dim_ == 1 ? x[1] == 0 : std::abs(x[1]) <= radius_;
}

std::size_t Environment::index(int i, const Coord& x) const noexcept {
  const std::size_t w = static_cast<std::size_t>(width());
  std::size_t off = static_cast<std::size_t>(x[0] + radius_);
  if (dim_ == 2) off = off * w + static_cast<std::size_t>(x[1] + radius_);
  return static_cast<std::size_t>(i - 1) * slab_ + off;
}

Environment Environment::restrict(int horizon, int radius) const {
  if (horizon < 1 || horizon > horizon_ || radius < 0 || radius > radius_)
    throw ParameterError("restriction must be a sub-box of the environment");
  const int w = 2 * radius + 1;
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(horizon) * (dim_ == 1 ? w : w * w));
  for (int i = 1; i <= horizon; ++i) {
    if (dim_ == 1) {
      for (int x = -radius; x <= radius; ++x) out.push_back((*this)(i, {x, 0}));
    } else {
      for (int x = -radius; x <= radius; ++x)
        for (int y = -radius; y <= radius; ++y) out.push_back((*this)(i, {x, y}));
    }
  }
  return Environment(dist_, dim_, horizon, radius, seed_, std::move(out));
}

Environment sample_environment(const DistSpec& dist, int dim, int horizon, std::uint64_t seed, int radius) {
  dist.validate();
  if (dim != 1 && dim != 2) throw ParameterError("environment dimension must be 1 or 2");
  if (horizon < 1) throw ParameterError("environment horizon must be >= 1");
  if (radius < 0) radius = horizon;
  const KeyedStream stream(seed);
  const int w = 2 * radius + 1;
  std::vector<double> weights;
  weights.reserve(static_cast<std::size_t>(horizon) * (dim == 1 ? w : static_cast<std::size_t>(w) * w));
  for (int i = 1; i <= horizon; ++i) {
    if (dim == 1) {
      for (int x = -radius; x <= radius; ++x) weights.push_back(dist.draw(stream, Environment::key(i, {x, 0})));
    } else {
      for (int x = -radius; x <= radius; ++x)
        for (int y = -radius; y <= radius; ++y)
          weights.push_back(dist.draw(stream, Environment::key(i, {x, y})));
    }
  }
  return Environment(dist, dim, horizon, radius, seed, std::move(weights));
}

}  // namespace quenchlab
