#include <doctest.h>

#include <cmath>
#include <vector>

#include "quenchlab/env.hpp"
#include "quenchlab/errors.hpp"

using namespace quenchlab;

namespace {

std::vector<DistSpec> all_laws() {
  return {DistSpec::gaussian(0.0, 1.0), DistSpec::gaussian(0.3, 2.0), DistSpec::bernoulli_pm1(0.5),
          DistSpec::bernoulli_pm1(0.2), DistSpec::uniform(-1.0, 2.0), DistSpec::exponential(1.5)};
}

}  // namespace

TEST_CASE("degenerate and invalid laws are rejected") {
  CHECK_THROWS_AS(DistSpec::bernoulli_pm1(1.0), ParameterError);
  CHECK_THROWS_AS(DistSpec::bernoulli_pm1(0.0), ParameterError);
  CHECK_THROWS_AS(DistSpec::gaussian(0.0, 0.0), ParameterError);
  CHECK_THROWS_AS(DistSpec::uniform(1.0, 1.0), ParameterError);
  CHECK_THROWS_AS(DistSpec::exponential(0.0), ParameterError);
  DistSpec bad = DistSpec::gaussian();
  bad.sd = -1.0;
  CHECK_THROWS_AS(sample_environment(bad, 1, 3, 0), ParameterError);
  CHECK_THROWS_AS(sample_environment(DistSpec::gaussian(), 3, 3, 0), ParameterError);
  CHECK_THROWS_AS(sample_environment(DistSpec::gaussian(), 1, 0, 0), ParameterError);
}

TEST_CASE("nearly degenerate bernoulli gives almost all -1") {
  // 71 * 143 = 10153 draws; P(+1) = 1e-9 so more than 1% of +1 is impossible in practice
  const Environment env = sample_environment(DistSpec::bernoulli_pm1(1.0 - 1e-9), 1, 71, 4);
  const auto w = env.weights();
  REQUIRE(w.size() >= 10000);
  std::size_t minus = 0;
  for (double v : w) minus += (v == -1.0);
  CHECK(static_cast<double>(minus) >= 0.99 * static_cast<double>(w.size()));
}

TEST_CASE("gaussian sample mean and variance") {
  const Environment env = sample_environment(DistSpec::gaussian(), 2, 30, 11);
  const auto w = env.weights();
  const double N = static_cast<double>(w.size());
  REQUIRE(N >= 1e5);
  double s = 0.0, s2 = 0.0;
  for (double v : w) {
    s += v;
    s2 += v * v;
  }
  const double mean = s / N;
  CHECK(std::abs(mean) <= 4.0 / std::sqrt(N));
  CHECK(std::abs(s2 / N - mean * mean - 1.0) <= 4.0 * std::sqrt(2.0 / N));
}

TEST_CASE("sampling is deterministic and seed dependent") {
  for (const DistSpec& d : all_laws()) {
    const Environment a = sample_environment(d, 2, 5, 99);
    const Environment b = sample_environment(d, 2, 5, 99);
    const Environment c = sample_environment(d, 2, 5, 100);
    CHECK(std::equal(a.weights().begin(), a.weights().end(), b.weights().begin()));
    CHECK_FALSE(std::equal(a.weights().begin(), a.weights().end(), c.weights().begin()));
  }
}

TEST_CASE("sub-box sampling equals restriction of the full box") {
  for (int d : {1, 2}) {
    const Environment full = sample_environment(DistSpec::uniform(0.0, 3.0), d, 8, 5);
    const Environment sub = sample_environment(DistSpec::uniform(0.0, 3.0), d, 4, 5, 3);
    const Environment cut = full.restrict(4, 3);
    REQUIRE(sub.weights().size() == cut.weights().size());
    CHECK(std::equal(sub.weights().begin(), sub.weights().end(), cut.weights().begin()));
    CHECK(full(2, Coord{1, d == 2 ? -2 : 0}) == sub(2, Coord{1, d == 2 ? -2 : 0}));
  }
}

TEST_CASE("support of the samples respects the law") {
  const Environment u = sample_environment(DistSpec::uniform(-1.0, 2.0), 1, 20, 3);
  for (double v : u.weights()) CHECK((v > -1.0 && v < 2.0));
  const Environment e = sample_environment(DistSpec::exponential(2.0), 1, 20, 3);
  for (double v : e.weights()) CHECK(v > 0.0);
  const Environment b = sample_environment(DistSpec::bernoulli_pm1(0.3), 1, 20, 3);
  for (double v : b.weights()) CHECK((v == -1.0 || v == 1.0));
}

TEST_CASE("log_mgf closed forms") {
  for (double beta : {-1.3, 0.2, 0.7, 2.5}) CHECK(log_mgf(DistSpec::gaussian(), beta) == doctest::Approx(beta * beta / 2).epsilon(1e-14));
  CHECK(log_mgf(DistSpec::bernoulli_pm1(0.5), 1.0) == doctest::Approx(std::log(std::cosh(1.0))).epsilon(1e-14));
  CHECK(log_mgf(DistSpec::bernoulli_pm1(0.5), 1.0) == doctest::Approx(0.4337808).epsilon(1e-7));
  for (const DistSpec& d : all_laws()) CHECK(log_mgf(d, 0.0) == 0.0);
}

TEST_CASE("log_mgf agrees with numeric integration") {
  for (const DistSpec& d : all_laws()) {
    for (double beta : {-2.0, -0.5, 0.1, 0.9, 1.4}) {
      if (d.kind == DistKind::exponential && beta >= d.rate) continue;
      const double exact = log_mgf(d, beta);
      const double num = log_mgf_numeric(d, beta);
      CHECK(std::abs(exact - num) <= 1e-10 * std::max(1.0, std::abs(exact)));
    }
  }
}

TEST_CASE("log_mgf domain") {
  CHECK_THROWS_AS(log_mgf(DistSpec::exponential(1.0), 1.0), DomainError);
  CHECK_THROWS_AS(log_mgf(DistSpec::exponential(1.0), 3.0), DomainError);
  CHECK_NOTHROW(log_mgf(DistSpec::exponential(1.0), 0.999));
}

TEST_CASE("log_mgf is convex") {
  for (const DistSpec& d : all_laws()) {
    const double h = 1e-3;
    for (double beta = -2.0; beta <= 1.2; beta += 0.1) {
      const double second = log_mgf(d, beta + h) - 2 * log_mgf(d, beta) + log_mgf(d, beta - h);
      CHECK(second / (h * h) >= -1e-8);
    }
  }
}

TEST_CASE("walk kernel invariants") {
  CHECK_NOTHROW(WalkKernel::simple(1));
  CHECK(WalkKernel::simple(2).steps().size() == 4);
  CHECK_THROWS_AS(WalkKernel(1, {{Coord{1, 0}, 1.0}}), ParameterError);
  CHECK_THROWS_AS(WalkKernel(1, {{Coord{1, 0}, 0.6}, {Coord{-1, 0}, 0.6}}), ParameterError);
  CHECK_THROWS_AS(WalkKernel(1, {{Coord{1, 0}, -0.2}, {Coord{-1, 0}, 1.2}}), ParameterError);
  const WalkKernel lazy(1, {{Coord{0, 0}, 0.5}, {Coord{2, 0}, 0.25}, {Coord{-2, 0}, 0.25}});
  CHECK(lazy.reach() == 2);
  CHECK_FALSE(lazy.is_simple());
}

TEST_CASE("DistSpec json round trip") {
  for (const DistSpec& d : all_laws()) {
    nlohmann::json j = d;
    const DistSpec back = j.get<DistSpec>();
    CHECK(back.kind == d.kind);
    CHECK(log_mgf(back, 0.4) == log_mgf(d, 0.4));
  }
  CHECK_THROWS_AS(nlohmann::json::parse(R"({"kind":"gaussian","wat":1})").get<DistSpec>(), ParameterError);
}
