#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "markov_approx/sampling.hpp"

using namespace markov_approx;

namespace {

// log Gamma by recurrence up to x >= 20 and the Stirling series; independent
// of the standard library's gamma functions.
double lgamma_series(double x) {
  double shift = 0.0;
  while (x < 20.0) {
    shift -= std::log(x);
    x += 1.0;
  }
  const double x2 = x * x;
  const double series = 1.0 / (12 * x) - 1.0 / (360 * x * x2) + 1.0 / (1260 * x2 * x2 * x) -
                        1.0 / (1680 * x2 * x2 * x2 * x) + 1.0 / (1188 * x2 * x2 * x2 * x2 * x);
  return shift + (x - 0.5) * std::log(x) - x + 0.5 * std::log(2 * std::numbers::pi) + series;
}

double gamma_series(double x) { return std::exp(lgamma_series(x)); }

}  // namespace

TEST_CASE("series oracle reproduces known Gamma values") {
  CHECK(gamma_series(0.5) == doctest::Approx(std::sqrt(std::numbers::pi)).epsilon(1e-13));
  CHECK(gamma_series(5.0) == doctest::Approx(24.0).epsilon(1e-13));
  CHECK(gamma_series(1.5) == doctest::Approx(0.5 * std::sqrt(std::numbers::pi)).epsilon(1e-13));
}

TEST_CASE("sphere areas") {
  CHECK(sphere_area(1) == doctest::Approx(2.0).epsilon(1e-14));
  CHECK(sphere_area(2) == doctest::Approx(2 * std::numbers::pi).epsilon(1e-14));
  CHECK(sphere_area(3) == doctest::Approx(4 * std::numbers::pi).epsilon(1e-14));
  CHECK(sphere_area(4) == doctest::Approx(2 * std::numbers::pi * std::numbers::pi).epsilon(1e-14));
}

TEST_CASE("d_alpha closed form") {
  // alpha = 1, d = 1: 2 Gamma(1) / (Gamma(1/2)^2) = 2 / pi
  CHECK(stable_normalizer(1.0, 1) == doctest::Approx(2.0 / std::numbers::pi).epsilon(1e-14));
  for (int d : {1, 2, 3, 5}) {
    for (double a : {1.1, 1.5, 1.9}) {
      const double oracle = a * std::pow(2.0, a) * gamma_series((d + a) / 2) /
                            (gamma_series(d / 2.0) * gamma_series((2 - a) / 2));
      CHECK(stable_normalizer(a, d) == doctest::Approx(oracle).epsilon(1e-10));
    }
  }
}

TEST_CASE("stable constants satisfy their invariants") {
  const StableParams p = stable_constants(1.5, 2);
  CHECK(p.alpha == 1.5);
  CHECK(p.dim == 2);
  CHECK(p.d_alpha == doctest::Approx(stable_normalizer(1.5, 2)).epsilon(1e-15));
  CHECK(p.sphere_area == doctest::Approx(2 * std::numbers::pi).epsilon(1e-15));
  CHECK(p.sigma == doctest::Approx(std::pow(1.5 / (p.sphere_area * p.d_alpha), 1 / 1.5)).epsilon(1e-15));
  CHECK(p.levy_density == doctest::Approx(p.d_alpha / p.sphere_area).epsilon(1e-15));
  CHECK(p.em_sigma == doctest::Approx(std::pow(1.5 / p.d_alpha, 1 / 1.5)).epsilon(1e-14));
}

TEST_CASE("levy density matches the one-dimensional stable law") {
  // symmetric stable with E exp(i l Z) = exp(-|l|^a) has Levy density
  // c |z|^{-1-a}, c = Gamma(1 + a) sin(pi a / 2) / pi
  for (double a : {1.2, 1.5, 1.8}) {
    const double c = gamma_series(1 + a) * std::sin(std::numbers::pi * a / 2) / std::numbers::pi;
    CHECK(stable_constants(a, 1).levy_density == doctest::Approx(c).epsilon(1e-10));
  }
}

TEST_CASE("stable constants reject bad input") {
  CHECK_THROWS_AS(stable_constants(1.0, 1), std::domain_error);
  CHECK_THROWS_AS(stable_constants(2.0, 1), std::domain_error);
  CHECK_THROWS_AS(stable_constants(1.5, 0), std::invalid_argument);
}

TEST_CASE("gaussian vectors") {
  RngStream s(3, 0);
  CHECK(gaussian_vector(s, 3).size() == 3);
  CHECK_THROWS_AS(gaussian_vector(s, 0), std::invalid_argument);
  const int m = 1000000;
  double sum = 0.0, sum2 = 0.0;
  for (int i = 0; i < m; ++i) {
    const double x = gaussian_vector(s, 1)[0];
    sum += x;
    sum2 += x * x;
  }
  const double mean = sum / m;
  CHECK(std::abs(mean) < 4.0 / std::sqrt(m));
  CHECK(std::abs(sum2 / m - mean * mean - 1.0) < 0.01);
}

TEST_CASE("positive stable draws have Laplace transform exp(-u^a)") {
  RngStream s(4, 0);
  const double a = 0.75;
  const int m = 200000;
  double acc = 0.0;
  for (int i = 0; i < m; ++i) acc += std::exp(-positive_stable(s, a));
  CHECK(std::abs(acc / m - std::exp(-1.0)) < 4.0 * 0.5 / std::sqrt(m));
}

TEST_CASE("stable characteristic function") {
  const std::size_t m = 1000000;
  CHECK(empirical_cf(stable_constants(1.5, 1), 0.0, 1000, RngStream(1, 0)) == 1.0);
  CHECK(std::abs(empirical_cf(stable_constants(1.5, 1), 1.0, m, RngStream(2, 0)) - std::exp(-1.0)) < 0.005);
  CHECK(std::abs(empirical_cf(stable_constants(1.5, 2), 2.0, m, RngStream(3, 0)) - std::exp(-std::pow(2.0, 1.5))) <
        3.0 / std::sqrt(static_cast<double>(m)));
}

TEST_CASE("stable vector direction is rotation invariant") {
  const StableParams p = stable_constants(1.5, 2);
  RngStream s(5, 0);
  const int m = 200000;
  double c1 = 0.0, c2 = 0.0;
  for (int i = 0; i < m; ++i) {
    const VectorState z = stable_vector(s, p);
    c1 += std::cos(z[0]);
    c2 += std::cos((z[0] + z[1]) / std::sqrt(2.0));
  }
  CHECK(std::abs(c1 / m - c2 / m) < 6.0 / std::sqrt(m));
}

TEST_CASE("pareto radius") {
  CHECK(pareto_radius(0.25, 2.0) == doctest::Approx(2.0).epsilon(1e-15));
  const StableParams p = stable_constants(1.5, 1);
  RngStream s(6, 0);
  const int m = 1000000;
  int above2 = 0;
  for (int i = 0; i < m; ++i) {
    const double r = std::abs(pareto_vector(s, p)[0]);
    REQUIRE(r > 1.0);
    above2 += r > 2.0;
  }
  CHECK(std::abs(static_cast<double>(above2) / m - std::pow(2.0, -1.5)) < 0.002);
}

TEST_CASE("pareto direction is uniform") {
  for (int d : {1, 3}) {
    const StableParams p = stable_constants(1.5, d);
    RngStream s(7, static_cast<std::uint64_t>(d));
    const int m = 200000;
    VectorState mean = VectorState::Zero(d);
    for (int i = 0; i < m; ++i) {
      const VectorState z = pareto_vector(s, p);
      REQUIRE(z.norm() > 1.0);
      mean += z / z.norm();
    }
    mean /= m;
    CHECK(mean.norm() < 4.0 * std::sqrt(static_cast<double>(d) / m));
  }
}

TEST_CASE("pareto KS audit passes at the 1% level") {
  for (int d : {1, 2}) {
    const ParetoAudit a = pareto_radius_audit(stable_constants(1.5, d), 100000, RngStream(8, 0));
    CHECK(a.support_violations == 0);
    CHECK(a.ks_statistic < a.critical_1pct);
  }
}

TEST_CASE("allocation-free forms reproduce the vector forms") {
  const StableParams p = stable_constants(1.3, 3);
  RngStream a(9, 0), b(9, 0);
  std::vector<double> buf(3);
  pareto_into(a, p, buf);
  const VectorState z = pareto_vector(b, p);
  for (int i = 0; i < 3; ++i) CHECK(buf[static_cast<std::size_t>(i)] == z[i]);
  stable_into(a, p, buf);
  const VectorState w = stable_vector(b, p);
  for (int i = 0; i < 3; ++i) CHECK(buf[static_cast<std::size_t>(i)] == w[i]);
}
