#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>

#include "markov_approx/normal_clt.hpp"

using namespace markov_approx;

namespace {

CltConfig config(int d, Innovation inn, std::size_t paths, std::vector<int> grid = {4, 16}) {
  CltConfig c;
  c.dim = d;
  c.innovation = inn;
  c.n_paths = paths;
  c.n_grid = std::move(grid);
  return c;
}

// integral of |F - Phi| for a discrete law given by sorted atoms and weights
double discrete_vs_normal(const std::vector<double>& atoms, const std::vector<double>& weights) {
  auto phi = [](double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); };
  double total = 0.0, cdf = 0.0;
  const double h = 1e-4;
  std::size_t next = 0;
  for (double x = -12.0; x < 12.0; x += h) {
    while (next < atoms.size() && atoms[next] <= x) cdf += weights[next++];
    total += std::abs(cdf - phi(x + h / 2)) * h;
  }
  return total;
}

}  // namespace

TEST_CASE("innovation names") {
  for (auto i : {Innovation::kRademacher, Innovation::kUniformScaled, Innovation::kCenteredExponential,
                 Innovation::kGaussian}) {
    CHECK(parse_innovation(to_string(i)) == i);
  }
  CHECK_THROWS_AS(parse_innovation("cauchy"), std::invalid_argument);
}

TEST_CASE("partial sum of one term is the innovation") {
  const auto c = config(3, Innovation::kUniformScaled, 1);
  RngStream a(1, 0), b(1, 0);
  CHECK(partial_sum(c, 1, a) == draw_innovation(c, b));
  CHECK_THROWS_AS(partial_sum(c, 0, a), std::invalid_argument);
}

TEST_CASE("Rademacher S_4 has the binomial law on {-2, ..., 2}") {
  const auto c = config(1, Innovation::kRademacher, 160000);
  const double expect[5] = {1 / 16.0, 4 / 16.0, 6 / 16.0, 4 / 16.0, 1 / 16.0};
  RngStream s(2, 0);
  std::map<double, int> direct;
  for (int i = 0; i < 160000; ++i) direct[partial_sum(c, 4, s)[0]]++;
  const SampleSet bulk = sample_partial_sums(c, 4, RngStream(3, 0));
  std::map<double, int> fast;
  for (std::size_t j = 0; j < bulk.size(); ++j) fast[bulk.points(0, static_cast<Eigen::Index>(j))]++;
  for (const auto* counts : {&direct, &fast}) {
    CHECK(counts->size() == 5);
    int k = 0;
    for (const auto& [value, n] : *counts) {
      CHECK(value == k - 2);
      const double p = expect[k];
      CHECK(std::abs(n / 160000.0 - p) < 4 * std::sqrt(p * (1 - p) / 160000.0));
      ++k;
    }
  }
}

TEST_CASE("partial sums are standardized") {
  for (auto inn : {Innovation::kRademacher, Innovation::kUniformScaled, Innovation::kCenteredExponential,
                   Innovation::kGaussian}) {
    const auto c = config(3, inn, 100000);
    for (int n : {1, 7, 100}) {
      const SampleSet s = sample_partial_sums(c, n, RngStream(4, static_cast<std::uint64_t>(n)));
      const Eigen::VectorXd mean = s.points.rowwise().mean();
      const Matrix centered = s.points.colwise() - mean;
      const Matrix cov = centered * centered.transpose() / static_cast<double>(s.size() - 1);
      CHECK(mean.cwiseAbs().maxCoeff() < 4.0 / std::sqrt(100000.0));
      // fourth moments are at most 9 for these laws
      CHECK((cov - Matrix::Identity(3, 3)).cwiseAbs().maxCoeff() < 4.0 * std::sqrt(9.0 / 100000.0));
    }
  }
}

TEST_CASE("Gaussian norm moments") {
  CHECK(expected_gaussian_norm(1) == doctest::Approx(std::sqrt(2.0 / std::numbers::pi)).epsilon(1e-14));
  CHECK(expected_gaussian_norm(1) == doctest::Approx(0.79788).epsilon(1e-5));
  CHECK(expected_gaussian_norm(3) == doctest::Approx(2.0 * std::sqrt(2.0 / std::numbers::pi)).epsilon(1e-14));
  CHECK_THROWS_AS(expected_gaussian_norm(0), std::invalid_argument);
}

TEST_CASE("innovation moments") {
  RngStream s(5, 0);
  const auto r = innovation_moments(Innovation::kRademacher, 1, s);
  CHECK(r.abs1 == 1.0);
  CHECK(r.abs3 == 1.0);
  CHECK(innovation_moments(Innovation::kRademacher, 4, s).abs3 == doctest::Approx(8.0));
  for (auto inn : {Innovation::kUniformScaled, Innovation::kCenteredExponential, Innovation::kGaussian}) {
    const auto exact = innovation_moments(inn, 1, s);
    CHECK(exact.exact);
    const auto c = config(1, inn, 1);
    const int n = 1000000;
    double m1 = 0.0, m3 = 0.0;
    for (int i = 0; i < n; ++i) {
      const double x = std::abs(draw_innovation(c, s)[0]);
      m1 += x;
      m3 += x * x * x;
    }
    CHECK(m1 / n == doctest::Approx(exact.abs1).epsilon(0.005));
    CHECK(m3 / n == doctest::Approx(exact.abs3).epsilon(0.02));
  }
  const auto mc = innovation_moments(Innovation::kUniformScaled, 3, s, 200000);
  CHECK_FALSE(mc.exact);
  // E|xi|^2 = 3 bounds E|xi| from above
  CHECK(mc.abs1 < std::sqrt(3.0));
  CHECK(mc.abs1 > 1.5);
}

TEST_CASE("theorem bound") {
  const double eb = expected_gaussian_norm(1);
  CHECK(theorem_bound(1, 1, eb, 1.0, 1.0) == doctest::Approx(5.0 / 3.0 * eb + 4.0 / 3.0));
  for (int n : {4, 100}) {
    CHECK(theorem_bound(1, n, eb, 1.0, 1.0) ==
          doctest::Approx((5.0 / 3.0 * 0.797884560802865 + 4.0 / 3.0) * (1 + std::log(n)) / std::sqrt(n)));
  }
  CHECK_THROWS_AS(theorem_bound(1, 0, eb, 1, 1), std::invalid_argument);
}

TEST_CASE("gap of a Gaussian innovation is the estimator floor") {
  const auto c = config(1, Innovation::kGaussian, 50000, {4, 16});
  const CltGap g = measure_gap(c, 16, RngStream(6, 0));
  CHECK(g.w1.value < 3 * g.floor + 3 * g.w1.std_error);
  CHECK(g.within_bound);
  CHECK_THROWS_AS(measure_gap(c, 5, RngStream(6, 0)), std::invalid_argument);
}

TEST_CASE("Rademacher n = 4 gap matches the exact discrete transport cost") {
  const double exact = discrete_vs_normal({-2, -1, 0, 1, 2}, {1 / 16.0, 4 / 16.0, 6 / 16.0, 4 / 16.0, 1 / 16.0});
  const auto c = config(1, Innovation::kRademacher, 200000, {4});
  const CltGap g = measure_gap(c, 4, RngStream(7, 0));
  CHECK(std::abs(g.w1.value - exact) < 3 * g.w1.std_error + 2 * g.floor);
  CHECK(g.within_bound);
}

TEST_CASE("Rademacher gap shrinks with n") {
  const auto c = config(1, Innovation::kRademacher, 100000, {10, 100});
  CHECK(measure_gap(c, 100, RngStream(8, 0)).w1.value < measure_gap(c, 10, RngStream(9, 0)).w1.value);
}

TEST_CASE("three-dimensional gaps respect the bound") {
  const auto c = config(3, Innovation::kCenteredExponential, 20000, {4, 64});
  for (int n : {4, 64}) {
    const CltGap g = measure_gap(c, n, RngStream(10, static_cast<std::uint64_t>(n)), 50);
    CHECK(g.within_bound);
    CHECK(g.w1.method == W1Method::kSliced);
  }
}
