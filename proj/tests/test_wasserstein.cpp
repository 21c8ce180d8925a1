#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <numbers>
#include <numeric>
#include <sstream>

#include "markov_approx/wasserstein.hpp"

using namespace markov_approx;

namespace {

SampleSet from_rows(std::initializer_list<std::initializer_list<double>> pts) {
  const int d = static_cast<int>(pts.begin()->size());
  Matrix m(d, static_cast<Eigen::Index>(pts.size()));
  Eigen::Index j = 0;
  for (const auto& p : pts) {
    int i = 0;
    for (double v : p) m(i++, j) = v;
    ++j;
  }
  return make_sample_set(m);
}

SampleSet gaussian_set(int d, int n, RngStream& s, double shift = 0.0) {
  Matrix m(d, n);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < d; ++i) m(i, j) = s.normal() + shift;
  return make_sample_set(m);
}

double brute_force(const SampleSet& a, const SampleSet& b) {
  const int n = static_cast<int>(a.size());
  std::vector<int> perm(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), 0);
  double best = std::numeric_limits<double>::infinity();
  do {
    double c = 0.0;
    for (int i = 0; i < n; ++i) c += (a.points.col(i) - b.points.col(perm[static_cast<std::size_t>(i)])).norm();
    best = std::min(best, c / n);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

// W1 between the empirical law of `a` and N(0, 1): integral of |F_a - Phi|.
double w1_to_standard_normal(std::vector<double> a) {
  std::sort(a.begin(), a.end());
  const double n = static_cast<double>(a.size());
  auto phi = [](double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); };
  // integral of Phi over (-inf, x] = x Phi(x) + pdf(x)
  auto big_phi = [&](double x) { return x * phi(x) + std::exp(-x * x / 2) / std::sqrt(2 * std::numbers::pi); };
  auto integral_abs = [&](double lo, double hi, double level) {
    // integral over [lo, hi] of |level - Phi|, split where Phi crosses level
    auto part = [&](double l, double h) { return level * (h - l) - (big_phi(h) - big_phi(l)); };
    if (level <= 0.0) return big_phi(hi) - big_phi(lo);
    if (level >= 1.0) return part(lo, hi);
    double cross = 0.0, lo_b = -40.0, hi_b = 40.0;
    for (int it = 0; it < 200; ++it) {
      cross = 0.5 * (lo_b + hi_b);
      (phi(cross) < level ? lo_b : hi_b) = cross;
    }
    const double c = std::clamp(cross, lo, hi);
    return part(lo, c) - part(c, hi);
  };
  double total = integral_abs(-40.0, a.front(), 0.0);
  for (std::size_t i = 0; i + 1 < a.size(); ++i) total += integral_abs(a[i], a[i + 1], (i + 1) / n);
  total += integral_abs(a.back(), 40.0, 1.0);
  return total;
}

}  // namespace

TEST_CASE("make_sample_set rejects empty input") {
  CHECK_THROWS_AS(make_sample_set(Matrix(1, 0)), std::invalid_argument);
  CHECK_THROWS_AS(make_sample_set(Matrix(0, 3)), std::invalid_argument);
}

TEST_CASE("exact 1-D examples") {
  const auto a = from_rows({{0}, {2}});
  const auto b = from_rows({{1}, {3}});
  CHECK(w1_exact_1d(a, a).value == 0.0);
  CHECK(w1_exact_1d(a, b).value == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(w1_exact_1d(from_rows({{0}}), from_rows({{5}})).value == 5.0);
  CHECK_THROWS_AS(w1_exact_1d(from_rows({{0, 1}}), from_rows({{0, 1}})), std::invalid_argument);
}

TEST_CASE("unequal sizes integrate the CDF difference") {
  // {0} vs {0, 2}: |F_a - F_b| = 1/2 on [0, 2)
  CHECK(w1_exact_1d(from_rows({{0}}), from_rows({{0}, {2}})).value == doctest::Approx(1.0));
  // {0, 1, 2} vs {0, 2}: 1/6 on [0, 1) and on [1, 2)
  CHECK(w1_exact_1d(from_rows({{0}, {1}, {2}}), from_rows({{0}, {2}})).value == doctest::Approx(1.0 / 3.0));
  RngStream s(1, 0);
  const auto a = gaussian_set(1, 300, s);
  // duplicating every point leaves the law unchanged
  Matrix twice(1, 600);
  twice << a.points, a.points;
  CHECK(w1_exact_1d(a, make_sample_set(twice)).value < 1e-12);
}

TEST_CASE("assignment examples") {
  CHECK(w1_assignment(from_rows({{0, 0}}), from_rows({{3, 4}})).value == doctest::Approx(5.0));
  RngStream s(2, 0);
  const auto a = gaussian_set(2, 50, s);
  CHECK(w1_assignment(a, a).value == 0.0);
  CHECK_THROWS_AS(w1_assignment(a, gaussian_set(2, 49, s)), std::invalid_argument);
  CHECK_THROWS_AS(w1_assignment(gaussian_set(1, 4097, s), gaussian_set(1, 4097, s)), std::invalid_argument);
}

TEST_CASE("assignment equals brute force on small instances") {
  RngStream s(3, 0);
  for (int t = 0; t < 200; ++t) {
    const int n = 3 + t % 4;
    const int d = 1 + t % 3;
    const auto a = gaussian_set(d, n, s);
    const auto b = gaussian_set(d, n, s, 0.5);
    CHECK(std::abs(w1_assignment(a, b).value - brute_force(a, b)) < 1e-12);
  }
}

TEST_CASE("solve_assignment returns a permutation") {
  RngStream s(4, 0);
  Matrix cost(40, 40);
  for (int i = 0; i < 40; ++i)
    for (int j = 0; j < 40; ++j) cost(i, j) = s.uniform();
  auto p = solve_assignment(cost);
  std::sort(p.begin(), p.end());
  for (int i = 0; i < 40; ++i) CHECK(p[static_cast<std::size_t>(i)] == i);
}

TEST_CASE("1-D exact and assignment agree") {
  RngStream s(5, 0);
  for (int t = 0; t < 20; ++t) {
    const auto a = gaussian_set(1, 64, s);
    const auto b = gaussian_set(1, 64, s, 0.3);
    CHECK(std::abs(w1_exact_1d(a, b).value - w1_assignment(a, b).value) < 1e-12);
  }
}

TEST_CASE("metric properties") {
  RngStream s(6, 0);
  for (int t = 0; t < 100; ++t) {
    const int d = 1 + t % 3;
    const auto a = gaussian_set(d, 8, s);
    const auto b = gaussian_set(d, 8, s, 1.0);
    const auto c = gaussian_set(d, 8, s, -0.5);
    const double ab = w1_assignment(a, b).value;
    CHECK(ab == w1_assignment(b, a).value);
    CHECK(w1_assignment(a, a).value == 0.0);
    CHECK(ab <= w1_assignment(a, c).value + w1_assignment(c, b).value + 1e-12);
  }
}

TEST_CASE("sliced W1 of a translation") {
  RngStream s(7, 0);
  const auto a = gaussian_set(3, 200, s);
  SampleSet b = a;
  Eigen::Vector3d c(1.0, -2.0, 0.5);
  b.points.colwise() += c;
  RngStream proj(8, 0);
  CHECK(w1_sliced(a, a, 16, proj).value == 0.0);
  const int n_proj = 4000;
  const W1Estimate est = w1_sliced(a, b, n_proj, proj);
  // E|<theta, c>| over uniform theta on S^2 is |c| / 2
  const double expect = c.norm() / 2.0;
  CHECK(std::abs(est.value - expect) < 4.0 * c.norm() * std::sqrt(1.0 / 12.0 / n_proj));
  CHECK(est.n_projections == n_proj);
  CHECK_THROWS_AS(w1_sliced(from_rows({{0}}), from_rows({{1}}), 4, proj), std::invalid_argument);
}

TEST_CASE("calibrated sliced W1 tracks the assignment value") {
  RngStream s(9, 0);
  const auto a = gaussian_set(2, 1024, s);
  const auto b = gaussian_set(2, 1024, s, 0.7);
  RngStream proj(10, 0);
  const double factor = calibrate_sliced(a, b, 512, 64, proj);
  RngStream proj2(11, 0);
  const SampleSet a512 = make_sample_set(a.points.rightCols(512));
  const SampleSet b512 = make_sample_set(b.points.rightCols(512));
  const double sliced = factor * w1_sliced(a512, b512, 64, proj2).value;
  const double exact = w1_assignment(a512, b512).value;
  CHECK(std::abs(sliced - exact) <= 0.15 * exact);
}

TEST_CASE("empirical W1 against N(0, 1) from quantile integration") {
  // S_4 of Rademacher signs has law {-2,-1,0,1,2} with weights {1,4,6,4,1}/16;
  // 16 equally weighted atoms represent it exactly
  const std::vector<double> atoms = {-2, -1, -1, -1, -1, 0, 0, 0, 0, 0, 0, 1, 1, 1, 1, 2};
  const double exact = w1_to_standard_normal(atoms);
  CHECK(exact > 0.2);
  CHECK(exact < 0.3);
  RngStream s(12, 0);
  Matrix draws(1, 400000), gauss(1, 400000);
  for (int j = 0; j < 400000; ++j) {
    draws(0, j) = atoms[static_cast<std::size_t>(s() % 16)];
    gauss(0, j) = s.normal();
  }
  const double est = w1_exact_1d(make_sample_set(draws), make_sample_set(gauss)).value;
  CHECK(std::abs(est - exact) < 0.01);
}

TEST_CASE("bootstrap standard errors") {
  const auto atoms = from_rows({{1}, {1}, {1}, {1}});
  RngStream s(13, 0);
  auto w1 = [](const SampleSet& x, const SampleSet& y) { return w1_exact_1d(x, y).value; };
  CHECK(bootstrap_stderr(atoms, atoms, w1, 50, s) == 0.0);
  CHECK_THROWS_AS(bootstrap_stderr(atoms, atoms, w1, 49, s), std::invalid_argument);

  RngStream g(14, 0);
  const auto small_a = gaussian_set(1, 500, g), small_b = gaussian_set(1, 500, g, 0.5);
  const auto big_a = gaussian_set(1, 2000, g), big_b = gaussian_set(1, 2000, g, 0.5);
  RngStream r1(15, 0), r2(15, 0), r3(16, 0);
  const double se_small = bootstrap_stderr(small_a, small_b, w1, 200, r1);
  CHECK(se_small == bootstrap_stderr(small_a, small_b, w1, 200, r2));
  CHECK(bootstrap_stderr(big_a, big_b, w1, 200, r3) < se_small);
}

TEST_CASE("estimate_w1 fast paths agree with the direct estimators") {
  RngStream g(17, 0);
  const auto a1 = gaussian_set(1, 3000, g), b1 = gaussian_set(1, 3000, g, 0.2);
  W1Options o;
  o.bootstrap_resamples = 100;
  RngStream s(18, 0);
  const W1Estimate e = estimate_w1(a1, b1, o, s);
  CHECK(e.value == w1_exact_1d(a1, b1).value);
  CHECK(e.std_error > 0.0);
  CHECK(e.std_error < 0.05);

  const auto a3 = gaussian_set(3, 2000, g), b3 = gaussian_set(3, 2000, g, 0.2);
  o.method = W1Method::kMarginalSum;
  RngStream s2(19, 0);
  const W1Estimate m = estimate_w1(a3, b3, o, s2);
  double marg = 0.0;
  for (int i = 0; i < 3; ++i) {
    marg += w1_exact_1d(make_sample_set(a3.points.row(i)), make_sample_set(b3.points.row(i))).value;
  }
  CHECK(m.value == doctest::Approx(marg).epsilon(1e-12));

  o.method = W1Method::kSliced;
  RngStream s3(20, 0), s4(20, 0);
  const W1Estimate sl = estimate_w1(a3, b3, o, s3);
  CHECK(sl.value == estimate_w1(a3, b3, o, s4).value);
  CHECK(sl.n_projections == 64);

  o.method = W1Method::kExact1d;
  CHECK_THROWS_AS(estimate_w1(a3, b3, o, s3), std::invalid_argument);
}

TEST_CASE("equivariance") {
  RngStream g(21, 0);
  const auto a = gaussian_set(2, 16, g), b = gaussian_set(2, 16, g, 1.0);
  SampleSet at = a, bt = b;
  at.points.colwise() += Eigen::Vector2d(0.5, 0.25);
  bt.points.colwise() += Eigen::Vector2d(0.5, 0.25);
  CHECK(std::abs(w1_assignment(at, bt).value - w1_assignment(a, b).value) < 1e-12);
  SampleSet as = a, bs = b;
  as.points *= 4.0;
  bs.points *= 4.0;
  CHECK(w1_assignment(as, bs).value == doctest::Approx(4.0 * w1_assignment(a, b).value).epsilon(1e-14));
}

TEST_CASE("method names round-trip") {
  for (auto m : {W1Method::kExact1d, W1Method::kAssignment, W1Method::kSliced, W1Method::kMarginalSum}) {
    CHECK(parse_w1_method(to_string(m)) == m);
  }
  CHECK_THROWS_AS(parse_w1_method("sinkhorn"), std::invalid_argument);
}

TEST_CASE("sample files round-trip") {
  RngStream g(22, 0);
  SampleSet a = gaussian_set(3, 17, g);
  a.meta.seed = 99;
  std::stringstream csv;
  write_samples_csv(csv, a);
  const SampleSet c = read_samples_csv(csv);
  CHECK(c.points == a.points);

  std::stringstream bin;
  write_samples_binary(bin, a);
  const SampleSet b = read_samples_binary(bin);
  CHECK(b.points == a.points);
  CHECK(b.meta.seed == 99);

  const auto dir = std::filesystem::temp_directory_path();
  save_samples(dir / "ma_samples.bin", a);
  save_samples(dir / "ma_samples.csv", a);
  CHECK(load_samples(dir / "ma_samples.bin").points == a.points);
  CHECK(load_samples(dir / "ma_samples.csv").points == a.points);

  std::istringstream bad("dim,count\n2,3\n1,2\n");
  CHECK_THROWS(read_samples_csv(bad));
}
